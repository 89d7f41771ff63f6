/*
 * Copyright 2026 The dtpca Authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DTPCA_RUNTIME_HPP_
#define DTPCA_RUNTIME_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dtpca/tucker.hpp"
#include "dtpca/types.hpp"

namespace dtpca {

/// One simulated machine. The tensor is private: protocols may only touch
/// it through a local operation evaluated on this machine, never directly
/// from the coordinator or another machine.
struct MachineState {
  std::size_t machine_id = 0;
  DenseTensor tensor;
  FactorEstimates init_factors;
  std::optional<double> noise_level_hint;
};

/// A serialized subspace in flight. 24-byte header
/// (magic "DTSM" | mode u32le | machine u64le | p u32le | r u32le)
/// followed by 8*p*r bytes of row-major f64le payload.
struct SubspaceMessage {
  std::size_t machine_id = 0;
  std::size_t mode = 0;
  OrthonormalBasis payload;
  std::size_t byte_size = 0;
};

constexpr std::size_t kSubspaceHeaderBytes = 24;

std::vector<std::uint8_t> encode_subspace(const SubspaceMessage& msg);
SubspaceMessage decode_subspace(const std::vector<std::uint8_t>& bytes);

/// Records every transfer between machines and the coordinator. Each
/// collective (one gather or one broadcast) forms one round.
class CommLedger {
 public:
  enum class Direction { kUpload, kDownload };

  struct Entry {
    std::size_t round = 0;
    Direction direction = Direction::kUpload;
    std::size_t machine_id = 0;
    std::size_t bytes = 0;
  };

  void record(Direction direction, std::size_t machine_id, std::size_t bytes);
  std::size_t begin_round();  // returns the new round id

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t total_upload_bytes() const { return upload_bytes_; }
  std::size_t total_download_bytes() const { return download_bytes_; }
  std::size_t rounds() const { return next_round_; }

 private:
  std::vector<Entry> entries_;
  std::size_t upload_bytes_ = 0;
  std::size_t download_bytes_ = 0;
  std::size_t next_round_ = 0;
};

using LocalSubspaceOp = std::function<OrthonormalBasis(const MachineState&)>;

/// One gather round: evaluates local_op on every machine, serializes each
/// result through the wire format, and returns the decoded messages in
/// ascending machine_id order. Machines' tensors never leave the local_op.
std::vector<SubspaceMessage> gather_subspaces(
    const std::vector<MachineState>& machines, std::size_t mode,
    const LocalSubspaceOp& local_op, CommLedger& ledger);

/// One broadcast round: every machine receives an identical decoded copy
/// (returned in machine order); the ledger records one download per machine.
std::vector<OrthonormalBasis> broadcast(
    const OrthonormalBasis& basis, std::size_t mode,
    const std::vector<MachineState>& machines, CommLedger& ledger);

/// Exact wire size of a p x r subspace message.
inline std::size_t subspace_message_bytes(std::size_t p, std::size_t r) {
  return kSubspaceHeaderBytes + 8 * p * r;
}

}  // namespace dtpca

#endif  // DTPCA_RUNTIME_HPP_
