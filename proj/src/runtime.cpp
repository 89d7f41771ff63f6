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

#include "dtpca/runtime.hpp"

#include <algorithm>
#include <cstring>

namespace dtpca {

namespace {

constexpr char kMessageMagic[4] = {'D', 'T', 'S', 'M'};

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_subspace(const SubspaceMessage& msg) {
  const Matrix& m = msg.payload.matrix();
  std::vector<std::uint8_t> out;
  out.reserve(kSubspaceHeaderBytes + 8 * m.data.size());
  out.insert(out.end(), kMessageMagic, kMessageMagic + 4);
  put_u32le(out, static_cast<std::uint32_t>(msg.mode));
  put_u64le(out, static_cast<std::uint64_t>(msg.machine_id));
  put_u32le(out, static_cast<std::uint32_t>(m.rows));
  put_u32le(out, static_cast<std::uint32_t>(m.cols));
  for (double v : m.data) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64le(out, bits);
  }
  return out;
}

SubspaceMessage decode_subspace(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kSubspaceHeaderBytes ||
      std::memcmp(bytes.data(), kMessageMagic, 4) != 0) {
    throw InvalidArgument("decode_subspace: bad header");
  }
  SubspaceMessage msg;
  msg.mode = get_u32le(bytes.data() + 4);
  msg.machine_id = static_cast<std::size_t>(get_u64le(bytes.data() + 8));
  const std::size_t p = get_u32le(bytes.data() + 16);
  const std::size_t r = get_u32le(bytes.data() + 20);
  if (bytes.size() != kSubspaceHeaderBytes + 8 * p * r) {
    throw InvalidArgument("decode_subspace: payload size mismatch");
  }
  Matrix m(p, r);
  for (std::size_t i = 0; i < p * r; ++i) {
    std::uint64_t bits = get_u64le(bytes.data() + kSubspaceHeaderBytes + 8 * i);
    std::memcpy(&m.data[i], &bits, 8);
  }
  msg.payload = OrthonormalBasis(std::move(m));
  msg.byte_size = bytes.size();
  return msg;
}

void CommLedger::record(Direction direction, std::size_t machine_id,
                        std::size_t bytes) {
  const std::size_t round = next_round_ == 0 ? 0 : next_round_ - 1;
  entries_.push_back(Entry{round, direction, machine_id, bytes});
  if (direction == Direction::kUpload) {
    upload_bytes_ += bytes;
  } else {
    download_bytes_ += bytes;
  }
}

std::size_t CommLedger::begin_round() { return next_round_++; }

std::vector<SubspaceMessage> gather_subspaces(
    const std::vector<MachineState>& machines, std::size_t mode,
    const LocalSubspaceOp& local_op, CommLedger& ledger) {
  if (!machines.empty()) {
    const auto& dims = machines.front().tensor.dims;
    for (const MachineState& m : machines) {
      if (m.tensor.dims != dims) {
        throw InvalidArgument("gather_subspaces: machines disagree on dims");
      }
    }
  }
  ledger.begin_round();
  std::vector<SubspaceMessage> messages;
  messages.reserve(machines.size());
  for (const MachineState& machine : machines) {
    SubspaceMessage out;
    out.machine_id = machine.machine_id;
    out.mode = mode;
    out.payload = local_op(machine);
    // Round-trip through the wire format so byte counts are honest and the
    // coordinator only ever sees the decoded copy.
    std::vector<std::uint8_t> wire = encode_subspace(out);
    SubspaceMessage decoded = decode_subspace(wire);
    ledger.record(CommLedger::Direction::kUpload, machine.machine_id,
                  decoded.byte_size);
    messages.push_back(std::move(decoded));
  }
  std::sort(messages.begin(), messages.end(),
            [](const SubspaceMessage& a, const SubspaceMessage& b) {
              return a.machine_id < b.machine_id;
            });
  return messages;
}

std::vector<OrthonormalBasis> broadcast(const OrthonormalBasis& basis,
                                        std::size_t mode,
                                        const std::vector<MachineState>& machines,
                                        CommLedger& ledger) {
  if (machines.empty()) return {};
  ledger.begin_round();
  SubspaceMessage msg;
  msg.mode = mode;
  msg.payload = basis;
  const std::vector<std::uint8_t> wire = encode_subspace(msg);
  std::vector<OrthonormalBasis> copies;
  copies.reserve(machines.size());
  for (const MachineState& machine : machines) {
    SubspaceMessage decoded = decode_subspace(wire);
    ledger.record(CommLedger::Direction::kDownload, machine.machine_id,
                  decoded.byte_size);
    copies.push_back(std::move(decoded.payload));
  }
  return copies;
}

}  // namespace dtpca
