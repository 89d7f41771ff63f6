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

#ifndef DTPCA_RNG_HPP_
#define DTPCA_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "dtpca/types.hpp"

namespace dtpca {

/// Counter-based generator: output i of stream k is mix64(k + i*phi), the
/// SplitMix64 finalizer applied to an affine counter. Streams are derived
/// by hashing a (seed, path...) tuple, so independent substreams for
/// (machine, mode, purpose) never overlap and generation order cannot leak
/// between machines. Everything is a pure function of (key, counter).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Child stream addressed by `tag`; the parent's counter is unaffected.
  CounterRng split(std::uint64_t tag) const;

  std::uint64_t next_u64();

  /// Uniform on (0, 1].
  double next_unit();

  /// Standard normal via Box-Muller (one spare cached).
  double next_normal();

  /// i.i.d. N(0,1) fills, row-major order.
  Matrix normal_matrix(std::size_t rows, std::size_t cols);
  DenseTensor normal_tensor(const std::vector<std::size_t>& dims);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// 64-bit finalizer (SplitMix64).
std::uint64_t mix64(std::uint64_t x);

/// Stream key for a seed and a hierarchical path, e.g.
/// derive_stream(seed, {kNoise, machine, mode}).
CounterRng derive_stream(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> path);

}  // namespace dtpca

#endif  // DTPCA_RNG_HPP_
