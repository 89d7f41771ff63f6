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

#include "dtpca/rng.hpp"

#include <cmath>

namespace dtpca {

namespace {
constexpr std::uint64_t kPhi = 0x9e3779b97f4a7c15ULL;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

CounterRng CounterRng::split(std::uint64_t tag) const {
  return CounterRng(mix64(key_ + kPhi * (tag + 1)));
}

std::uint64_t CounterRng::next_u64() {
  counter_ += 1;
  return mix64(key_ + counter_ * kPhi);
}

double CounterRng::next_unit() {
  // 53 random bits, shifted into (0, 1].
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double CounterRng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = kTwoPi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Matrix CounterRng::normal_matrix(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = next_normal();
  return m;
}

DenseTensor CounterRng::normal_tensor(const std::vector<std::size_t>& dims) {
  DenseTensor t(dims);
  for (double& v : t.data) v = next_normal();
  return t;
}

CounterRng derive_stream(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix64(seed + kPhi);
  for (std::uint64_t element : path) {
    key = mix64(key ^ mix64(element + kPhi));
  }
  return CounterRng(key);
}

}  // namespace dtpca
