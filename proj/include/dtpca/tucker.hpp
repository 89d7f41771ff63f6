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

#ifndef DTPCA_TUCKER_HPP_
#define DTPCA_TUCKER_HPP_

#include <optional>
#include <vector>

#include "dtpca/linalg.hpp"
#include "dtpca/types.hpp"

namespace dtpca {

/// Per-mode subspace estimates, optionally with the projected core
/// G = T x_1 U_1' ... x_J U_J'.
struct FactorEstimates {
  std::vector<OrthonormalBasis> factors;
  std::optional<DenseTensor> core;

  bool empty() const { return factors.empty(); }
};

/// Project t onto the factors' core space: t x_j U_j' for every mode.
DenseTensor project_core(const DenseTensor& t,
                         const std::vector<OrthonormalBasis>& factors);

/// T x_j P_j P_j' over every mode; a rank-0 basis annihilates the tensor.
DenseTensor project_onto_span(const DenseTensor& t,
                              const std::vector<OrthonormalBasis>& bases);

/// Reconstruct core x_1 U_1 ... x_J U_J.
DenseTensor reconstruct(const DenseTensor& core,
                        const std::vector<OrthonormalBasis>& factors);

/// Higher-order SVD: factor j is the top-r_j left singular basis of the
/// mode-j unfolding; the core is the projection of t.
FactorEstimates hosvd(const DenseTensor& t, const std::vector<std::size_t>& ranks);

struct HooiOptions {
  int max_iter = 50;
  double tol = 1e-8;  // max over modes of rho between successive factors
};

struct HooiReport {
  int iterations = 0;
  double last_change = 0.0;
};

/// Higher-order orthogonal iteration. Starts from hosvd and sweeps modes in
/// ascending order, each update using the latest factors of the other modes,
/// until the largest per-mode projection change drops below tol.
FactorEstimates hooi(const DenseTensor& t, const std::vector<std::size_t>& ranks,
                     const HooiOptions& options = {},
                     HooiReport* report = nullptr);

}  // namespace dtpca

#endif  // DTPCA_TUCKER_HPP_
