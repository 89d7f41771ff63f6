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

#ifndef DTPCA_SIMGEN_HPP_
#define DTPCA_SIMGEN_HPP_

#include <cstdint>
#include <vector>

#include "dtpca/rng.hpp"
#include "dtpca/runtime.hpp"

namespace dtpca {

enum class CoreMode { kSameCore, kDifferentCores };

/// Declarative scenario: J-mode cubic tensors of side p on L machines with
/// common rank r_u, individual rank r_v (0 = homogeneous), signal strength
/// lambda, and per-machine noise levels.
struct ScenarioConfig {
  std::size_t p = 50;
  std::size_t modes = 3;        // J
  std::size_t r_u = 3;
  std::size_t r_v = 0;
  double lambda = 1.0;
  std::vector<double> sigma{1.0};  // one entry broadcasts to all machines
  std::size_t machines = 1;        // L
  CoreMode core_mode = CoreMode::kDifferentCores;
  std::uint64_t seed = 0;

  double sigma_for(std::size_t machine) const;
  void validate() const;
};

/// Everything the generator knows: shared factors, per-machine individual
/// factors, cores, and noiseless tensors.
struct GroundTruth {
  std::vector<OrthonormalBasis> common;                   // [mode]
  std::vector<std::vector<OrthonormalBasis>> individual;  // [machine][mode]
  std::vector<DenseTensor> cores;                         // [machine]
  std::vector<DenseTensor> clean;                         // [machine]
};

struct Scenario {
  std::vector<MachineState> machines;
  GroundTruth truth;
};

/// Homogeneous design: core lambda * G~ / lambda_min(G~) from i.i.d. standard
/// normal G~ (lambda_min taken over all matricizations), factors from QR of
/// standard normal matrices, observations T* + sigma_l * noise. Requires
/// r_v = 0; deterministic in the seed.
Scenario gen_homogeneous(const ScenarioConfig& config);

/// Heterogeneous design: block-diagonal core with a common block scaled to
/// lambda_min = lambda and an individual block scaled to lambda_max =
/// lambda/2 (so the singular-value gap at position r_u is at least lambda/2),
/// individual factors from QR of (I - U U') * normal, cores shared or
/// independent per core_mode. Requires r_v >= 1.
Scenario gen_heterogeneous(const ScenarioConfig& config);

/// Smallest (largest) singular value over all matricizations of t.
double min_matricization_singular_value(const DenseTensor& t);
double max_matricization_singular_value(const DenseTensor& t);

/// Noise-aligned initialization for the rank-1, 3-mode model with
/// U_j = e_1 and scalar core lambda. Mode 2's initial vector is
/// (Q, z'/(lambda Q))' built from designated entries of each machine's own
/// noise, which correlates the initialization error with the noise and
/// pins the aggregated estimator at its second-order error floor. Errors
/// if 4 ||z||^2 / lambda^2 >= 1 for any machine (the construction does not
/// exist at such noise levels).
std::vector<FactorEstimates> adversarial_init(
    double lambda, const std::vector<DenseTensor>& noise);

/// ||T - T x_j P_j P_j'||_F / ||T||_F. Errors on a zero tensor.
double reconstruction_error(const std::vector<OrthonormalBasis>& bases,
                            const DenseTensor& t);

}  // namespace dtpca

#endif  // DTPCA_SIMGEN_HPP_
