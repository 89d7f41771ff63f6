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

#ifndef DTPCA_TESTS_SUPPORT_FIXTURES_HPP_
#define DTPCA_TESTS_SUPPORT_FIXTURES_HPP_

#include <vector>

#include "dtpca/estimators.hpp"
#include "dtpca/simgen.hpp"
#include "dtpca/tucker.hpp"

namespace dtpca::fixtures {

// HOOI initialization on every machine. A short sweep budget is plenty for
// an initializer; protocols do their own refinement.
inline void init_all(std::vector<MachineState>& machines,
                     const std::vector<std::size_t>& ranks, int max_iter = 3) {
  for (MachineState& machine : machines) {
    machine.init_factors =
        hooi(machine.tensor, ranks, HooiOptions{.max_iter = max_iter});
  }
}

// Machine initialized with the exact truth (joint [U V] factors when
// individual components exist).
inline void init_exact(Scenario& scenario) {
  for (std::size_t l = 0; l < scenario.machines.size(); ++l) {
    FactorEstimates init;
    for (std::size_t j = 0; j < scenario.truth.common.size(); ++j) {
      if (scenario.truth.individual.empty() ||
          scenario.truth.individual[l].empty()) {
        init.factors.push_back(scenario.truth.common[j]);
      } else {
        const Matrix& u = scenario.truth.common[j].matrix();
        const Matrix& v = scenario.truth.individual[l][j].matrix();
        Matrix joint(u.rows, u.cols + v.cols);
        for (std::size_t i = 0; i < u.rows; ++i) {
          for (std::size_t k = 0; k < u.cols; ++k) joint(i, k) = u(i, k);
          for (std::size_t k = 0; k < v.cols; ++k) {
            joint(i, u.cols + k) = v(i, k);
          }
        }
        init.factors.push_back(OrthonormalBasis(std::move(joint)));
      }
    }
    scenario.machines[l].init_factors = std::move(init);
  }
}

inline ScenarioConfig homo_config(std::size_t p, std::size_t r, double lambda,
                                  double sigma, std::size_t machines,
                                  std::uint64_t seed) {
  ScenarioConfig config;
  config.p = p;
  config.r_u = r;
  config.lambda = lambda;
  config.sigma = {sigma};
  config.machines = machines;
  config.seed = seed;
  return config;
}

inline ScenarioConfig hetero_config(std::size_t p, std::size_t r_u,
                                    std::size_t r_v, double lambda,
                                    double sigma, std::size_t machines,
                                    CoreMode core_mode, std::uint64_t seed) {
  ScenarioConfig config;
  config.p = p;
  config.r_u = r_u;
  config.r_v = r_v;
  config.lambda = lambda;
  config.sigma = {sigma};
  config.machines = machines;
  config.core_mode = core_mode;
  config.seed = seed;
  return config;
}

}  // namespace dtpca::fixtures

#endif  // DTPCA_TESTS_SUPPORT_FIXTURES_HPP_
