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

#ifndef DTPCA_INFERENCE_HPP_
#define DTPCA_INFERENCE_HPP_

#include <vector>

#include "dtpca/estimators.hpp"

namespace dtpca {

/// Centering and scaling of the squared projection distance rho^2 for the
/// two-iteration aggregated estimator:
///   bias = 2 sigma^2 L^-1 p_j ||Lambda_j^-1||_F^2
///   sd   = sqrt(8 p_j) sigma^2 L^-1 ||Lambda_j^-2||_F
struct InferenceSummary {
  std::size_t mode = 0;
  double bias = 0.0;
  double sd = 0.0;
  double sigma_hat = 0.0;
  std::vector<double> lambda_hat;
};

/// Top-r_j singular values (nonincreasing) of the machine's tensor
/// projected on the fitted bases of every mode but `mode`; r_j is the
/// fitted mode-`mode` rank.
std::vector<double> estimate_lambda(const MachineState& machine,
                                    const std::vector<OrthonormalBasis>& fitted,
                                    std::size_t mode);

InferenceSummary inference_summary(double sigma_hat,
                                   const std::vector<double>& lambda_hat,
                                   std::size_t p_j, std::size_t num_machines,
                                   std::size_t mode = 0);

/// Membership test for the level-(1-xi) confidence region:
/// |rho^2(U_hat, candidate) - bias| <= z_{1-xi/2} * sd, up to a small
/// floating-point slack that only matters when sd underflows the rounding
/// noise of rho^2 itself (the noiseless degenerate case).
bool confidence_region_contains(const OrthonormalBasis& u_hat,
                                const OrthonormalBasis& candidate,
                                const InferenceSummary& summary, double xi);

/// Standard normal quantile (Acklam rational approximation plus one Halley
/// refinement; absolute error well under 1e-8).
double normal_quantile(double prob);

/// Standard normal CDF via erfc.
double normal_cdf(double x);

}  // namespace dtpca

#endif  // DTPCA_INFERENCE_HPP_
