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

#include "dtpca/inference.hpp"

#include <cmath>
#include <limits>

namespace dtpca {

namespace {

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  }
  return t;
}

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrt2Pi = 2.5066282746310005024;

}  // namespace

std::vector<double> estimate_lambda(const MachineState& machine,
                                    const std::vector<OrthonormalBasis>& fitted,
                                    std::size_t mode) {
  const DenseTensor& t = machine.tensor;
  if (fitted.size() != t.order()) {
    throw InvalidArgument("estimate_lambda: need one fitted basis per mode");
  }
  if (mode >= t.order()) {
    throw InvalidArgument("estimate_lambda: mode out of range");
  }
  DenseTensor projected = t;
  for (std::size_t k = 0; k < t.order(); ++k) {
    if (k == mode) continue;
    projected = mode_product(projected, transpose(fitted[k].matrix()), k);
  }
  std::vector<double> sv = singular_values(matricize(projected, mode));
  const std::size_t r = fitted[mode].r();
  if (sv.size() > r) sv.resize(r);
  return sv;
}

InferenceSummary inference_summary(double sigma_hat,
                                   const std::vector<double>& lambda_hat,
                                   std::size_t p_j, std::size_t num_machines,
                                   std::size_t mode) {
  if (!(sigma_hat >= 0.0) || p_j == 0 || num_machines == 0) {
    throw InvalidArgument("inference_summary: invalid inputs");
  }
  if (lambda_hat.empty()) {
    throw InvalidArgument("inference_summary: empty spectrum");
  }
  double inv2 = 0.0;  // ||Lambda^-1||_F^2
  double inv4 = 0.0;  // ||Lambda^-2||_F^2
  for (double lam : lambda_hat) {
    if (!(lam > 0.0)) {
      throw InvalidArgument("inference_summary: nonpositive singular value");
    }
    inv2 += 1.0 / (lam * lam);
    inv4 += 1.0 / (lam * lam * lam * lam);
  }
  const double s2 = sigma_hat * sigma_hat / static_cast<double>(num_machines);
  InferenceSummary out;
  out.mode = mode;
  out.bias = 2.0 * s2 * static_cast<double>(p_j) * inv2;
  out.sd = std::sqrt(8.0 * static_cast<double>(p_j)) * s2 * std::sqrt(inv4);
  out.sigma_hat = sigma_hat;
  out.lambda_hat = lambda_hat;
  return out;
}

bool confidence_region_contains(const OrthonormalBasis& u_hat,
                                const OrthonormalBasis& candidate,
                                const InferenceSummary& summary, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) {
    throw InvalidArgument("confidence_region_contains: need 0 < xi < 1");
  }
  const double distance = rho(u_hat, candidate);  // validates shapes
  const double z = normal_quantile(1.0 - xi / 2.0);
  // rho^2 carries rounding noise of order eps * r from the Gram products;
  // the slack keeps the degenerate sd -> 0 case meaningful and is invisible
  // at any statistical scale.
  const double fp_slack = 64.0 * std::numeric_limits<double>::epsilon() *
                          static_cast<double>(std::max<std::size_t>(1, u_hat.r()));
  return std::abs(distance * distance - summary.bias) <= z * summary.sd + fp_slack;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw InvalidArgument("normal_quantile: need 0 < p < 1");
  }
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (prob < p_low) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - p_low) {
    const double q = prob - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF.
  const double e = normal_cdf(x) - prob;
  const double u = e * kSqrt2Pi * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

}  // namespace dtpca
