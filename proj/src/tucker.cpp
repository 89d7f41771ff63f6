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

#include "dtpca/tucker.hpp"

#include <algorithm>

namespace dtpca {

namespace {

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  }
  return t;
}

void check_ranks(const DenseTensor& t, const std::vector<std::size_t>& ranks) {
  if (ranks.size() != t.order()) {
    throw InvalidArgument("ranks: need one rank per mode");
  }
  const std::size_t total = t.size();
  for (std::size_t j = 0; j < ranks.size(); ++j) {
    const std::size_t other = total / t.dims[j];
    if (ranks[j] == 0 || ranks[j] > std::min(t.dims[j], other)) {
      throw InvalidArgument("ranks: rank out of range for mode " +
                            std::to_string(j));
    }
  }
}

}  // namespace

DenseTensor project_core(const DenseTensor& t,
                         const std::vector<OrthonormalBasis>& factors) {
  DenseTensor out = t;
  for (std::size_t j = 0; j < factors.size(); ++j) {
    out = mode_product(out, transpose(factors[j].matrix()), j);
  }
  return out;
}

DenseTensor project_onto_span(const DenseTensor& t,
                              const std::vector<OrthonormalBasis>& bases) {
  if (bases.size() != t.order()) {
    throw InvalidArgument("project_onto_span: need one basis per mode");
  }
  for (std::size_t j = 0; j < bases.size(); ++j) {
    if (bases[j].p() != t.dims[j]) {
      throw InvalidArgument("project_onto_span: basis/tensor shape mismatch");
    }
    if (bases[j].r() == 0) return DenseTensor(t.dims);
  }
  DenseTensor out = t;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    out = mode_product(out, transpose(bases[j].matrix()), j);
    out = mode_product(out, bases[j].matrix(), j);
  }
  return out;
}

DenseTensor reconstruct(const DenseTensor& core,
                        const std::vector<OrthonormalBasis>& factors) {
  DenseTensor out = core;
  for (std::size_t j = 0; j < factors.size(); ++j) {
    out = mode_product(out, factors[j].matrix(), j);
  }
  return out;
}

FactorEstimates hosvd(const DenseTensor& t,
                      const std::vector<std::size_t>& ranks) {
  check_ranks(t, ranks);
  FactorEstimates est;
  est.factors.reserve(t.order());
  for (std::size_t j = 0; j < t.order(); ++j) {
    est.factors.push_back(svd_top_r(matricize(t, j), ranks[j]).basis);
  }
  est.core = project_core(t, est.factors);
  return est;
}

FactorEstimates hooi(const DenseTensor& t, const std::vector<std::size_t>& ranks,
                     const HooiOptions& options, HooiReport* report) {
  check_ranks(t, ranks);
  if (options.max_iter < 1) {
    throw InvalidArgument("hooi: max_iter must be >= 1");
  }
  FactorEstimates est = hosvd(t, ranks);
  int iterations = 0;
  double change = 0.0;
  auto refresh = [&](const DenseTensor& base, std::size_t skip_below,
                     std::size_t j) {
    // base already has modes < skip_below contracted; contract the rest,
    // skipping j, and refresh factor j from the unfolding.
    DenseTensor shrunk = base;
    for (std::size_t k = skip_below; k < t.order(); ++k) {
      if (k == j) continue;
      shrunk = mode_product(shrunk, transpose(est.factors[k].matrix()), k);
    }
    OrthonormalBasis updated = svd_top_r(matricize(shrunk, j), ranks[j]).basis;
    change = std::max(change, rho(updated, est.factors[j]));
    est.factors[j] = std::move(updated);
  };
  for (int it = 0; it < options.max_iter; ++it) {
    change = 0.0;
    refresh(t, 0, 0);
    // Mode 0's refreshed factor is fixed for the rest of the sweep, so its
    // (large) contraction is shared by every remaining mode update.
    DenseTensor front = mode_product(t, transpose(est.factors[0].matrix()), 0);
    for (std::size_t j = 1; j < t.order(); ++j) {
      refresh(front, 1, j);
    }
    ++iterations;
    if (change < options.tol) break;
  }
  est.core = project_core(t, est.factors);
  if (report != nullptr) {
    report->iterations = iterations;
    report->last_change = change;
  }
  return est;
}

}  // namespace dtpca
