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

#include "dtpca/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dtpca/linalg.hpp"
#include "dtpca/tucker.hpp"

namespace dtpca {

namespace {

// Stream-splitting tags; every (seed, purpose, machine, mode) tuple owns an
// independent substream.
enum StreamTag : std::uint64_t {
  kCommonFactorTag = 1,
  kIndividualFactorTag = 2,
  kCoreCommonTag = 3,
  kCoreIndividualTag = 4,
  kNoiseTag = 5,
};

constexpr int kMaxCoreRedraws = 16;

// Draw an i.i.d. normal core and rescale so the extreme matricization
// singular value hits `target`; redraw on (measure-zero) near-singular draws.
DenseTensor scaled_core(CounterRng& rng, const std::vector<std::size_t>& dims,
                        double target, bool scale_by_min) {
  for (int attempt = 0; attempt < kMaxCoreRedraws; ++attempt) {
    DenseTensor draft = rng.normal_tensor(dims);
    const double base = scale_by_min ? min_matricization_singular_value(draft)
                                     : max_matricization_singular_value(draft);
    if (base <= 1e-10) continue;
    const double factor = target / base;
    for (double& v : draft.data) v *= factor;
    return draft;
  }
  throw NumericalError("scaled_core: repeated singular draws");
}

Matrix concat_columns(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows, a.cols + b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols; ++j) out(i, a.cols + j) = b(i, j);
  }
  return out;
}

Scenario generate(const ScenarioConfig& config, bool shared_core) {
  config.validate();
  const std::size_t order = config.modes;
  const std::size_t joint_rank = config.r_u + config.r_v;

  // Shared factors.
  std::vector<OrthonormalBasis> common;
  common.reserve(order);
  for (std::size_t j = 0; j < order; ++j) {
    CounterRng rng = derive_stream(config.seed, {kCommonFactorTag, j});
    common.push_back(
        qr_orthonormalize(rng.normal_matrix(config.p, config.r_u)));
  }

  const std::vector<std::size_t> core_dims(order, joint_rank);
  const std::vector<std::size_t> common_core_dims(order, config.r_u);
  const std::vector<std::size_t> individual_core_dims(order, config.r_v);

  auto build_core = [&](std::size_t core_id) {
    CounterRng urng = derive_stream(config.seed, {kCoreCommonTag, core_id});
    DenseTensor core_u =
        scaled_core(urng, common_core_dims, config.lambda, /*scale_by_min=*/true);
    if (config.r_v == 0) return core_u;
    CounterRng vrng = derive_stream(config.seed, {kCoreIndividualTag, core_id});
    DenseTensor core_v = scaled_core(vrng, individual_core_dims,
                                     config.lambda / 2.0, /*scale_by_min=*/false);
    // Block-diagonal assembly: common block in the top corner, individual
    // block in the bottom corner, zero elsewhere.
    DenseTensor core(core_dims);
    std::vector<std::size_t> index(order, 0);
    for (std::size_t flat = 0; flat < core.size(); ++flat) {
      std::size_t rem = flat;
      for (std::size_t j = order; j-- > 0;) {
        index[j] = rem % joint_rank;
        rem /= joint_rank;
      }
      bool all_common = true;
      bool all_individual = true;
      for (std::size_t j = 0; j < order; ++j) {
        all_common = all_common && index[j] < config.r_u;
        all_individual = all_individual && index[j] >= config.r_u;
      }
      if (all_common) {
        std::size_t src = 0;
        for (std::size_t j = 0; j < order; ++j) src = src * config.r_u + index[j];
        core.data[flat] = core_u.data[src];
      } else if (all_individual) {
        std::size_t src = 0;
        for (std::size_t j = 0; j < order; ++j) {
          src = src * config.r_v + (index[j] - config.r_u);
        }
        core.data[flat] = core_v.data[src];
      }
    }
    return core;
  };

  DenseTensor shared = build_core(0);

  Scenario scenario;
  scenario.truth.common = common;
  scenario.machines.reserve(config.machines);
  for (std::size_t l = 0; l < config.machines; ++l) {
    std::vector<OrthonormalBasis> joint_factors;
    std::vector<OrthonormalBasis> individual;
    joint_factors.reserve(order);
    for (std::size_t j = 0; j < order; ++j) {
      if (config.r_v == 0) {
        joint_factors.push_back(common[j]);
        continue;
      }
      CounterRng rng =
          derive_stream(config.seed, {kIndividualFactorTag, l, j});
      Matrix raw = rng.normal_matrix(config.p, config.r_v);
      OrthonormalBasis v = qr_orthonormalize(project_out(common[j], raw));
      joint_factors.push_back(OrthonormalBasis(
          concat_columns(common[j].matrix(), v.matrix())));
      individual.push_back(std::move(v));
    }

    DenseTensor core = shared_core ? shared : build_core(l);
    DenseTensor clean = reconstruct(core, joint_factors);

    MachineState machine;
    machine.machine_id = l;
    machine.tensor = clean;
    const double sigma = config.sigma_for(l);
    machine.noise_level_hint = sigma;
    if (sigma > 0.0) {
      CounterRng rng = derive_stream(config.seed, {kNoiseTag, l});
      for (double& v : machine.tensor.data) v += sigma * rng.next_normal();
    }

    scenario.truth.individual.push_back(std::move(individual));
    scenario.truth.cores.push_back(std::move(core));
    scenario.truth.clean.push_back(std::move(clean));
    scenario.machines.push_back(std::move(machine));
  }
  return scenario;
}

}  // namespace

double ScenarioConfig::sigma_for(std::size_t machine) const {
  if (sigma.size() == 1) return sigma.front();
  return sigma.at(machine);
}

void ScenarioConfig::validate() const {
  if (p == 0 || machines == 0) {
    throw InvalidArgument("ScenarioConfig: p and machines must be >= 1");
  }
  if (modes < 2) throw InvalidArgument("ScenarioConfig: need >= 2 modes");
  if (r_u == 0) throw InvalidArgument("ScenarioConfig: r_u must be >= 1");
  if (r_u + r_v > p) throw InvalidArgument("ScenarioConfig: r_u + r_v > p");
  if (!(lambda > 0.0)) throw InvalidArgument("ScenarioConfig: lambda <= 0");
  if (sigma.empty() || (sigma.size() != 1 && sigma.size() != machines)) {
    throw InvalidArgument("ScenarioConfig: sigma must have 1 or L entries");
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) throw InvalidArgument("ScenarioConfig: negative sigma");
  }
}

Scenario gen_homogeneous(const ScenarioConfig& config) {
  if (config.r_v != 0) {
    throw InvalidArgument("gen_homogeneous: r_v must be 0");
  }
  return generate(config, /*shared_core=*/true);
}

Scenario gen_heterogeneous(const ScenarioConfig& config) {
  if (config.r_v == 0) {
    throw InvalidArgument("gen_heterogeneous: r_v must be >= 1");
  }
  return generate(config, config.core_mode == CoreMode::kSameCore);
}

double min_matricization_singular_value(const DenseTensor& t) {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < t.order(); ++j) {
    std::vector<double> sv = singular_values(matricize(t, j));
    out = std::min(out, sv.back());
  }
  return out;
}

double max_matricization_singular_value(const DenseTensor& t) {
  double out = 0.0;
  for (std::size_t j = 0; j < t.order(); ++j) {
    std::vector<double> sv = singular_values(matricize(t, j));
    out = std::max(out, sv.front());
  }
  return out;
}

std::vector<FactorEstimates> adversarial_init(
    double lambda, const std::vector<DenseTensor>& noise) {
  if (noise.empty()) throw InvalidArgument("adversarial_init: no machines");
  if (!(lambda > 0.0)) throw InvalidArgument("adversarial_init: lambda <= 0");
  const std::size_t p = noise.front().dims.front();
  for (const DenseTensor& z : noise) {
    if (z.order() != 3 || z.dims[0] != p || z.dims[1] != p || z.dims[2] != p) {
      throw InvalidArgument("adversarial_init: need cubic 3-mode noise");
    }
  }
  if (p < 2) throw InvalidArgument("adversarial_init: p must be >= 2");

  Matrix e1(p, 1);
  e1(0, 0) = 1.0;
  const OrthonormalBasis first_axis{e1};

  std::vector<FactorEstimates> out;
  out.reserve(noise.size());
  for (const DenseTensor& z : noise) {
    // z_l holds the designated mode-1 unfolding entries (row p, columns
    // kp+1): tensor entries (p, k+1, 1) in 1-based coordinates.
    std::vector<double> picked(p - 1);
    double norm_sq = 0.0;
    for (std::size_t k = 1; k < p; ++k) {
      const double value = z.data[((p - 1) * p + k) * p + 0];
      picked[k - 1] = value;
      norm_sq += value * value;
    }
    const double ratio = 4.0 * norm_sq / (lambda * lambda);
    if (!(ratio < 1.0)) {
      throw NumericalError(
          "adversarial_init: 4||z||^2/lambda^2 = " + std::to_string(ratio) +
          " >= 1; the construction needs a larger signal-to-noise ratio");
    }
    const double q = std::sqrt((1.0 + std::sqrt(1.0 - ratio)) / 2.0);
    Matrix u2(p, 1);
    u2(0, 0) = q;
    for (std::size_t k = 1; k < p; ++k) {
      u2(k, 0) = picked[k - 1] / (lambda * q);
    }
    FactorEstimates init;
    init.factors = {first_axis, OrthonormalBasis(std::move(u2)), first_axis};
    out.push_back(std::move(init));
  }
  return out;
}

double reconstruction_error(const std::vector<OrthonormalBasis>& bases,
                            const DenseTensor& t) {
  const double norm = frobenius_norm(t);
  if (norm == 0.0) {
    throw InvalidArgument("reconstruction_error: zero tensor");
  }
  DenseTensor projected = project_onto_span(t, bases);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const double d = t.data[i] - projected.data[i];
    sum += d * d;
  }
  return std::sqrt(sum) / norm;
}

}  // namespace dtpca
