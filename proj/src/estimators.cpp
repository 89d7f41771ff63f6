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

#include "dtpca/estimators.hpp"

#include <algorithm>
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

void require_machines(const std::vector<MachineState>& machines) {
  if (machines.empty()) {
    throw InvalidArgument("need at least one machine");
  }
}

// Fold messages (already sorted by machine_id) into the averaged projection
// and truncate. The ascending fold keeps floating-point summation
// deterministic regardless of scheduling.
OrthonormalBasis aggregate_projections(const std::vector<SubspaceMessage>& messages,
                                       std::size_t p, std::size_t rank) {
  Matrix average(p, p);
  const double scale = 1.0 / static_cast<double>(messages.size());
  for (const SubspaceMessage& msg : messages) {
    add_scaled_projection(average, msg.payload, scale);
  }
  return svd_top_r(average, rank).basis;
}

double spectral_norm_of_cross(const OrthonormalBasis& a,
                              const OrthonormalBasis& b) {
  if (a.r() == 0 || b.r() == 0) return 0.0;
  std::vector<double> sv = singular_values(gram_cross(a.matrix(), b.matrix()));
  return sv.empty() ? 0.0 : sv.front();
}

}  // namespace

WeightVector::WeightVector(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("WeightVector: empty");
  double sum = 0.0;
  for (double w : weights_) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw InvalidArgument("WeightVector: weights must be nonnegative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InvalidArgument("WeightVector: weights must sum to 1, got " +
                          std::to_string(sum));
  }
}

NoiseProfile::NoiseProfile(std::vector<double> sigma) : sigma_(std::move(sigma)) {
  if (sigma_.empty()) throw InvalidArgument("NoiseProfile: empty");
  for (double s : sigma_) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("NoiseProfile: noise levels must be positive");
    }
  }
}

Matrix local_projected_matrix(const MachineState& machine, std::size_t mode) {
  const DenseTensor& t = machine.tensor;
  if (mode >= t.order()) {
    throw InvalidArgument("local_projected_matrix: mode out of range");
  }
  const auto& factors = machine.init_factors.factors;
  if (factors.size() != t.order()) {
    throw InvalidArgument("local_projected_matrix: missing initial factors");
  }
  DenseTensor projected = t;
  for (std::size_t k = 0; k < t.order(); ++k) {
    if (k == mode) continue;
    if (factors[k].p() != t.dims[k]) {
      throw InvalidArgument("local_projected_matrix: factor shape mismatch");
    }
    projected = mode_product(projected, transpose(factors[k].matrix()), k);
  }
  return matricize(projected, mode);
}

Matrix hetero_local_matrix(const MachineState& machine, std::size_t mode) {
  return local_projected_matrix(machine, mode);
}

FactorEstimates homo_distributed_pca(const std::vector<MachineState>& machines,
                                     const std::vector<std::size_t>& ranks,
                                     CommLedger& ledger) {
  require_machines(machines);
  const std::size_t order = machines.front().tensor.order();
  if (ranks.size() != order) {
    throw InvalidArgument("homo_distributed_pca: need one rank per mode");
  }
  FactorEstimates out;
  out.factors.reserve(order);
  for (std::size_t j = 0; j < order; ++j) {
    auto messages = gather_subspaces(
        machines, j,
        [&](const MachineState& m) {
          return svd_top_r(local_projected_matrix(m, j), ranks[j]).basis;
        },
        ledger);
    out.factors.push_back(
        aggregate_projections(messages, machines.front().tensor.dims[j], ranks[j]));
  }
  return out;
}

FactorEstimates pooled_pca(const std::vector<DenseTensor>& tensors,
                           const std::vector<std::size_t>& ranks,
                           const HooiOptions& options) {
  if (tensors.empty()) throw InvalidArgument("pooled_pca: no tensors");
  const auto& dims = tensors.front().dims;
  DenseTensor mean(dims);
  for (const DenseTensor& t : tensors) {
    if (t.dims != dims) throw InvalidArgument("pooled_pca: dims mismatch");
    for (std::size_t i = 0; i < mean.data.size(); ++i) mean.data[i] += t.data[i];
  }
  const double inv = 1.0 / static_cast<double>(tensors.size());
  for (double& v : mean.data) v *= inv;
  return hooi(mean, ranks, options);
}

FactorEstimates pooled_pca(const std::vector<MachineState>& machines,
                           const std::vector<std::size_t>& ranks,
                           CommLedger& ledger, const HooiOptions& options) {
  require_machines(machines);
  std::vector<const MachineState*> sorted;
  sorted.reserve(machines.size());
  for (const MachineState& m : machines) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(),
            [](const MachineState* a, const MachineState* b) {
              return a->machine_id < b->machine_id;
            });
  ledger.begin_round();
  std::vector<DenseTensor> tensors;
  tensors.reserve(machines.size());
  for (const MachineState* m : sorted) {
    // Raw-tensor shipping: 8 bytes per entry.
    ledger.record(CommLedger::Direction::kUpload, m->machine_id,
                  8 * m->tensor.size());
    tensors.push_back(m->tensor);
  }
  return pooled_pca(tensors, ranks, options);
}

HeteroEstimates hetero_distributed_pca(
    const std::vector<MachineState>& machines,
    const std::vector<std::size_t>& common_ranks,
    const std::vector<std::vector<std::size_t>>& individual_ranks,
    CommLedger& ledger) {
  require_machines(machines);
  const std::size_t order = machines.front().tensor.order();
  const std::size_t count = machines.size();
  if (common_ranks.size() != order) {
    throw InvalidArgument("hetero_distributed_pca: need one common rank per mode");
  }
  if (individual_ranks.size() != count) {
    throw InvalidArgument(
        "hetero_distributed_pca: need individual ranks per machine");
  }
  for (const auto& per_mode : individual_ranks) {
    if (per_mode.size() != order) {
      throw InvalidArgument(
          "hetero_distributed_pca: need individual ranks per mode");
    }
  }

  HeteroEstimates out;
  out.common.reserve(order);
  out.individual.assign(count, std::vector<OrthonormalBasis>(order));
  for (std::size_t j = 0; j < order; ++j) {
    auto messages = gather_subspaces(
        machines, j,
        [&](const MachineState& m) {
          return svd_top_r(hetero_local_matrix(m, j), common_ranks[j]).basis;
        },
        ledger);
    OrthonormalBasis common = aggregate_projections(
        messages, machines.front().tensor.dims[j], common_ranks[j]);
    std::vector<OrthonormalBasis> copies = broadcast(common, j, machines, ledger);
    for (std::size_t l = 0; l < count; ++l) {
      Matrix residual = project_out(copies[l], hetero_local_matrix(machines[l], j));
      out.individual[l][j] =
          svd_top_r(residual, individual_ranks[l][j]).basis;
    }
    out.common.push_back(std::move(common));
  }
  return out;
}

std::size_t estimate_local_joint_rank(const Matrix& m, std::size_t max_rank) {
  if (max_rank == 0 || max_rank > std::min(m.rows, m.cols)) {
    throw InvalidArgument("estimate_local_joint_rank: max_rank out of range");
  }
  std::vector<double> sv = singular_values(m);
  if (sv.empty() || sv.front() < 1e-12) {
    throw NumericalError("estimate_local_joint_rank: matrix is numerically zero");
  }
  std::size_t best_k = 1;
  double best_ratio = -1.0;
  for (std::size_t k = 1; k <= max_rank; ++k) {
    const double a = sv[k - 1];
    const double b = k < sv.size() ? sv[k] : 0.0;
    double ratio;
    if (a <= 1e-12 * sv.front()) {
      ratio = 0.0;  // both negligible: no spectral evidence at this split
    } else if (b <= std::numeric_limits<double>::min()) {
      ratio = std::numeric_limits<double>::infinity();
    } else {
      ratio = a / b;
    }
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best_k = k;
    }
  }
  return best_k;
}

std::vector<std::size_t> estimate_common_rank(
    const std::vector<MachineState>& machines,
    const std::vector<std::vector<std::size_t>>& joint_ranks, double delta0,
    CommLedger& ledger) {
  require_machines(machines);
  if (!(delta0 > 0.0 && delta0 < 1.0)) {
    throw InvalidArgument("estimate_common_rank: need 0 < delta0 < 1");
  }
  if (joint_ranks.size() != machines.size()) {
    throw InvalidArgument("estimate_common_rank: need joint ranks per machine");
  }
  const std::size_t order = machines.front().tensor.order();
  std::vector<std::size_t> out(order, 0);
  for (std::size_t j = 0; j < order; ++j) {
    auto messages = gather_subspaces(
        machines, j,
        [&](const MachineState& m) {
          // joint_ranks rows follow the machines vector, which may be
          // unsorted; find this machine's row by position.
          std::size_t index = 0;
          for (std::size_t l = 0; l < machines.size(); ++l) {
            if (&machines[l] == &m) index = l;
          }
          if (joint_ranks[index].size() != m.tensor.order()) {
            throw InvalidArgument(
                "estimate_common_rank: need a joint rank per mode");
          }
          return svd_top_r(hetero_local_matrix(m, j), joint_ranks[index][j]).basis;
        },
        ledger);
    const std::size_t p = machines.front().tensor.dims[j];
    Matrix average(p, p);
    const double scale = 1.0 / static_cast<double>(messages.size());
    for (const SubspaceMessage& msg : messages) {
      add_scaled_projection(average, msg.payload, scale);
    }
    std::vector<double> sv = singular_values(average);
    std::size_t k = 0;
    while (k < sv.size() && sv[k] >= 1.0 - delta0) ++k;
    out[j] = k;
  }
  return out;
}

double heterogeneity_measure(
    const std::vector<std::vector<OrthonormalBasis>>& v_components) {
  const std::size_t count = v_components.size();
  if (count < 2) {
    throw InvalidArgument("heterogeneity_measure: need at least two machines");
  }
  const std::size_t order = v_components.front().size();
  for (const auto& per_mode : v_components) {
    if (per_mode.size() != order) {
      throw InvalidArgument("heterogeneity_measure: ragged input");
    }
  }
  double eta = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < order; ++j) {
    for (std::size_t l = 0; l < count; ++l) {
      double sum = 0.0;
      for (std::size_t other = 0; other < count; ++other) {
        if (other == l) continue;
        sum += 1.0 - spectral_norm_of_cross(v_components[l][j],
                                            v_components[other][j]);
      }
      eta = std::min(eta, sum / static_cast<double>(count - 1));
    }
  }
  return eta;
}

double estimate_noise_level(const MachineState& machine,
                            const std::vector<OrthonormalBasis>& fitted) {
  const DenseTensor& t = machine.tensor;
  DenseTensor projected = project_onto_span(t, fitted);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const double d = t.data[i] - projected.data[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(t.size()));
}

double estimate_noise_level(const MachineState& machine,
                            const FactorEstimates& fitted) {
  return estimate_noise_level(machine, fitted.factors);
}

WeightVector optimal_weights(const NoiseProfile& noise) {
  double denom = 0.0;
  for (double s : noise.sigma()) denom += 1.0 / (s * s);
  std::vector<double> w;
  w.reserve(noise.sigma().size());
  for (double s : noise.sigma()) w.push_back(1.0 / (s * s) / denom);
  // Normalize the residual rounding so the simplex invariant is exact.
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return WeightVector(std::move(w));
}

std::vector<OrthonormalBasis> local_refine(const MachineState& machine,
                                           const std::vector<std::size_t>& ranks,
                                           int sweeps) {
  const DenseTensor& t = machine.tensor;
  if (ranks.size() != t.order()) {
    throw InvalidArgument("local_refine: need one rank per mode");
  }
  if (machine.init_factors.factors.size() != t.order()) {
    throw InvalidArgument("local_refine: missing initial factors");
  }
  std::vector<OrthonormalBasis> current = machine.init_factors.factors;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    std::vector<OrthonormalBasis> next(t.order());
    for (std::size_t j = 0; j < t.order(); ++j) {
      DenseTensor projected = t;
      for (std::size_t k = 0; k < t.order(); ++k) {
        if (k == j) continue;
        projected = mode_product(projected, transpose(current[k].matrix()), k);
      }
      next[j] = svd_top_r(matricize(projected, j), ranks[j]).basis;
    }
    current = std::move(next);
  }
  return current;
}

TransferResult transfer_pca(const MachineState& target,
                            const std::vector<MachineState>& sources,
                            const std::vector<std::size_t>& common_ranks,
                            const std::vector<std::size_t>& target_individual_ranks,
                            const std::optional<WeightVector>& weights,
                            CommLedger& ledger) {
  const std::size_t order = target.tensor.order();
  const std::size_t count = 1 + sources.size();
  if (common_ranks.size() != order || target_individual_ranks.size() != order) {
    throw InvalidArgument("transfer_pca: need one rank per mode");
  }
  for (const MachineState& s : sources) {
    if (s.tensor.dims != target.tensor.dims) {
      throw InvalidArgument("transfer_pca: dims mismatch");
    }
  }

  WeightVector used = [&]() {
    if (weights.has_value()) {
      if (weights->size() != count) {
        throw InvalidArgument("transfer_pca: weight/machine count mismatch");
      }
      return *weights;
    }
    // Data-adaptive weights: each machine fits its own noise level through
    // its refined joint factors, w_l proportional to sigma_l^-2.
    std::vector<std::size_t> joint(order);
    for (std::size_t j = 0; j < order; ++j) {
      joint[j] = target.init_factors.factors.at(j).r();
    }
    std::vector<double> sigma;
    sigma.reserve(count);
    sigma.push_back(
        estimate_noise_level(target, local_refine(target, joint, 2)));
    for (const MachineState& s : sources) {
      std::vector<std::size_t> sjoint(order);
      for (std::size_t j = 0; j < order; ++j) {
        sjoint[j] = s.init_factors.factors.at(j).r();
      }
      sigma.push_back(estimate_noise_level(s, local_refine(s, sjoint, 2)));
    }
    return optimal_weights(NoiseProfile(std::move(sigma)));
  }();

  TransferResult out{.common = {}, .target_individual = {}, .weights_used = used};
  out.common.reserve(order);
  out.target_individual.resize(order);
  for (std::size_t j = 0; j < order; ++j) {
    OrthonormalBasis target_local =
        svd_top_r(hetero_local_matrix(target, j), common_ranks[j]).basis;
    auto messages = gather_subspaces(
        sources, j,
        [&](const MachineState& m) {
          return svd_top_r(hetero_local_matrix(m, j), common_ranks[j]).basis;
        },
        ledger);
    const std::size_t p = target.tensor.dims[j];
    Matrix average(p, p);
    add_scaled_projection(average, target_local, used.weights()[0]);
    // Weight order follows the (target, sources...) argument order; the
    // messages come back sorted by machine_id, so realign by position in
    // the sources vector.
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const std::size_t id = sources[s].machine_id;
      const SubspaceMessage* found = nullptr;
      for (const SubspaceMessage& msg : messages) {
        if (msg.machine_id == id) found = &msg;
      }
      if (found == nullptr) {
        throw NumericalError("transfer_pca: missing gathered message");
      }
      add_scaled_projection(average, found->payload, used.weights()[s + 1]);
    }
    OrthonormalBasis common = svd_top_r(average, common_ranks[j]).basis;
    Matrix residual = project_out(common, hetero_local_matrix(target, j));
    out.target_individual[j] =
        svd_top_r(residual, target_individual_ranks[j]).basis;
    out.common.push_back(std::move(common));
  }
  return out;
}

FactorEstimates two_iteration_pca(const std::vector<MachineState>& machines,
                                  const std::vector<std::size_t>& ranks,
                                  CommLedger& ledger) {
  require_machines(machines);
  const std::size_t order = machines.front().tensor.order();
  if (ranks.size() != order) {
    throw InvalidArgument("two_iteration_pca: need one rank per mode");
  }
  // Both refinement iterations are machine-local; only the refined factors
  // cross the wire, one gather round per mode.
  std::vector<std::vector<OrthonormalBasis>> refined(machines.size());
  for (std::size_t l = 0; l < machines.size(); ++l) {
    refined[l] = local_refine(machines[l], ranks, 2);
  }
  FactorEstimates out;
  out.factors.reserve(order);
  for (std::size_t j = 0; j < order; ++j) {
    auto messages = gather_subspaces(
        machines, j,
        [&](const MachineState& m) {
          for (std::size_t l = 0; l < machines.size(); ++l) {
            if (&machines[l] == &m) return refined[l][j];
          }
          throw InvalidArgument("two_iteration_pca: unknown machine");
        },
        ledger);
    out.factors.push_back(
        aggregate_projections(messages, machines.front().tensor.dims[j], ranks[j]));
  }
  return out;
}

std::size_t aggregate_ranks_median(std::vector<std::size_t> ranks) {
  if (ranks.empty()) throw InvalidArgument("aggregate_ranks_median: empty");
  std::sort(ranks.begin(), ranks.end());
  return ranks[(ranks.size() - 1) / 2];
}

}  // namespace dtpca
