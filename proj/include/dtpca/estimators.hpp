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

#ifndef DTPCA_ESTIMATORS_HPP_
#define DTPCA_ESTIMATORS_HPP_

#include <optional>
#include <vector>

#include "dtpca/runtime.hpp"
#include "dtpca/tucker.hpp"

namespace dtpca {

/// Output of the heterogeneous protocol: shared subspaces per mode plus a
/// machine-specific individual subspace per (machine, mode). The individual
/// bases are orthogonal to the common ones by construction.
struct HeteroEstimates {
  std::vector<OrthonormalBasis> common;                   // [mode]
  std::vector<std::vector<OrthonormalBasis>> individual;  // [machine][mode]
};

/// Convex combination weights over machines.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights);
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }

 private:
  std::vector<double> weights_;
};

/// Per-machine noise standard deviations, all strictly positive.
class NoiseProfile {
 public:
  explicit NoiseProfile(std::vector<double> sigma);
  const std::vector<double>& sigma() const { return sigma_; }

 private:
  std::vector<double> sigma_;
};

/// Unfolding of the machine's tensor projected onto the initial factors of
/// every mode but `mode`: M_{j,l} = unfold_j(T_l x_{k != j} U0_{k,l}').
/// Shape p_j x prod_{k != j} r_k. Mode j's own initial factor is ignored.
Matrix local_projected_matrix(const MachineState& machine, std::size_t mode);

/// Same computation applied to joint [U V] initial factors; in the
/// heterogeneous model the columns approximately span [U_j V_{j,l}].
Matrix hetero_local_matrix(const MachineState& machine, std::size_t mode);

/// One-shot distributed estimator for the homogeneous model: per mode,
/// gathers each machine's top-r_j local basis, averages the projection
/// matrices in ascending machine order, and keeps the top-r_j eigenvectors
/// of the average. One gather round per mode.
FactorEstimates homo_distributed_pca(const std::vector<MachineState>& machines,
                                     const std::vector<std::size_t>& ranks,
                                     CommLedger& ledger);

/// Benchmark that averages the raw tensors and runs hooi on the mean.
FactorEstimates pooled_pca(const std::vector<DenseTensor>& tensors,
                           const std::vector<std::size_t>& ranks,
                           const HooiOptions& options = {});

/// Pooled benchmark over machine states; ledger records the cost of
/// shipping every raw tensor (8 * prod(dims) payload bytes per machine).
FactorEstimates pooled_pca(const std::vector<MachineState>& machines,
                           const std::vector<std::size_t>& ranks,
                           CommLedger& ledger, const HooiOptions& options = {});

/// Distributed estimator for the heterogeneous model. common_ranks[j] is
/// r_{j,U}; individual_ranks[l][j] is r_{j,V,l}. Per mode: one gather of the
/// local top-r_U bases, one broadcast of the aggregated basis, then each
/// machine takes the top individual basis of (I - U U') M~. Assumes the
/// common components occupy the top singular positions (the generator's
/// identification convention).
HeteroEstimates hetero_distributed_pca(
    const std::vector<MachineState>& machines,
    const std::vector<std::size_t>& common_ranks,
    const std::vector<std::vector<std::size_t>>& individual_ranks,
    CommLedger& ledger);

/// Eigenvalue-ratio rank estimate: argmax_{1<=k<=max_rank} s_k / s_{k+1}.
std::size_t estimate_local_joint_rank(const Matrix& m, std::size_t max_rank);

/// Distributed estimate of the common rank r_{j,U} per mode: gathers the
/// top-joint-rank basis W of each machine, forms the averaged projection
/// W_bar, and counts singular values >= 1 - delta0. Returns one value per
/// mode; 0 means "no common component" and is a legitimate answer.
std::vector<std::size_t> estimate_common_rank(
    const std::vector<MachineState>& machines,
    const std::vector<std::vector<std::size_t>>& joint_ranks,  // [machine][mode]
    double delta0, CommLedger& ledger);

/// Heterogeneity of the individual subspaces:
/// min over (mode, machine) of the average over other machines of
/// 1 - ||V_l' V_l'||_2. 0 when a principal vector is shared by everyone,
/// 1 when all individual subspaces are pairwise orthogonal.
double heterogeneity_measure(
    const std::vector<std::vector<OrthonormalBasis>>& v_components);  // [machine][mode]

/// sigma_hat = ||T - T x_j P_j P_j'||_F / sqrt(prod p_j), P_j the fitted
/// mode-j basis (joint basis in the heterogeneous case).
double estimate_noise_level(const MachineState& machine,
                            const std::vector<OrthonormalBasis>& fitted);
double estimate_noise_level(const MachineState& machine,
                            const FactorEstimates& fitted);

/// Inverse-variance weights w_l = sigma_l^-2 / sum_k sigma_k^-2.
WeightVector optimal_weights(const NoiseProfile& noise);

struct TransferResult {
  std::vector<OrthonormalBasis> common;             // [mode]
  std::vector<OrthonormalBasis> target_individual;  // [mode]
  WeightVector weights_used;
};

/// Weighted-aggregation transfer onto a target machine. The weight order is
/// (target, sources...); passing std::nullopt selects data-adaptive weights
/// estimated from each machine's own two-sweep refined joint factors. The
/// aggregation replaces the uniform projection average with
/// sum_l w_l U_l U_l'; the target's individual basis comes from the
/// orthocomplement of the aggregated common basis.
TransferResult transfer_pca(const MachineState& target,
                            const std::vector<MachineState>& sources,
                            const std::vector<std::size_t>& common_ranks,
                            const std::vector<std::size_t>& target_individual_ranks,
                            const std::optional<WeightVector>& weights,
                            CommLedger& ledger);

/// Two local refinement sweeps per machine before a single aggregation
/// round per mode. Iteration t rebuilds every mode's factor from the
/// iteration t-1 factors of the other modes.
FactorEstimates two_iteration_pca(const std::vector<MachineState>& machines,
                                  const std::vector<std::size_t>& ranks,
                                  CommLedger& ledger);

/// The local refinement used by two_iteration_pca and the adaptive-weight
/// noise fit: `sweeps` simultaneous updates starting from the machine's
/// initial factors, truncated to `ranks`.
std::vector<OrthonormalBasis> local_refine(const MachineState& machine,
                                           const std::vector<std::size_t>& ranks,
                                           int sweeps);

/// Median-of-integers aggregation for locally estimated ranks (lower median).
std::size_t aggregate_ranks_median(std::vector<std::size_t> ranks);

}  // namespace dtpca

#endif  // DTPCA_ESTIMATORS_HPP_
