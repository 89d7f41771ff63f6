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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dtpca/estimators.hpp"
#include "dtpca/rng.hpp"
#include "dtpca/simgen.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace dtpca;
using namespace dtpca::fixtures;

TEST_CASE("local_projected_matrix shape and noiseless subspace") {
  // Shape: p = (4,5,6), r = (2,2,2), second mode -> 5 x 4.
  CounterRng rng(1);
  DenseTensor t = rng.normal_tensor({4, 5, 6});
  MachineState machine;
  machine.machine_id = 0;
  machine.tensor = t;
  machine.init_factors = hosvd(t, {2, 2, 2});
  Matrix m = local_projected_matrix(machine, 1);
  CHECK(m.rows == 5);
  CHECK(m.cols == 4);

  // Noiseless with exact initial factors: the top-r left projection of M
  // equals U U'.
  Scenario s = gen_homogeneous(homo_config(10, 2, 8.0, 0.0, 1, 3));
  init_exact(s);
  for (std::size_t j = 0; j < 3; ++j) {
    Matrix mj = local_projected_matrix(s.machines[0], j);
    CHECK(mj.rows == 10);
    CHECK(mj.cols == 4);
    OrthonormalBasis top = svd_top_r(mj, 2).basis;
    CHECK(rho(top, s.truth.common[j]) < 1e-8);
  }
}

TEST_CASE("local_projected_matrix reduces to a matrix product when J = 2") {
  CounterRng rng(5);
  DenseTensor t = rng.normal_tensor({6, 4});
  MachineState machine;
  machine.tensor = t;
  machine.init_factors = hosvd(t, {2, 2});
  Matrix got = local_projected_matrix(machine, 0);
  // M_1 = unfold_1(T x_2 U0_2') = T * U0_2.
  Matrix expected =
      matmul(matricize(t, 0), machine.init_factors.factors[1].matrix());
  CHECK(oracles::frob_diff(got, expected) < 1e-12);
}

TEST_CASE("local_projected_matrix requires initial factors") {
  CounterRng rng(6);
  MachineState machine;
  machine.tensor = rng.normal_tensor({3, 3, 3});
  CHECK_THROWS_AS(local_projected_matrix(machine, 0), InvalidArgument);
}

TEST_CASE("homo_distributed_pca: noiseless exact recovery") {
  Scenario s = gen_homogeneous(homo_config(12, 2, 9.0, 0.0, 4, 11));
  init_exact(s);
  CommLedger ledger;
  FactorEstimates est = homo_distributed_pca(s.machines, {2, 2, 2}, ledger);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rho(est.factors[j], s.truth.common[j]) < 1e-8);
  }
  // One gather round per mode.
  CHECK(ledger.rounds() == 3);
  CHECK(ledger.total_upload_bytes() == 3 * 4 * (8 * 12 * 2 + 24));
}

TEST_CASE("homo_distributed_pca with L = 1 equals the local estimator") {
  Scenario s = gen_homogeneous(homo_config(10, 2, 8.0, 1.0, 1, 13));
  init_all(s.machines, {2, 2, 2});
  CommLedger ledger;
  FactorEstimates est = homo_distributed_pca(s.machines, {2, 2, 2}, ledger);
  for (std::size_t j = 0; j < 3; ++j) {
    OrthonormalBasis local =
        svd_top_r(local_projected_matrix(s.machines[0], j), 2).basis;
    CHECK(rho(est.factors[j], local) < 1e-10);
  }
}

TEST_CASE("homo_distributed_pca tracks the pooled benchmark at high SNR") {
  const double lambda = std::pow(50.0, 0.9);
  double dist_total = 0.0;
  double pooled_total = 0.0;
  for (std::uint64_t rep = 0; rep < 15; ++rep) {
    Scenario s = gen_homogeneous(homo_config(50, 3, lambda, 1.0, 10, 100 + rep));
    init_all(s.machines, {3, 3, 3});
    CommLedger ledger;
    dist_total +=
        rho(homo_distributed_pca(s.machines, {3, 3, 3}, ledger).factors[0],
            s.truth.common[0]);
    pooled_total += rho(pooled_pca(s.machines, {3, 3, 3}, ledger).factors[0],
                        s.truth.common[0]);
  }
  CHECK(dist_total / pooled_total < 1.35);
}

TEST_CASE("permuting machine order leaves the aggregate unchanged") {
  Scenario s = gen_homogeneous(homo_config(10, 2, 8.0, 1.0, 5, 17));
  init_all(s.machines, {2, 2, 2});
  CommLedger ledger;
  FactorEstimates forward = homo_distributed_pca(s.machines, {2, 2, 2}, ledger);
  std::reverse(s.machines.begin(), s.machines.end());
  FactorEstimates reversed = homo_distributed_pca(s.machines, {2, 2, 2}, ledger);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(forward.factors[j].matrix().data == reversed.factors[j].matrix().data);
  }
}

TEST_CASE("pooled_pca basics") {
  Scenario s = gen_homogeneous(homo_config(10, 2, 8.0, 1.0, 1, 19));
  FactorEstimates pooled = pooled_pca({s.machines[0].tensor}, {2, 2, 2});
  FactorEstimates direct = hooi(s.machines[0].tensor, {2, 2, 2});
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rho(pooled.factors[j], direct.factors[j]) < 1e-12);
  }

  Scenario clean = gen_homogeneous(homo_config(10, 2, 8.0, 0.0, 3, 23));
  FactorEstimates exact =
      pooled_pca({clean.machines[0].tensor, clean.machines[1].tensor,
                  clean.machines[2].tensor},
                 {2, 2, 2});
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rho(exact.factors[j], clean.truth.common[j]) < 1e-8);
  }

  CHECK_THROWS_AS(pooled_pca(std::vector<DenseTensor>{}, {2, 2, 2}),
                  InvalidArgument);
}

TEST_CASE("pooled error shrinks like 1/sqrt(2) moving L = 10 -> 20") {
  const double lambda = std::pow(50.0, 0.9);
  double err10 = 0.0;
  double err20 = 0.0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    Scenario a = gen_homogeneous(homo_config(50, 3, lambda, 1.0, 10, 500 + rep));
    Scenario b = gen_homogeneous(homo_config(50, 3, lambda, 1.0, 20, 900 + rep));
    CommLedger ledger;
    err10 += rho(pooled_pca(a.machines, {3, 3, 3}, ledger).factors[0],
                 a.truth.common[0]);
    err20 += rho(pooled_pca(b.machines, {3, 3, 3}, ledger).factors[0],
                 b.truth.common[0]);
  }
  const double ratio = err20 / err10;
  CHECK(ratio > 0.5);
  CHECK(ratio < 0.9);
}

TEST_CASE("hetero_local_matrix matches local_projected_matrix bitwise") {
  Scenario s = gen_heterogeneous(
      hetero_config(12, 2, 2, 10.0, 1.0, 2, CoreMode::kDifferentCores, 29));
  init_all(s.machines, {4, 4, 4});
  for (std::size_t j = 0; j < 3; ++j) {
    Matrix a = hetero_local_matrix(s.machines[0], j);
    Matrix b = local_projected_matrix(s.machines[0], j);
    CHECK(a.data == b.data);
  }

  // Shape: p = 30, joint ranks 6 -> 30 x 36.
  Scenario wide = gen_heterogeneous(
      hetero_config(30, 3, 3, 20.0, 0.0, 1, CoreMode::kDifferentCores, 31));
  init_exact(wide);
  Matrix m = hetero_local_matrix(wide.machines[0], 0);
  CHECK(m.rows == 30);
  CHECK(m.cols == 36);

  // Noiseless: the top-(r_U + r_V) projection spans [U V].
  OrthonormalBasis joint = svd_top_r(m, 6).basis;
  Matrix joint_truth(30, 6);
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      joint_truth(i, k) = wide.truth.common[0].matrix()(i, k);
      joint_truth(i, 3 + k) = wide.truth.individual[0][0].matrix()(i, k);
    }
  }
  CHECK(rho(joint, OrthonormalBasis(std::move(joint_truth))) < 1e-8);
}

TEST_CASE("hetero_distributed_pca: noiseless identified model") {
  Scenario s = gen_heterogeneous(
      hetero_config(20, 3, 3, 25.0, 0.0, 4, CoreMode::kDifferentCores, 37));
  init_exact(s);
  CommLedger ledger;
  const std::vector<std::vector<std::size_t>> individual(
      4, std::vector<std::size_t>(3, 3));
  HeteroEstimates est =
      hetero_distributed_pca(s.machines, {3, 3, 3}, individual, ledger);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rho(est.common[j], s.truth.common[j]) < 1e-6);
    for (std::size_t l = 0; l < 4; ++l) {
      CHECK(rho(est.individual[l][j], s.truth.individual[l][j]) < 1e-6);
      Matrix cross =
          gram_cross(est.common[j].matrix(), est.individual[l][j].matrix());
      CHECK(frobenius_norm(cross) < 1e-8);
    }
  }
  // One gather plus one broadcast per mode.
  CHECK(ledger.rounds() == 6);
  CHECK(ledger.total_upload_bytes() == 3 * 4 * (8 * 20 * 3 + 24));
  CHECK(ledger.total_download_bytes() == 3 * 4 * (8 * 20 * 3 + 24));
}

TEST_CASE("hetero with zero individual ranks reduces to the homogeneous path") {
  Scenario s = gen_homogeneous(homo_config(10, 2, 8.0, 1.0, 3, 41));
  init_all(s.machines, {2, 2, 2});
  CommLedger ledger_a;
  CommLedger ledger_b;
  const std::vector<std::vector<std::size_t>> zero_ranks(
      3, std::vector<std::size_t>(3, 0));
  HeteroEstimates hetero =
      hetero_distributed_pca(s.machines, {2, 2, 2}, zero_ranks, ledger_a);
  FactorEstimates homo = homo_distributed_pca(s.machines, {2, 2, 2}, ledger_b);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rho(hetero.common[j], homo.factors[j]) < 1e-12);
    for (std::size_t l = 0; l < 3; ++l) {
      CHECK(hetero.individual[l][j].r() == 0);
    }
  }
}

TEST_CASE("averaged projection is PSD with eigenvalues in [0, 1]") {
  Scenario s = gen_homogeneous(homo_config(12, 2, 6.0, 1.0, 6, 43));
  init_all(s.machines, {2, 2, 2});
  CommLedger ledger;
  auto messages = gather_subspaces(
      s.machines, 0,
      [](const MachineState& m) {
        return svd_top_r(local_projected_matrix(m, 0), 2).basis;
      },
      ledger);
  Matrix average(12, 12);
  for (const auto& msg : messages) {
    add_scaled_projection(average, msg.payload, 1.0 / 6.0);
  }
  std::vector<double> values;
  Matrix vectors(0, 0);
  oracles::jacobi_symmetric_eig(average, values, vectors);
  for (double v : values) {
    CHECK(v >= -1e-10);
    CHECK(v <= 1.0 + 1e-10);
  }
}

TEST_CASE("estimate_local_joint_rank on a pinned spectrum") {
  // diag(10, 9, 8, 0.1, 0.05) padded with zero columns.
  Matrix m(5, 8);
  m(0, 0) = 10.0;
  m(1, 1) = 9.0;
  m(2, 2) = 8.0;
  m(3, 3) = 0.1;
  m(4, 4) = 0.05;
  CHECK(estimate_local_joint_rank(m, 4) == 3);

  // Exact low-rank: the estimate hits the true rank for any max_rank > r.
  CounterRng rng(47);
  Matrix product = matmul(rng.normal_matrix(8, 2), rng.normal_matrix(2, 12));
  CHECK(estimate_local_joint_rank(product, 5) == 2);
  CHECK(estimate_local_joint_rank(product, 7) == 2);

  Matrix zero(4, 4);
  CHECK_THROWS_AS(estimate_local_joint_rank(zero, 2), NumericalError);
  CHECK_THROWS_AS(estimate_local_joint_rank(m, 9), InvalidArgument);
}

TEST_CASE("estimate_local_joint_rank recovers the joint rank at simulation SNR") {
  const double lambda = std::pow(50.0, 0.9);
  int correct = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    Scenario s = gen_heterogeneous(hetero_config(
        50, 3, 3, lambda, 1.0, 1, CoreMode::kDifferentCores, 1300 + rep));
    init_all(s.machines, {6, 6, 6});
    Matrix m = hetero_local_matrix(s.machines[0], 0);
    if (estimate_local_joint_rank(m, 12) == 6) ++correct;
  }
  CHECK(correct >= 95);
}

TEST_CASE("aggregate_ranks_median") {
  CHECK(aggregate_ranks_median({3, 3, 3, 7}) == 3);
  CHECK(aggregate_ranks_median({1, 9, 3}) == 3);
  CHECK(aggregate_ranks_median({5}) == 5);
}

TEST_CASE("estimate_common_rank: closed-form orthogonal-V spectrum") {
  // Exactly shared U, mutually orthogonal individual subspaces, no noise:
  // the averaged projection has spectrum {1 (r_U times), 1/L, ...}, so the
  // threshold 1 - 0.1 recovers r_U deterministically.
  const std::size_t p = 40;
  const std::size_t r_u = 3;
  const std::size_t r_v = 2;
  const std::size_t count = 10;  // r_u + count * r_v <= p
  CounterRng rng(53);
  OrthonormalBasis big =
      qr_orthonormalize(rng.normal_matrix(p, r_u + count * r_v));
  auto slice = [&](std::size_t from, std::size_t width) {
    Matrix m(p, width);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t k = 0; k < width; ++k) {
        m(i, k) = big.matrix()(i, from + k);
      }
    }
    return OrthonormalBasis(std::move(m));
  };
  OrthonormalBasis u = slice(0, r_u);

  std::vector<MachineState> machines(count);
  std::vector<std::vector<OrthonormalBasis>> v_bases(count);
  const std::size_t joint_rank = r_u + r_v;
  const std::vector<std::size_t> core_dims(3, joint_rank);
  for (std::size_t l = 0; l < count; ++l) {
    OrthonormalBasis v = slice(r_u + l * r_v, r_v);
    CounterRng crng(1000 + l);
    DenseTensor core_u = crng.normal_tensor({r_u, r_u, r_u});
    const double scale_u = 30.0 / min_matricization_singular_value(core_u);
    for (double& x : core_u.data) x *= scale_u;
    DenseTensor core_v = crng.normal_tensor({r_v, r_v, r_v});
    const double scale_v = 15.0 / max_matricization_singular_value(core_v);
    for (double& x : core_v.data) x *= scale_v;
    DenseTensor core(core_dims);
    for (std::size_t a = 0; a < r_u; ++a) {
      for (std::size_t b = 0; b < r_u; ++b) {
        for (std::size_t c = 0; c < r_u; ++c) {
          core.data[(a * joint_rank + b) * joint_rank + c] =
              core_u.data[(a * r_u + b) * r_u + c];
        }
      }
    }
    for (std::size_t a = 0; a < r_v; ++a) {
      for (std::size_t b = 0; b < r_v; ++b) {
        for (std::size_t c = 0; c < r_v; ++c) {
          core.data[((r_u + a) * joint_rank + (r_u + b)) * joint_rank +
                    (r_u + c)] = core_v.data[(a * r_v + b) * r_v + c];
        }
      }
    }
    Matrix joint(p, joint_rank);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t k = 0; k < r_u; ++k) joint(i, k) = u.matrix()(i, k);
      for (std::size_t k = 0; k < r_v; ++k) {
        joint(i, r_u + k) = v.matrix()(i, k);
      }
    }
    OrthonormalBasis joint_basis(std::move(joint));
    std::vector<OrthonormalBasis> factors(3, joint_basis);
    machines[l].machine_id = l;
    machines[l].tensor = reconstruct(core, factors);
    machines[l].init_factors = FactorEstimates{factors, std::nullopt};
    v_bases[l] = std::vector<OrthonormalBasis>(3, v);
  }

  CommLedger ledger;
  const std::vector<std::vector<std::size_t>> joint_ranks(
      count, std::vector<std::size_t>(3, joint_rank));
  auto ranks = estimate_common_rank(machines, joint_ranks, 0.1, ledger);
  for (std::size_t j = 0; j < 3; ++j) CHECK(ranks[j] == r_u);

  // Pairwise orthogonal individual subspaces have heterogeneity 1.
  CHECK(heterogeneity_measure(v_bases) == doctest::Approx(1.0));
}

TEST_CASE("estimate_common_rank: identical machines fold V into the count") {
  // With every machine sharing the same V the spectrum has r_U + r_V ones:
  // the answer is r_U + r_V, which documents the positive-heterogeneity
  // requirement for consistency.
  Scenario s = gen_heterogeneous(
      hetero_config(20, 2, 2, 30.0, 0.0, 1, CoreMode::kSameCore, 59));
  init_exact(s);
  std::vector<MachineState> machines;
  for (std::size_t l = 0; l < 5; ++l) {
    MachineState m = s.machines[0];
    m.machine_id = l;
    machines.push_back(std::move(m));
  }
  CommLedger ledger;
  const std::vector<std::vector<std::size_t>> joint_ranks(
      5, std::vector<std::size_t>(3, 4));
  auto ranks = estimate_common_rank(machines, joint_ranks, 0.1, ledger);
  for (std::size_t j = 0; j < 3; ++j) CHECK(ranks[j] == 4);

  CHECK_THROWS_AS(estimate_common_rank(machines, joint_ranks, 0.0, ledger),
                  InvalidArgument);
}

TEST_CASE("heterogeneity_measure oracle and edge cases") {
  CounterRng rng(61);
  OrthonormalBasis v = qr_orthonormalize(rng.normal_matrix(10, 2));
  std::vector<std::vector<OrthonormalBasis>> same(
      3, std::vector<OrthonormalBasis>(1, v));
  CHECK(heterogeneity_measure(same) == doctest::Approx(0.0).epsilon(1e-10));

  // Random bases: matches a brute-force double loop over spectral norms.
  std::vector<std::vector<OrthonormalBasis>> random(3);
  for (std::size_t l = 0; l < 3; ++l) {
    random[l] = {qr_orthonormalize(rng.normal_matrix(10, 2))};
  }
  double expected = 2.0;
  for (std::size_t l = 0; l < 3; ++l) {
    double sum = 0.0;
    for (std::size_t o = 0; o < 3; ++o) {
      if (o == l) continue;
      Matrix cross = gram_cross(random[l][0].matrix(), random[o][0].matrix());
      sum += 1.0 - singular_values(cross).front();
    }
    expected = std::min(expected, sum / 2.0);
  }
  CHECK(heterogeneity_measure(random) ==
        doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(heterogeneity_measure({{v}}), InvalidArgument);
}

TEST_CASE("estimate_noise_level") {
  // Noiseless tensor with exact factors.
  Scenario clean = gen_homogeneous(homo_config(10, 2, 8.0, 0.0, 1, 67));
  init_exact(clean);
  CHECK(estimate_noise_level(clean.machines[0],
                             clean.machines[0].init_factors) < 1e-10);

  // Pure noise with rank-0 projections: sigma_hat concentrates at sigma.
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    CounterRng rng(3000 + rep);
    MachineState machine;
    machine.tensor = rng.normal_tensor({50, 50, 50});
    std::vector<OrthonormalBasis> empty(3, OrthonormalBasis(Matrix(50, 0)));
    const double sigma_hat = estimate_noise_level(machine, empty);
    CHECK(std::abs(sigma_hat - 1.0) < 0.03);
  }
}

TEST_CASE("estimate_noise_level concentrates under the signal model") {
  const double lambda = std::pow(50.0, 0.9);
  int within = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    Scenario s = gen_homogeneous(homo_config(50, 3, lambda, 1.0, 1, 4200 + rep));
    FactorEstimates fitted =
        hooi(s.machines[0].tensor, {3, 3, 3}, HooiOptions{.max_iter = 3});
    const double sigma_hat = estimate_noise_level(s.machines[0], fitted);
    if (std::abs(sigma_hat - 1.0) <= 0.05) ++within;
  }
  CHECK(within >= 95);
}

TEST_CASE("optimal_weights") {
  WeightVector equal = optimal_weights(NoiseProfile({1.0, 1.0}));
  CHECK(equal.weights()[0] == doctest::Approx(0.5));
  CHECK(equal.weights()[1] == doctest::Approx(0.5));

  // (sigma_s, sigma_t) = (1, 2): weights (0.8, 0.2).
  WeightVector uneven = optimal_weights(NoiseProfile({1.0, 2.0}));
  CHECK(uneven.weights()[0] == doctest::Approx(0.8));
  CHECK(uneven.weights()[1] == doctest::Approx(0.2));

  // (1, 2, 2) -> (2/3, 1/6, 1/6), cross-checked by a grid search over the
  // simplex minimizing sum w_i^2 sigma_i^2.
  WeightVector three = optimal_weights(NoiseProfile({1.0, 2.0, 2.0}));
  double best = 1e300;
  double best_w0 = 0.0, best_w1 = 0.0;
  const int grid = 400;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; i + j <= grid; ++j) {
      const double w0 = double(i) / grid;
      const double w1 = double(j) / grid;
      const double w2 = 1.0 - w0 - w1;
      const double value = w0 * w0 + 4.0 * w1 * w1 + 4.0 * w2 * w2;
      if (value < best) {
        best = value;
        best_w0 = w0;
        best_w1 = w1;
      }
    }
  }
  CHECK(three.weights()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(three.weights()[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  CHECK(std::abs(best_w0 - 2.0 / 3.0) < 5e-3);
  CHECK(std::abs(best_w1 - 1.0 / 6.0) < 5e-3);

  CHECK_THROWS_AS(NoiseProfile({1.0, -1.0}), InvalidArgument);
  CHECK_THROWS_AS(NoiseProfile({0.0}), InvalidArgument);
  CHECK_THROWS_AS(NoiseProfile(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("WeightVector validates the simplex") {
  CHECK_THROWS_AS(WeightVector({0.5, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(WeightVector({1.5, -0.5}), InvalidArgument);
  WeightVector ok({0.25, 0.75});
  CHECK(ok.weights()[1] == 0.75);
}

TEST_CASE("transfer_pca reductions") {
  Scenario s = gen_heterogeneous(
      hetero_config(16, 2, 2, 20.0, 1.0, 3, CoreMode::kDifferentCores, 71));
  init_all(s.machines, {4, 4, 4});

  // Uniform weights reproduce the heterogeneous protocol bitwise (same
  // ascending fold order: the target is machine 0).
  CommLedger ledger_a;
  const std::vector<std::vector<std::size_t>> individual(
      3, std::vector<std::size_t>(3, 2));
  HeteroEstimates hetero =
      hetero_distributed_pca(s.machines, {2, 2, 2}, individual, ledger_a);
  std::vector<MachineState> sources(s.machines.begin() + 1, s.machines.end());
  CommLedger ledger_b;
  TransferResult uniform = transfer_pca(
      s.machines[0], sources, {2, 2, 2}, {2, 2, 2},
      WeightVector({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}), ledger_b);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(uniform.common[j].matrix().data == hetero.common[j].matrix().data);
  }

  // All weight on the target reproduces the local estimate.
  CommLedger ledger_c;
  TransferResult solo =
      transfer_pca(s.machines[0], sources, {2, 2, 2}, {2, 2, 2},
                   WeightVector({1.0, 0.0, 0.0}), ledger_c);
  for (std::size_t j = 0; j < 3; ++j) {
    OrthonormalBasis local =
        svd_top_r(hetero_local_matrix(s.machines[0], j), 2).basis;
    CHECK(rho(solo.common[j], local) < 1e-10);
  }

  // Weight count must match 1 + #sources.
  CommLedger ledger_d;
  CHECK_THROWS_AS(transfer_pca(s.machines[0], sources, {2, 2, 2}, {2, 2, 2},
                               WeightVector({0.5, 0.5}), ledger_d),
                  InvalidArgument);
}

TEST_CASE("transfer with a quiet source beats target-only") {
  const double lambda = std::pow(50.0, 0.9);
  int wins = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    ScenarioConfig config = hetero_config(
        50, 3, 3, lambda, 1.0, 2, CoreMode::kDifferentCores, 7000 + rep);
    config.sigma = {1.0, 0.2};
    Scenario s = gen_heterogeneous(config);
    init_all(s.machines, {6, 6, 6});
    std::vector<MachineState> sources{s.machines[1]};
    CommLedger ledger;
    TransferResult with =
        transfer_pca(s.machines[0], sources, {3, 3, 3}, {3, 3, 3},
                     optimal_weights(NoiseProfile({1.0, 0.2})), ledger);
    TransferResult solo =
        transfer_pca(s.machines[0], sources, {3, 3, 3}, {3, 3, 3},
                     WeightVector({1.0, 0.0}), ledger);
    double err_with = 0.0;
    double err_solo = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      err_with += rho(with.common[j], s.truth.common[j]);
      err_solo += rho(solo.common[j], s.truth.common[j]);
    }
    if (err_with < err_solo) ++wins;
  }
  CHECK(wins >= reps * 8 / 10);
}

TEST_CASE("adaptive weights approach uniform under equal noise") {
  const double lambda = std::pow(50.0, 0.9);
  double worst = 0.0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    Scenario s = gen_heterogeneous(hetero_config(
        50, 3, 3, lambda, 1.0, 3, CoreMode::kDifferentCores, 7700 + rep));
    init_all(s.machines, {6, 6, 6});
    std::vector<MachineState> sources(s.machines.begin() + 1, s.machines.end());
    CommLedger ledger;
    TransferResult adaptive = transfer_pca(s.machines[0], sources, {3, 3, 3},
                                           {3, 3, 3}, std::nullopt, ledger);
    for (double w : adaptive.weights_used.weights()) {
      worst = std::max(worst, std::abs(w - 1.0 / 3.0));
    }
  }
  CHECK(worst <= 0.05);
}

TEST_CASE("two_iteration_pca: noiseless recovery and single gather round") {
  Scenario s = gen_homogeneous(homo_config(12, 2, 9.0, 0.0, 4, 73));
  init_exact(s);
  CommLedger ledger;
  FactorEstimates two = two_iteration_pca(s.machines, {2, 2, 2}, ledger);
  CommLedger ledger_one;
  FactorEstimates one = homo_distributed_pca(s.machines, {2, 2, 2}, ledger_one);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rho(two.factors[j], s.truth.common[j]) < 1e-6);
    CHECK(rho(two.factors[j], one.factors[j]) < 1e-8);
  }
  // Exactly one gather round per mode despite the two local iterations.
  CHECK(ledger.rounds() == 3);
  CHECK(ledger.total_upload_bytes() == ledger_one.total_upload_bytes());
}

TEST_CASE("two iterations beat one in most paired runs") {
  const double lambda = std::pow(50.0, 0.9);
  int no_worse = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    Scenario s =
        gen_homogeneous(homo_config(50, 3, lambda, 1.0, 10, 20000 + rep));
    init_all(s.machines, {3, 3, 3});
    CommLedger ledger;
    FactorEstimates two = two_iteration_pca(s.machines, {3, 3, 3}, ledger);
    FactorEstimates one = homo_distributed_pca(s.machines, {3, 3, 3}, ledger);
    double err_two = 0.0;
    double err_one = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      err_two += rho(two.factors[j], s.truth.common[j]);
      err_one += rho(one.factors[j], s.truth.common[j]);
    }
    if (err_two <= err_one) ++no_worse;
  }
  CHECK(no_worse >= 80);
}

TEST_CASE("rotation equivariance: rotated truth gives matched error statistics") {
  // Replacing U_j by U_j O_j (core fixed) rotates the truth tensor; the
  // estimator's rho statistics against the rotated truth must match the
  // original within Monte Carlo error.
  const int reps = 50;
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Scenario s = gen_homogeneous(homo_config(20, 2, 14.0, 1.0, 3, 40000 + rep));
    CounterRng rng(90000 + rep);

    std::vector<OrthonormalBasis> rotated;
    for (std::size_t j = 0; j < 3; ++j) {
      OrthonormalBasis o = qr_orthonormalize(rng.normal_matrix(2, 2));
      rotated.push_back(
          OrthonormalBasis(matmul(s.truth.common[j].matrix(), o.matrix())));
    }
    DenseTensor clean_rotated = reconstruct(s.truth.cores[0], rotated);
    std::vector<MachineState> machines_b;
    for (std::size_t l = 0; l < 3; ++l) {
      MachineState m;
      m.machine_id = l;
      m.tensor = clean_rotated;
      for (std::size_t i = 0; i < m.tensor.data.size(); ++i) {
        m.tensor.data[i] +=
            s.machines[l].tensor.data[i] - s.truth.clean[l].data[i];
      }
      machines_b.push_back(std::move(m));
    }
    init_all(s.machines, {2, 2, 2});
    init_all(machines_b, {2, 2, 2});
    CommLedger ledger;
    FactorEstimates est_a = homo_distributed_pca(s.machines, {2, 2, 2}, ledger);
    FactorEstimates est_b = homo_distributed_pca(machines_b, {2, 2, 2}, ledger);
    sum_a += rho(est_a.factors[0], s.truth.common[0]);
    sum_b += rho(est_b.factors[0], rotated[0]);
  }
  const double mean_a = sum_a / reps;
  const double mean_b = sum_b / reps;
  CHECK(std::abs(mean_a - mean_b) < 0.25 * std::max(mean_a, mean_b));
}
