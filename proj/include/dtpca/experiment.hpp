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

#ifndef DTPCA_EXPERIMENT_HPP_
#define DTPCA_EXPERIMENT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dtpca/simgen.hpp"

namespace dtpca {

/// Bad experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { kHomogeneous, kHeterogeneous, kTransfer };

/// Declarative Monte Carlo sweep over (p, L, gamma, core_mode) cells.
/// Parsed from flat key=value text with list syntax `p=[50,100]`.
struct ExperimentConfig {
  ScenarioKind scenario = ScenarioKind::kHomogeneous;
  std::vector<std::size_t> p_grid{50};
  std::vector<std::size_t> machine_grid{10};
  std::vector<double> gamma_grid{0.9};  // lambda = p^gamma
  std::vector<CoreMode> core_modes{CoreMode::kDifferentCores};
  std::vector<std::string> methods{"distributed"};
  std::size_t modes = 3;
  std::size_t r_u = 3;
  std::size_t r_v = 0;
  std::vector<double> sigma{1.0};  // scalar broadcasts; per-machine otherwise
  std::size_t reps = 100;
  std::string out_path = "results.csv";
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
  double xi = 0.05;  // confidence level parameter for coverage runs

  void validate(bool coverage) const;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// One CSV row. `mode` is 1-based in the output. wall_ms is measured wall
/// time and is the only column that is not a pure function of the seed.
struct RunRecord {
  std::string method;
  std::size_t p = 0;
  std::size_t machines = 0;
  double gamma = 0.0;
  std::size_t rep = 0;
  std::size_t mode = 1;
  double rho_error = 0.0;
  double sin_theta_error = 0.0;
  std::optional<double> recon_error;
  std::size_t upload_bytes = 0;
  std::size_t download_bytes = 0;
  std::optional<int> coverage_hit;
  std::int64_t wall_ms = 0;
};

std::string run_record_csv_header();
std::string to_csv_row(const RunRecord& record);

struct ExperimentOutcome {
  std::vector<RunRecord> records;
  std::string summary;  // per-cell means, printed by the CLI
};

/// Runs the sweep, writes one RunRecord row per (method x cell x rep x mode)
/// to config.out_path, and returns the records plus a console summary.
/// Record order is deterministic regardless of the thread count.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// Coverage study: homogeneous scenario, methods in {two_iteration, pooled}.
/// Each record carries coverage_hit for the truth at level 1-xi.
ExperimentOutcome run_coverage(const ExperimentConfig& config);

/// Reconstruction-error evaluation of per-mode basis files against tensor
/// files (all DTPT1). Produces one row per tensor plus an `average` row; no
/// partial output is written on error.
void eval_reconstruction(const std::vector<std::string>& bases_files,
                         const std::vector<std::string>& tensor_files,
                         const std::string& out_path);

/// Emits a scenario to DTPT1 files for cross-language replay:
/// machine_<l>.dtpt, clean_<l>.dtpt, truth_u<j>.dtpt, truth_v<l>_<j>.dtpt.
void write_scenario_files(const Scenario& scenario, const std::string& dir);

}  // namespace dtpca

#endif  // DTPCA_EXPERIMENT_HPP_
