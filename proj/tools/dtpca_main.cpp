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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtpca/experiment.hpp"
#include "dtpca/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> threads;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags->config_path,
                              "experiment config file (key=value lines)");
  if (config_required) opt->required();
  cmd->add_option("--out", flags->out_path, "output path (overrides config)");
  cmd->add_option("--seed", flags->seed, "base seed (overrides config)");
  cmd->add_option("--reps", flags->reps, "Monte Carlo reps (overrides config)");
  cmd->add_option("--threads", flags->threads, "worker threads (overrides config)");
}

dtpca::ExperimentConfig resolve_config(const CommonFlags& flags) {
  dtpca::ExperimentConfig config =
      dtpca::load_experiment_config(flags.config_path);
  if (!flags.out_path.empty()) config.out_path = flags.out_path;
  if (flags.seed.has_value()) config.base_seed = *flags.seed;
  if (flags.reps.has_value()) config.reps = *flags.reps;
  if (flags.threads.has_value()) config.threads = *flags.threads;
  return config;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const dtpca::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dtpca::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dtpca::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed Tucker tensor PCA experiment driver"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "run a Monte Carlo sweep and write one CSV row per "
                  "(method, cell, rep, mode)");
  add_common_flags(simulate, &sim_flags, /*config_required=*/true);

  CommonFlags cov_flags;
  CLI::App* coverage = app.add_subcommand(
      "coverage", "confidence-region coverage study (homogeneous scenario)");
  add_common_flags(coverage, &cov_flags, /*config_required=*/true);

  std::vector<std::string> bases_files;
  std::vector<std::string> tensor_files;
  std::string recon_out = "recon.csv";
  CLI::App* recon = app.add_subcommand(
      "eval-recon", "reconstruction error of basis files against tensor files");
  recon->add_option("--bases", bases_files, "per-mode DTPT1 basis files")
      ->required()
      ->delimiter(',');
  recon->add_option("--tensors", tensor_files, "DTPT1 tensor files")
      ->required()
      ->delimiter(',');
  recon->add_option("--out", recon_out, "output CSV path");

  CommonFlags gen_flags;
  std::string gen_dir = "scenario";
  CLI::App* gen = app.add_subcommand(
      "gen", "generate a scenario and write DTPT1 tensor/basis files");
  add_common_flags(gen, &gen_flags, /*config_required=*/true);
  gen->add_option("--out-dir", gen_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    return guarded([&]() {
      dtpca::ExperimentConfig config = resolve_config(sim_flags);
      dtpca::ExperimentOutcome outcome = dtpca::run_experiment(config);
      std::cout << outcome.summary;
      std::cout << "wrote " << outcome.records.size() << " rows to "
                << config.out_path << '\n';
      return kExitOk;
    });
  }
  if (coverage->parsed()) {
    return guarded([&]() {
      dtpca::ExperimentConfig config = resolve_config(cov_flags);
      dtpca::ExperimentOutcome outcome = dtpca::run_coverage(config);
      std::cout << outcome.summary;
      std::cout << "wrote " << outcome.records.size() << " rows to "
                << config.out_path << '\n';
      return kExitOk;
    });
  }
  if (recon->parsed()) {
    return guarded([&]() {
      dtpca::eval_reconstruction(bases_files, tensor_files, recon_out);
      std::cout << "wrote " << recon_out << '\n';
      return kExitOk;
    });
  }
  if (gen->parsed()) {
    return guarded([&]() {
      dtpca::ExperimentConfig config = resolve_config(gen_flags);
      config.validate(false);
      dtpca::ScenarioConfig sc;
      sc.p = config.p_grid.front();
      sc.modes = config.modes;
      sc.r_u = config.r_u;
      sc.r_v = config.r_v;
      sc.lambda = std::pow(static_cast<double>(sc.p), config.gamma_grid.front());
      sc.sigma = config.sigma;
      sc.machines = config.machine_grid.front();
      sc.core_mode = config.core_modes.front();
      sc.seed = config.base_seed;
      dtpca::Scenario scenario = config.r_v == 0
                                     ? dtpca::gen_homogeneous(sc)
                                     : dtpca::gen_heterogeneous(sc);
      dtpca::write_scenario_files(scenario, gen_dir);
      std::cout << "wrote scenario files to " << gen_dir << '\n';
      return kExitOk;
    });
  }
  return kExitOk;
}
