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

#include "dtpca/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dtpca/estimators.hpp"
#include "dtpca/inference.hpp"
#include "dtpca/io.hpp"

namespace dtpca {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value,
                                    const std::string& key) {
  std::string body = value;
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') {
      throw ConfigError(key + ": unterminated list");
    }
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream stream(body);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
  }
  return v;
}

double parse_f64(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  }
}

CoreMode parse_core_mode(const std::string& s) {
  if (s == "same_core") return CoreMode::kSameCore;
  if (s == "different_cores") return CoreMode::kDifferentCores;
  throw ConfigError("core_mode: expected same_core or different_cores, got '" +
                    s + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::uint64_t combine_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                           std::uint64_t c) {
  std::uint64_t h = mix64(base + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ mix64(a));
  h = mix64(h ^ mix64(b));
  h = mix64(h ^ mix64(c));
  return h;
}

struct Cell {
  std::size_t p = 0;
  std::size_t machines = 0;
  double gamma = 0.0;
  CoreMode core_mode = CoreMode::kDifferentCores;
};

std::vector<Cell> expand_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (std::size_t p : config.p_grid) {
    for (std::size_t machines : config.machine_grid) {
      for (double gamma : config.gamma_grid) {
        for (CoreMode core : config.core_modes) {
          cells.push_back(Cell{p, machines, gamma, core});
        }
      }
    }
  }
  return cells;
}

// Runs fn(0..count-1) on `threads` workers; any exception is rethrown on the
// caller after all workers drain.
void run_tasks(std::size_t count, std::size_t threads,
               const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(threads, count);
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Scenario build_scenario(const ExperimentConfig& config, const Cell& cell,
                        std::size_t rep) {
  ScenarioConfig sc;
  sc.p = cell.p;
  sc.modes = config.modes;
  sc.r_u = config.r_u;
  sc.r_v = config.r_v;
  sc.lambda = std::pow(static_cast<double>(cell.p), cell.gamma);
  sc.sigma = config.sigma;
  sc.machines = cell.machines;
  sc.core_mode = cell.core_mode;
  // gamma is deliberately absent: cells that differ only in gamma share
  // their draws, so error curves over the SNR grid are paired.
  sc.seed = combine_seed(config.base_seed, cell.p, cell.machines, rep);
  return config.r_v == 0 ? gen_homogeneous(sc) : gen_heterogeneous(sc);
}

void init_machines(std::vector<MachineState>& machines,
                   const std::vector<std::size_t>& joint_ranks) {
  for (MachineState& machine : machines) {
    machine.init_factors = hooi(machine.tensor, joint_ranks);
  }
}

bool needs_init(const std::vector<std::string>& methods) {
  for (const std::string& m : methods) {
    if (m != "pooled") return true;
  }
  return false;
}

struct MethodRun {
  std::vector<OrthonormalBasis> common;  // estimate per mode
  std::size_t upload_bytes = 0;
  std::size_t download_bytes = 0;
};

MethodRun run_method(const std::string& method, const ExperimentConfig& config,
                     std::vector<MachineState>& machines) {
  const std::size_t order = config.modes;
  const std::vector<std::size_t> ranks_u(order, config.r_u);
  MethodRun out;
  CommLedger ledger;
  if (method == "distributed") {
    if (config.r_v == 0) {
      out.common = homo_distributed_pca(machines, ranks_u, ledger).factors;
    } else {
      const std::vector<std::vector<std::size_t>> individual(
          machines.size(), std::vector<std::size_t>(order, config.r_v));
      out.common =
          hetero_distributed_pca(machines, ranks_u, individual, ledger).common;
    }
  } else if (method == "pooled") {
    out.common = pooled_pca(machines, ranks_u, ledger).factors;
  } else if (method == "single") {
    for (std::size_t j = 0; j < order; ++j) {
      out.common.push_back(
          svd_top_r(local_projected_matrix(machines.front(), j), config.r_u)
              .basis);
    }
  } else if (method == "two_iteration") {
    out.common = two_iteration_pca(machines, ranks_u, ledger).factors;
  } else if (method == "transfer") {
    std::vector<MachineState> sources(machines.begin() + 1, machines.end());
    const std::vector<std::size_t> ranks_v(order, config.r_v);
    out.common = transfer_pca(machines.front(), sources, ranks_u, ranks_v,
                              std::nullopt, ledger)
                     .common;
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }
  out.upload_bytes = ledger.total_upload_bytes();
  out.download_bytes = ledger.total_download_bytes();
  return out;
}

struct CellStats {
  double sum = 0.0;
  double sum_sq = 0.0;
  double hits = 0.0;
  std::size_t count = 0;
  std::size_t hit_count = 0;

  void add(double rho_value, std::optional<int> hit) {
    sum += rho_value;
    sum_sq += rho_value * rho_value;
    ++count;
    if (hit.has_value()) {
      hits += *hit;
      ++hit_count;
    }
  }
};

std::string core_mode_name(CoreMode mode) {
  return mode == CoreMode::kSameCore ? "same_core" : "different_cores";
}

std::string summarize(const ExperimentConfig& config,
                      const std::vector<Cell>& cells,
                      const std::vector<RunRecord>& records, bool coverage) {
  // Mode-1 statistics per (cell, method), keyed by stable indices.
  std::ostringstream out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const std::string& method : config.methods) {
      CellStats stats;
      for (const RunRecord& r : records) {
        if (r.method != method || r.mode != 1 || r.p != cells[c].p ||
            r.machines != cells[c].machines || r.gamma != cells[c].gamma) {
          continue;
        }
        stats.add(r.rho_error, r.coverage_hit);
      }
      if (stats.count == 0) continue;
      const double mean = stats.sum / static_cast<double>(stats.count);
      const double var =
          stats.count > 1
              ? (stats.sum_sq - stats.sum * mean) /
                    static_cast<double>(stats.count - 1)
              : 0.0;
      const double se =
          std::sqrt(std::max(0.0, var) / static_cast<double>(stats.count));
      char line[256];
      if (coverage && stats.hit_count > 0) {
        std::snprintf(line, sizeof(line),
                      "%-13s p=%-4zu L=%-3zu gamma=%-5.3g %-15s mean_rho=%.5g "
                      "se=%.2g coverage=%.4g\n",
                      method.c_str(), cells[c].p, cells[c].machines,
                      cells[c].gamma, core_mode_name(cells[c].core_mode).c_str(),
                      mean, se, stats.hits / static_cast<double>(stats.hit_count));
      } else {
        std::snprintf(line, sizeof(line),
                      "%-13s p=%-4zu L=%-3zu gamma=%-5.3g %-15s mean_rho=%.5g "
                      "se=%.2g\n",
                      method.c_str(), cells[c].p, cells[c].machines,
                      cells[c].gamma, core_mode_name(cells[c].core_mode).c_str(),
                      mean, se);
      }
      out << line;
    }
  }
  return out.str();
}

void write_records_csv(const std::vector<RunRecord>& records,
                       const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw IoError(path + ": cannot open for writing");
  file << run_record_csv_header() << '\n';
  for (const RunRecord& r : records) file << to_csv_row(r) << '\n';
  if (!file) throw IoError(path + ": write failed");
}

ExperimentOutcome run_driver(const ExperimentConfig& config, bool coverage) {
  config.validate(coverage);
  const std::vector<Cell> cells = expand_cells(config);
  const std::size_t tasks = cells.size() * config.reps;
  const std::size_t order = config.modes;

  std::vector<std::vector<RunRecord>> per_task(tasks);
  run_tasks(tasks, config.threads, [&](std::size_t task) {
    const Cell& cell = cells[task / config.reps];
    const std::size_t rep = task % config.reps;
    Scenario scenario = build_scenario(config, cell, rep);
    if (needs_init(config.methods)) {
      const std::vector<std::size_t> joint(order, config.r_u + config.r_v);
      init_machines(scenario.machines, joint);
    }
    std::vector<RunRecord>& rows = per_task[task];
    for (const std::string& method : config.methods) {
      const auto started = std::chrono::steady_clock::now();
      MethodRun run = run_method(method, config, scenario.machines);

      std::optional<double> sigma_hat;
      std::vector<std::optional<int>> hits(order);
      if (coverage) {
        std::vector<OrthonormalBasis> fitted = run.common;
        const double noise =
            estimate_noise_level(scenario.machines.front(), fitted);
        sigma_hat = noise;
        for (std::size_t j = 0; j < order; ++j) {
          std::vector<double> lambda =
              estimate_lambda(scenario.machines.front(), fitted, j);
          InferenceSummary summary = inference_summary(
              noise, lambda, cell.p, cell.machines, j);
          hits[j] = confidence_region_contains(
                        fitted[j], scenario.truth.common[j], summary, config.xi)
                        ? 1
                        : 0;
        }
      }
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - started)
                               .count();
      for (std::size_t j = 0; j < order; ++j) {
        RunRecord record;
        record.method = method;
        record.p = cell.p;
        record.machines = cell.machines;
        record.gamma = cell.gamma;
        record.rep = rep;
        record.mode = j + 1;
        record.rho_error = rho(run.common[j], scenario.truth.common[j]);
        record.sin_theta_error =
            sin_theta(run.common[j], scenario.truth.common[j]);
        record.upload_bytes = run.upload_bytes;
        record.download_bytes = run.download_bytes;
        record.coverage_hit = hits[j];
        record.wall_ms = elapsed;
        rows.push_back(std::move(record));
      }
    }
  });

  ExperimentOutcome outcome;
  for (auto& rows : per_task) {
    for (auto& r : rows) outcome.records.push_back(std::move(r));
  }
  outcome.summary = summarize(config, cells, outcome.records, coverage);
  write_records_csv(outcome.records, config.out_path);
  return outcome;
}

}  // namespace

void ExperimentConfig::validate(bool coverage) const {
  if (reps == 0) throw ConfigError("reps must be >= 1");
  if (p_grid.empty() || machine_grid.empty() || gamma_grid.empty() ||
      core_modes.empty()) {
    throw ConfigError("grids must be nonempty");
  }
  if (methods.empty()) throw ConfigError("methods must be nonempty");
  if (out_path.empty()) throw ConfigError("out path must be set");
  if (modes < 2) throw ConfigError("J must be >= 2");
  if (r_u == 0) throw ConfigError("r_u must be >= 1");
  if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("xi must be in (0, 1)");
  for (std::size_t p : p_grid) {
    if (r_u + r_v > p) throw ConfigError("r_u + r_v exceeds p");
  }
  const std::set<std::string> known{"distributed", "pooled", "single",
                                    "two_iteration", "transfer"};
  for (const std::string& m : methods) {
    if (known.find(m) == known.end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  const bool has_transfer =
      std::find(methods.begin(), methods.end(), "transfer") != methods.end();
  const bool has_two_iter =
      std::find(methods.begin(), methods.end(), "two_iteration") !=
      methods.end();
  switch (scenario) {
    case ScenarioKind::kHomogeneous:
      if (r_v != 0) throw ConfigError("homogeneous scenario requires r_v = 0");
      if (has_transfer) {
        throw ConfigError("transfer method needs the transfer scenario");
      }
      break;
    case ScenarioKind::kHeterogeneous:
    case ScenarioKind::kTransfer:
      if (r_v == 0) {
        throw ConfigError("heterogeneous scenarios require r_v >= 1");
      }
      if (has_two_iter) {
        throw ConfigError("two_iteration needs the homogeneous scenario");
      }
      if (scenario == ScenarioKind::kHeterogeneous && has_transfer) {
        throw ConfigError("transfer method needs the transfer scenario");
      }
      break;
  }
  if (scenario == ScenarioKind::kTransfer) {
    for (std::size_t machines : machine_grid) {
      if (machines < 2) throw ConfigError("transfer needs at least 2 machines");
    }
  }
  if (sigma.empty()) throw ConfigError("sigma must be nonempty");
  if (sigma.size() != 1) {
    if (machine_grid.size() != 1 || sigma.size() != machine_grid.front()) {
      throw ConfigError("per-machine sigma list must match a single L value");
    }
  }
  for (double s : sigma) {
    if (!(s >= 0.0)) throw ConfigError("sigma entries must be >= 0");
  }
  if (coverage) {
    if (scenario != ScenarioKind::kHomogeneous) {
      throw ConfigError("coverage runs need the homogeneous scenario");
    }
    for (const std::string& m : methods) {
      if (m != "two_iteration" && m != "pooled") {
        throw ConfigError("coverage methods must be two_iteration or pooled");
      }
    }
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig config;
  std::stringstream stream(text);
  std::string raw;
  while (std::getline(stream, raw)) {
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(key + ": empty value");

    if (key == "scenario") {
      if (value == "homogeneous") {
        config.scenario = ScenarioKind::kHomogeneous;
      } else if (value == "heterogeneous") {
        config.scenario = ScenarioKind::kHeterogeneous;
      } else if (value == "transfer") {
        config.scenario = ScenarioKind::kTransfer;
      } else {
        throw ConfigError("scenario: unknown value '" + value + "'");
      }
    } else if (key == "p") {
      config.p_grid.clear();
      for (const std::string& s : split_list(value, key)) {
        config.p_grid.push_back(parse_u64(s, key));
      }
    } else if (key == "L") {
      config.machine_grid.clear();
      for (const std::string& s : split_list(value, key)) {
        config.machine_grid.push_back(parse_u64(s, key));
      }
    } else if (key == "gamma") {
      config.gamma_grid.clear();
      for (const std::string& s : split_list(value, key)) {
        config.gamma_grid.push_back(parse_f64(s, key));
      }
    } else if (key == "core_mode") {
      config.core_modes.clear();
      for (const std::string& s : split_list(value, key)) {
        config.core_modes.push_back(parse_core_mode(s));
      }
    } else if (key == "methods") {
      config.methods = split_list(value, key);
    } else if (key == "J") {
      config.modes = parse_u64(value, key);
    } else if (key == "r_u") {
      config.r_u = parse_u64(value, key);
    } else if (key == "r_v") {
      config.r_v = parse_u64(value, key);
    } else if (key == "sigma") {
      config.sigma.clear();
      for (const std::string& s : split_list(value, key)) {
        config.sigma.push_back(parse_f64(s, key));
      }
    } else if (key == "reps") {
      config.reps = parse_u64(value, key);
    } else if (key == "seed") {
      config.base_seed = parse_u64(value, key);
    } else if (key == "out") {
      config.out_path = value;
    } else if (key == "threads") {
      config.threads = parse_u64(value, key);
    } else if (key == "xi") {
      config.xi = parse_f64(value, key);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError(path + ": cannot open config");
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse_experiment_config(buffer.str());
}

std::string run_record_csv_header() {
  return "method,p,L,gamma,rep,mode,rho_error,sin_theta_error,recon_error,"
         "upload_bytes,download_bytes,coverage_hit,wall_ms";
}

std::string to_csv_row(const RunRecord& r) {
  std::ostringstream out;
  out << r.method << ',' << r.p << ',' << r.machines << ','
      << format_double(r.gamma) << ',' << r.rep << ',' << r.mode << ','
      << format_double(r.rho_error) << ',' << format_double(r.sin_theta_error)
      << ',';
  if (r.recon_error.has_value()) out << format_double(*r.recon_error);
  out << ',' << r.upload_bytes << ',' << r.download_bytes << ',';
  if (r.coverage_hit.has_value()) out << *r.coverage_hit;
  out << ',' << r.wall_ms;
  return out.str();
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  return run_driver(config, /*coverage=*/false);
}

ExperimentOutcome run_coverage(const ExperimentConfig& config) {
  return run_driver(config, /*coverage=*/true);
}

void eval_reconstruction(const std::vector<std::string>& bases_files,
                         const std::vector<std::string>& tensor_files,
                         const std::string& out_path) {
  if (bases_files.empty() || tensor_files.empty()) {
    throw ConfigError("eval-recon: need basis files and tensor files");
  }
  std::vector<OrthonormalBasis> bases;
  bases.reserve(bases_files.size());
  for (const std::string& path : bases_files) {
    Matrix m = read_matrix_file(path);
    try {
      bases.push_back(OrthonormalBasis(std::move(m)));
    } catch (const NumericalError& e) {
      throw IoError(path + ": not an orthonormal basis (" + e.what() + ")");
    }
  }
  // All rows are computed before anything is written, so a failing input
  // never leaves a partial CSV behind.
  std::vector<std::pair<std::string, double>> rows;
  rows.reserve(tensor_files.size());
  double total = 0.0;
  for (const std::string& path : tensor_files) {
    DenseTensor t = read_tensor_file(path);
    if (t.order() != bases.size()) {
      throw IoError(path + ": tensor order does not match basis count");
    }
    double re = 0.0;
    try {
      re = reconstruction_error(bases, t);
    } catch (const InvalidArgument& e) {
      throw IoError(path + ": " + e.what());
    }
    rows.emplace_back(path, re);
    total += re;
  }
  std::ofstream file(out_path, std::ios::trunc);
  if (!file) throw IoError(out_path + ": cannot open for writing");
  file << "tensor,recon_error\n";
  for (const auto& [path, re] : rows) {
    file << path << ',' << format_double(re) << '\n';
  }
  file << "average," << format_double(total / static_cast<double>(rows.size()))
       << '\n';
  if (!file) throw IoError(out_path + ": write failed");
}

void write_scenario_files(const Scenario& scenario, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  for (std::size_t l = 0; l < scenario.machines.size(); ++l) {
    write_tensor_file(scenario.machines[l].tensor,
                      (base / ("machine_" + std::to_string(l) + ".dtpt")).string());
    write_tensor_file(scenario.truth.clean[l],
                      (base / ("clean_" + std::to_string(l) + ".dtpt")).string());
  }
  for (std::size_t j = 0; j < scenario.truth.common.size(); ++j) {
    write_matrix_file(scenario.truth.common[j].matrix(),
                      (base / ("truth_u" + std::to_string(j + 1) + ".dtpt")).string());
  }
  for (std::size_t l = 0; l < scenario.truth.individual.size(); ++l) {
    for (std::size_t j = 0; j < scenario.truth.individual[l].size(); ++j) {
      write_matrix_file(scenario.truth.individual[l][j].matrix(),
                        (base / ("truth_v" + std::to_string(l) + "_" +
                                 std::to_string(j + 1) + ".dtpt"))
                            .string());
    }
  }
}

}  // namespace dtpca
