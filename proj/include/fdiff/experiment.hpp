// Copyright 2026 The fdiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FDIFF_EXPERIMENT_HPP
#define FDIFF_EXPERIMENT_HPP

#include "fdiff/config.hpp"
#include "fdiff/errors.hpp"
#include "fdiff/frechet.hpp"
#include "fdiff/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/**
 * \file
 * \brief Config-driven runs: replications on a worker pool, CSV/JSON artifacts, test reports.
 *
 * Artifacts written to the output directory:
 *
 *   paths_<n>.csv          replication,t,V_1..V_d,W_1..W_d,stopped
 *   plotdata_supdiff.csv   n,median,q25,q75
 *   reports.json           every TestReport
 *   summary.json           config echo, limit parameters, per-n statistics, file row counts
 *   timing.json            wall-clock seconds (kept apart so the rest is byte-reproducible)
 */

namespace fdiff {

inline constexpr const char* kVersion = "0.1.0";

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "FDIFF_OUTPUT_DIR";

struct RunOptions {
  /// 0 selects std::thread::hardware_concurrency().
  int workers = 0;
  std::optional<std::uint64_t> seed_override;
  /// Takes precedence over the config's [output] directory and the environment.
  std::optional<std::filesystem::path> out_dir;
};

/// A replication failed numerically; carries what is needed to reproduce it.
class ReplicationFailure : public NumericalFailure {
 public:
  ReplicationFailure(int n, int replication, std::uint64_t seed, const std::string& what);

  int n;
  int replication;
  std::uint64_t seed;
};

struct NStatistics {
  int n = 0;
  int steps = 0;
  int replications = 0;
  int stopped = 0;
  double sup_diff_median = 0.0;
  double sup_diff_q25 = 0.0;
  double sup_diff_q75 = 0.0;
  int max_solver_iterations = 0;
  int csv_rows = 0;
};

struct RunSummary {
  ExperimentConfig config;
  LimitParams params;
  std::vector<NStatistics> per_n;
  std::vector<TestReport> reports;
  std::filesystem::path out_dir;
  double wall_clock_seconds = 0.0;

  /// True when no report failed (inconclusive reports do not count).
  [[nodiscard]] bool all_passed() const;
  [[nodiscard]] const TestReport* find(const std::string& id) const;
  [[nodiscard]] int exit_code() const { return all_passed() ? 0 : 1; }
};

/// Output directory after applying the precedence --out, [output] directory, environment, ./fdiff_out.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options);

/// Population mean, frame and limit parameters the run would use.
LimitParams limit_params_for(const ExperimentConfig& config);

/// Runs every replication of every n, writes the artifacts and evaluates the reports.
/// Throws ConfigError, ReplicationFailure, AssumptionViolation or NumericalFailure.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Human-readable mu, E[H], Gamma, A and sqrt(A) with their provenance.
std::string describe_model(const ExperimentConfig& config);

}  // namespace fdiff

#endif  // FDIFF_EXPERIMENT_HPP
