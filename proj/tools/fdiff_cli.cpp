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

// fdiff run <config> [--workers N] [--seed-override S] [--out DIR]
// fdiff describe <config>
//
// Exit status: 0 all decisive tests pass, 1 some test failed, 2 invalid config,
// 3 numerical failure.

#include "fdiff/config.hpp"
#include "fdiff/errors.hpp"
#include "fdiff/experiment.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void print_reports(const fdiff::RunSummary& summary) {
  for (const auto& r : summary.reports) {
    fmt::print("{:<14}{:<34}statistic={:<12.6g}threshold={:<10.4g}{}\n", fmt::format("[{}]", fdiff::to_string(r.status)),
               r.id, r.statistic, r.threshold, r.note);
  }
  for (const auto& s : summary.per_n) {
    fmt::print("n={:<7} median sup|W-V|={:.6g}  stopped={}/{}\n", s.n, s.sup_diff_median, s.stopped,
               s.replications);
  }
  fmt::print("outputs in {} ({:.2f} s)\n", summary.out_dir.string(), summary.wall_clock_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fréchet-mean diffusion limit experiments"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  std::uint64_t seed_override = 0;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run every replication and write CSV/JSON artifacts");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--workers", workers, "Worker threads (default: machine parallelism)")->check(CLI::NonNegativeNumber);
  auto* seed_opt = run->add_option("--seed-override", seed_override, "Replace the config seed");
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");

  auto* describe = app.add_subcommand("describe", "Print the limit parameters without running chains");
  describe->add_option("config", config_path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const fdiff::ExperimentConfig config = fdiff::load_config(config_path);
    if (describe->parsed()) {
      fmt::print("{}", fdiff::describe_model(config));
      return 0;
    }
    fdiff::RunOptions options;
    options.workers = workers;
    if (seed_opt->count() > 0) {
      options.seed_override = seed_override;
    }
    if (out_opt->count() > 0) {
      options.out_dir = out_dir;
    }
    const fdiff::RunSummary summary = fdiff::run_experiment(config, options);
    print_reports(summary);
    return summary.all_passed() ? 0 : kExitFail;
  } catch (const fdiff::ConfigError& e) {
    fmt::print(stderr, "invalid config: {}\n", e.what());
    return kExitConfig;
  } catch (const fdiff::ReplicationFailure& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (const fdiff::AssumptionViolation& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (const fdiff::NumericalFailure& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFail;
  }
}
