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

#include "fdiff/config.hpp"
#include "fdiff/experiment.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fdiff {
namespace {

namespace fs = std::filesystem;

const char* kFlat = R"([manifold]
kind = euclidean
dimension = 2
[model]
kind = gaussian
sigma = 1
truncation = 5
[experiment]
n_list = 100
T = 1
replications = 10
seed = 1
)";

const char* kSphere = R"([manifold]
kind = sphere
dimension = 2
[model]
kind = uniform_circle
radius = 0.5
[experiment]
n_list = 60, 120
T = 1
replications = 12
seed = 3
residual_steps = 10, 40
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fdiff_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) {
    ++rows;
  }
  return rows;
}

TEST(Experiment, EuclideanSmokeRunPassesWithExactCoupling) {
  RunOptions opts;
  opts.out_dir = scratch("smoke");
  const auto start = std::chrono::steady_clock::now();
  const RunSummary s = run_experiment(parse_config(kFlat), opts);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1.0);
  EXPECT_EQ(s.exit_code(), 0);
  ASSERT_EQ(s.per_n.size(), 1u);
  EXPECT_LT(s.per_n[0].sup_diff_median, 1e-10);
  EXPECT_EQ(s.params.provenance, "analytic");
  EXPECT_EQ(slurp(*opts.out_dir / "paths_100.csv").substr(0, 38), "replication,t,V_1,V_2,W_1,W_2,stopped\n");
}

TEST(Experiment, ReferencedFilesExistWithMatchingRowCounts) {
  RunOptions opts;
  opts.out_dir = scratch("rows");
  opts.workers = 2;
  const ExperimentConfig c = parse_config(kSphere);
  const RunSummary s = run_experiment(c, opts);
  const nlohmann::json summary = nlohmann::json::parse(slurp(*opts.out_dir / "summary.json"));
  for (const auto& f : summary["files"]) {
    const fs::path p = *opts.out_dir / f["file"].get<std::string>();
    ASSERT_TRUE(fs::exists(p)) << p;
    if (p.extension() == ".csv") {
      EXPECT_EQ(data_rows(p), f["rows"].get<int>()) << p;
    } else {
      EXPECT_EQ(static_cast<int>(nlohmann::json::parse(slurp(p)).size()), f["rows"].get<int>()) << p;
    }
  }
  // Unstopped runs: one row per replication and grid point (k = 0 .. n in unit strides).
  EXPECT_EQ(data_rows(*opts.out_dir / "paths_60.csv"), 12 * 61);
  EXPECT_EQ(data_rows(*opts.out_dir / "paths_120.csv"), 12 * 121);
  EXPECT_EQ(summary["limit_params"]["provenance"], "analytic");
  EXPECT_NE(s.find("sup_diff_trend"), nullptr);
  EXPECT_EQ(s.find("sup_diff_trend")->status, TestStatus::kInconclusive);
  ASSERT_NE(s.find("linearization_residual_n60"), nullptr);
}

TEST(Experiment, OutputsAreByteIdenticalAcrossWorkerCounts) {
  const ExperimentConfig c = parse_config(kSphere);
  RunOptions one;
  one.workers = 1;
  one.out_dir = scratch("w1");
  RunOptions three;
  three.workers = 3;
  three.out_dir = scratch("w3");
  (void)run_experiment(c, one);
  (void)run_experiment(c, three);
  for (const char* f : {"paths_60.csv", "paths_120.csv", "plotdata_supdiff.csv", "reports.json", "summary.json"}) {
    EXPECT_EQ(slurp(*one.out_dir / f), slurp(*three.out_dir / f)) << f;
  }
}

TEST(Experiment, SeedOverrideChangesTheData) {
  const ExperimentConfig c = parse_config(kSphere);
  RunOptions a;
  a.out_dir = scratch("seed_a");
  RunOptions b = a;
  b.out_dir = scratch("seed_b");
  b.seed_override = 99;
  const RunSummary sa = run_experiment(c, a);
  const RunSummary sb = run_experiment(c, b);
  EXPECT_EQ(sb.config.seed, 99u);
  EXPECT_NE(slurp(*a.out_dir / "paths_60.csv"), slurp(*b.out_dir / "paths_60.csv"));
}

TEST(Experiment, OutputDirectoryPrecedence) {
  ExperimentConfig c = parse_config(kFlat);
  RunOptions opts;
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(resolve_output_dir(c, opts), fs::path("fdiff_out"));
  ::setenv(kOutputDirEnv, "/tmp/from_env", 1);
  EXPECT_EQ(resolve_output_dir(c, opts), fs::path("/tmp/from_env"));
  c.output_dir = "from_config";
  EXPECT_EQ(resolve_output_dir(c, opts), fs::path("from_config"));
  opts.out_dir = "from_flag";
  EXPECT_EQ(resolve_output_dir(c, opts), fs::path("from_flag"));
  ::unsetenv(kOutputDirEnv);
}

TEST(Experiment, DescribePrintsTheDiffusionCoefficient) {
  const std::string sphere = describe_model(parse_config(kSphere));
  EXPECT_NE(sphere.find("A           [0.136308157, 0]"), std::string::npos) << sphere;
  EXPECT_NE(sphere.find("provenance  analytic"), std::string::npos);

  const LimitParams flat = limit_params_for(parse_config(kFlat));
  EXPECT_LT((flat.a.entries - flat.gamma.entries).norm(), 1e-14);
}

TEST(Experiment, MonteCarloMomentsAreRecordedAsSuch) {
  std::string text = kSphere;
  text.replace(text.find("radius = 0.5"), 12, "radius = 0.5\nmoments = monte-carlo\nmc_samples = 20000");
  const LimitParams p = limit_params_for(parse_config(text));
  EXPECT_EQ(p.provenance, "monte-carlo");
  EXPECT_NEAR(p.a.entries(0, 0), 0.136308157, 0.01);
}

}  // namespace
}  // namespace fdiff
