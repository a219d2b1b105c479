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
#include "fdiff/errors.hpp"

#include <gtest/gtest.h>

#include <string>

namespace fdiff {
namespace {

const char* kValid = R"(# comment line
[manifold]
kind = sphere
dimension = 2

[model]
kind = uniform_circle   # trailing comment
radius = 0.5

[experiment]
n_list = 250, 1000, 4000
T = 2
r = 10
replications = 200
seed = 18446744073709551615
residual_steps = 100, 1600
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

// Parses and returns the diagnostic, failing the test if nothing was thrown.
std::string diagnostic(const std::string& text) {
  try {
    (void)parse_config(text, "run.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected a ConfigError";
  return {};
}

TEST(Config, ParsesAValidDescription) {
  const ExperimentConfig c = parse_config(kValid, "run.ini");
  EXPECT_EQ(c.manifold_kind, ManifoldKind::kSphere);
  EXPECT_EQ(c.dimension, 2);
  EXPECT_EQ(c.model.kind, "uniform_circle");
  EXPECT_EQ(c.model.radius, 0.5);
  EXPECT_EQ(c.n_list, (std::vector<int>{250, 1000, 4000}));
  EXPECT_EQ(c.horizon, 2.0);
  EXPECT_EQ(c.stop_radius, 10.0);
  EXPECT_EQ(c.replications, 200);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.residual_steps, (std::vector<int>{100, 1600}));
  EXPECT_EQ(c.moments, MomentSource::kAuto);
  EXPECT_EQ(c.where("model.radius"), "run.ini:8");
}

TEST(Config, DefaultsEpsilonToFivePercentOfTheHorizon) {
  EXPECT_DOUBLE_EQ(parse_config(kValid).epsilon0, 0.1);
  const ExperimentConfig c = parse_config(std::string(kValid) + "epsilon0 = 0.25\n");
  EXPECT_EQ(c.epsilon0, 0.25);
}

TEST(Config, OptionalSectionsOverrideDefaults) {
  const std::string text = std::string(kValid) +
                           "[solver]\ntol = 1e-12\nmax_iter = 50\n"
                           "[tests]\nalpha = 0.05\npermutations = 99\n"
                           "[output]\ndirectory = out/here\n";
  const ExperimentConfig c = parse_config(text);
  EXPECT_EQ(c.solver.tol, 1e-12);
  EXPECT_EQ(c.solver.max_iter, 50);
  EXPECT_EQ(c.thresholds.alpha, 0.05);
  EXPECT_EQ(c.thresholds.permutations, 99);
  EXPECT_EQ(c.thresholds.covariance_rel_tol, 0.10);
  EXPECT_EQ(c.output_dir, "out/here");
}

TEST(Config, SphereSupportBeyondTheHemisphereIsRejected) {
  const std::string msg = diagnostic(replace(kValid, "radius = 0.5", "radius = 2.0"));
  EXPECT_NE(msg.find("run.ini:8"), std::string::npos) << msg;
  EXPECT_NE(msg.find("hemisphere"), std::string::npos) << msg;
}

TEST(Config, DiagnosticsNameTheLineAndField) {
  EXPECT_NE(diagnostic(replace(kValid, "T = 2", "T = two")).find("run.ini:12: experiment.T"), std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "r = 10", "radius_of_doom = 10")).find("run.ini:13: unknown field"),
            std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "250, 1000, 4000", "1000, 250")).find("strictly ascending"), std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "T = 2", "T = -1")).find("experiment.T"), std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "r = 10", "r = 0")).find("experiment.r"), std::string::npos);
  EXPECT_NE(diagnostic(std::string(kValid) + "epsilon0 = 2\n").find("epsilon0"), std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "replications = 200", "replications = 0")).find("replications"),
            std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "seed = 18446744073709551615", "")).find("required field is missing"),
            std::string::npos);
  EXPECT_NE(diagnostic(std::string(kValid) + "seed = 3\n").find("already set on line 15"), std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "[model]", "[model")).find("malformed section header"), std::string::npos);
  EXPECT_NE(diagnostic(replace(kValid, "dimension = 2", "dimension 2")).find("expected 'key = value'"),
            std::string::npos);
  EXPECT_NE(diagnostic(std::string("seed = 1\n") + kValid).find("outside of any [section]"), std::string::npos);
}

TEST(Config, UnsupportedModelKindIsRejected) {
  const std::string msg = diagnostic(replace(kValid, "uniform_circle", "von_mises"));
  EXPECT_NE(msg.find("unsupported model kind 'von_mises'"), std::string::npos) << msg;
  EXPECT_NE(diagnostic(replace(kValid, "kind = sphere", "kind = torus")).find("manifold.kind"), std::string::npos);
}

TEST(Config, DiscreteAtomsAreParsedAndSnappedOntoTheManifold) {
  const std::string text = replace(replace(kValid, "kind = uniform_circle   # trailing comment", "kind = discrete"),
                                   "radius = 0.5",
                                   "atoms = 0.1, 0, 0.99498743710662; 0, 0.1, 0.99498743710662\nweights = 0.25, 0.75");
  const ExperimentConfig c = parse_config(text);
  ASSERT_EQ(c.model.atoms.size(), 2u);
  EXPECT_EQ(c.model.weights, (std::vector<double>{0.25, 0.75}));
  const PopulationModel model = build_model(c);
  const auto& atoms = std::get<DiscreteSpec>(model.distribution()).atoms;
  EXPECT_NEAR(atoms[0].coords.norm(), 1.0, 1e-15);

  const std::string off = replace(text, "0.1, 0, 0.99498743710662;", "0.5, 0, 0.99498743710662;");
  EXPECT_NE(diagnostic(off).find("is not a point of"), std::string::npos);
  const std::string bad_weights = replace(text, "0.25, 0.75", "0.5, 0.75");
  EXPECT_NE(diagnostic(bad_weights).find("model."), std::string::npos);
}

TEST(Config, EuclideanCenterMustHaveTheRightDimension) {
  const std::string text = replace(replace(kValid, "kind = sphere", "kind = euclidean"),
                                   "radius = 0.5", "radius = 0.5\ncenter = 1, 2, 3");
  EXPECT_NE(diagnostic(text).find("coordinates"), std::string::npos);
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW((void)load_config("/nonexistent/run.ini"), ConfigError);
}

}  // namespace
}  // namespace fdiff
