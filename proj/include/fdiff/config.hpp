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

#ifndef FDIFF_CONFIG_HPP
#define FDIFF_CONFIG_HPP

#include "fdiff/frechet.hpp"
#include "fdiff/geometry.hpp"
#include "fdiff/sampling.hpp"
#include "fdiff/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

/**
 * \file
 * \brief Experiment descriptions in a flat `key = value` format with `[section]` headers.
 *
 * See docs/config.md for the grammar and the list of keys.
 */

namespace fdiff {

struct ModelConfig {
  std::string kind;
  /// Empty selects the canonical origin (north pole, hyperboloid vertex, 0).
  Eigen::VectorXd center;
  double radius = 0.0;
  double max_radius = 0.0;
  double sigma = 0.0;
  double truncation = 0.0;
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> weights;
};

struct ExperimentConfig {
  std::string source = "<string>";

  ManifoldKind manifold_kind = ManifoldKind::kEuclidean;
  int dimension = 0;
  ModelConfig model;
  MomentSource moments = MomentSource::kAuto;
  int mc_samples = 100000;

  std::vector<int> n_list;
  double horizon = 1.0;
  double stop_radius = 10.0;
  double epsilon0 = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<int> residual_steps;
  int grid_stride = 0;

  SolverOptions solver;
  Thresholds thresholds;
  std::string output_dir;

  /// "section.key" -> line number of its definition, for diagnostics.
  std::map<std::string, int> lines;

  [[nodiscard]] Manifold manifold() const { return {manifold_kind, dimension}; }
  /// Line-qualified location of a key, e.g. "run.ini:12".
  [[nodiscard]] std::string where(const std::string& key) const;
};

/// Parses and validates. Throws ConfigError with "<source>:<line>: <field>: <reason>" diagnostics.
ExperimentConfig parse_config(std::string_view text, std::string source = "<string>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// The population model described by the config. Throws ConfigError.
PopulationModel build_model(const ExperimentConfig& config);

}  // namespace fdiff

#endif  // FDIFF_CONFIG_HPP
