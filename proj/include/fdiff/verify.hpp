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

#ifndef FDIFF_VERIFY_HPP
#define FDIFF_VERIFY_HPP

#include "fdiff/frechet.hpp"
#include "fdiff/sampling.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

/**
 * \file
 * \brief Statistical checks that turn simulated chains into pass/fail reports.
 */

namespace fdiff {

enum class TestStatus { kPass, kFail, kInconclusive };
std::string_view to_string(TestStatus status);

struct TestMetadata {
  int n = 0;
  double horizon = 0.0;
  std::string model_id;
  std::uint64_t seed = 0;
};

struct TestReport {
  std::string id;
  double statistic = 0.0;
  double threshold = 0.0;
  TestStatus status = TestStatus::kInconclusive;
  int replications = 0;
  TestMetadata metadata;
  /// Auxiliary named quantities (component statistics, medians, counts).
  std::vector<std::pair<std::string, double>> details;
  std::string note;

  [[nodiscard]] bool pass() const { return status == TestStatus::kPass; }
};

/// Named thresholds of every test; defaults are the documented acceptance levels.
struct Thresholds {
  double covariance_rel_tol = 0.10;
  double condcov_rel_tol = 0.05;
  double mean_standard_errors = 4.0;
  double alpha = 0.01;
  int permutations = 200;
  double stopped_fraction_limit = 0.05;
  double trend_reduction = 0.5;
  double exact_zero_floor = 1e-10;
  double scaling_separation = 0.5;
  double residual_reduction = 2.0;
};

/// Minimum sample sizes.
inline constexpr int kMinCovarianceSamples = 100;
inline constexpr int kMinEnergySamples = 500;
inline constexpr int kMinTrendReplications = 100;
inline constexpr int kMinResamples = 100;

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

/// Empirical covariance (divisor R - 1) of the columns of `samples`.
Eigen::MatrixXd empirical_covariance(const Eigen::Ref<const Eigen::MatrixXd>& samples);

/// ||S - target||_F / ||target||_F for the empirical covariance S of the columns.
/// A zero target passes only with a zero S. Inconclusive when the expected sampling error of S
/// alone exceeds rel_tol. Throws InvalidInputError for fewer than 100 samples.
TestReport covariance_match(const Eigen::Ref<const Eigen::MatrixXd>& samples, const Eigen::MatrixXd& target,
                            double rel_tol, std::string id = "covariance_match");

/// Two-sample energy statistic against R fresh N(0, target) draws, calibrated by permutations.
/// Throws InvalidInputError for fewer than 500 samples.
TestReport energy_gaussianity(const Eigen::Ref<const Eigen::MatrixXd>& samples, const Eigen::MatrixXd& target,
                              double alpha, const RngStream& stream, int permutations = 200,
                              std::string id = "energy_gaussianity");

/// Two-sample energy statistic of the column sets x and y.
double energy_statistic(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y);

struct SupDiffGroup {
  int n = 0;
  std::vector<double> sup_diffs;
  int stopped = 0;
};

/// Median sup|W - V| must strictly decrease in n, with at least the configured reduction
/// from smallest to largest n when they differ by a factor >= 8. Medians all below the
/// exact-zero floor pass. More than the allowed stopped fraction is inconclusive.
TestReport sup_diff_trend(std::vector<SupDiffGroup> groups, const Thresholds& thresholds = {},
                          std::string id = "sup_diff_trend");

/// Resamples X_{k+1} R times from (k, V_k = v) and checks the martingale increment mean
/// against mean_standard_errors * sqrt(tr A / (n R)) and the increment covariance against A / n.
TestReport martingale_and_condcov(const PopulationModel& model, const LimitParams& params, int n, int k,
                                  const Eigen::VectorXd& v, int resamples, const RngStream& stream,
                                  const Thresholds& thresholds = {});

}  // namespace fdiff

#endif  // FDIFF_VERIFY_HPP
