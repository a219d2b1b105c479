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

#include "fdiff/verify.hpp"

#include "fdiff/chains.hpp"
#include "fdiff/errors.hpp"
#include "fdiff/limitlaw.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fdiff {

std::string_view to_string(TestStatus status) {
  switch (status) {
    case TestStatus::kPass:
      return "pass";
    case TestStatus::kFail:
      return "fail";
    case TestStatus::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw InvalidInputError("quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) {
  return quantile(std::move(values), 0.5);
}

Eigen::MatrixXd empirical_covariance(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  if (samples.cols() < 2) {
    throw InvalidInputError("empirical covariance needs at least two samples");
  }
  const Eigen::VectorXd mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - mean;
  return (centered * centered.transpose()) / static_cast<double>(samples.cols() - 1);
}

TestReport covariance_match(const Eigen::Ref<const Eigen::MatrixXd>& samples, const Eigen::MatrixXd& target,
                            double rel_tol, std::string id) {
  if (samples.cols() < kMinCovarianceSamples) {
    throw InvalidInputError(fmt::format("covariance_match needs >= {} samples, got {}", kMinCovarianceSamples,
                                        samples.cols()));
  }
  if (target.rows() != samples.rows() || target.cols() != samples.rows()) {
    throw InvalidInputError("covariance_match: target has the wrong shape");
  }
  if ((target - target.transpose()).norm() > 1e-10 * (1.0 + target.norm())) {
    throw InvalidInputError("covariance_match: target is not symmetric");
  }
  const Eigen::MatrixXd s = empirical_covariance(samples);
  const double target_norm = target.norm();
  TestReport report;
  report.id = std::move(id);
  report.threshold = rel_tol;
  report.replications = static_cast<int>(samples.cols());
  if (target_norm == 0.0) {
    report.statistic = s.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    report.statistic = (s - target).norm() / target_norm;
  }
  report.status = report.statistic <= rel_tol ? TestStatus::kPass : TestStatus::kFail;
  report.details = {{"empirical_trace", s.trace()}, {"target_trace", target.trace()}};
  if (target_norm > 0.0) {
    // RMS relative Frobenius error of a Gaussian sample covariance (Wishart second moment).
    const double floor = std::sqrt(((target * target).trace() + target.trace() * target.trace()) /
                                   static_cast<double>(samples.cols() - 1)) /
                         target_norm;
    report.details.emplace_back("noise_floor", floor);
    if (floor > rel_tol) {
      report.status = TestStatus::kInconclusive;
      report.note = fmt::format("sampling error {:.3g} exceeds the tolerance at {} samples", floor, samples.cols());
    }
  }
  return report;
}

double energy_statistic(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y) {
  const auto mean_distance = [](const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      total += (b.colwise() - a.col(i)).colwise().norm().sum();
    }
    return total / (static_cast<double>(a.cols()) * static_cast<double>(b.cols()));
  };
  const double nx = static_cast<double>(x.cols());
  const double ny = static_cast<double>(y.cols());
  return (nx * ny / (nx + ny)) * (2.0 * mean_distance(x, y) - mean_distance(x, x) - mean_distance(y, y));
}

TestReport energy_gaussianity(const Eigen::Ref<const Eigen::MatrixXd>& samples, const Eigen::MatrixXd& target,
                              double alpha, const RngStream& stream, int permutations, std::string id) {
  const Eigen::Index r = samples.cols();
  if (r < kMinEnergySamples) {
    throw InvalidInputError(fmt::format("energy_gaussianity needs >= {} samples, got {}", kMinEnergySamples, r));
  }
  if (permutations < 1 || !(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidInputError("energy_gaussianity needs permutations >= 1 and 0 < alpha < 1");
  }
  auto engine = stream.engine();
  const Eigen::MatrixXd reference = sample_gaussian(target, static_cast<int>(r), engine);

  const Eigen::Index total = 2 * r;
  Eigen::MatrixXd pooled(samples.rows(), total);
  pooled << samples, reference;
  Eigen::MatrixXd dist(total, total);
  for (Eigen::Index j = 0; j < total; ++j) {
    dist.col(j) = (pooled.colwise() - pooled.col(j)).colwise().norm().transpose();
  }
  const Eigen::VectorXd row_sums = dist.rowwise().sum();
  const double all_sum = row_sums.sum();
  const double n = static_cast<double>(r);

  // With S_all = S_xx + S_yy + 2 S_xy and sum_{i in x} row_i = S_xx + S_xy, only S_xx
  // needs a quadratic pass per labeling.
  const auto statistic_for = [&](const std::vector<Eigen::Index>& first) {
    double s_xx = 0.0;
    double rows_x = 0.0;
    for (const Eigen::Index i : first) {
      rows_x += row_sums[i];
      for (const Eigen::Index j : first) {
        s_xx += dist(i, j);
      }
    }
    const double s_xy = rows_x - s_xx;
    const double s_yy = all_sum - s_xx - 2.0 * s_xy;
    return (n / 2.0) * (2.0 * s_xy / (n * n) - s_xx / (n * n) - s_yy / (n * n));
  };

  std::vector<Eigen::Index> labels(static_cast<std::size_t>(total));
  std::iota(labels.begin(), labels.end(), Eigen::Index{0});
  const double observed = statistic_for({labels.begin(), labels.begin() + r});

  std::vector<double> null_stats;
  null_stats.reserve(static_cast<std::size_t>(permutations));
  for (int p = 0; p < permutations; ++p) {
    std::shuffle(labels.begin(), labels.end(), engine);
    null_stats.push_back(statistic_for({labels.begin(), labels.begin() + r}));
  }
  const double threshold = quantile(null_stats, 1.0 - alpha);

  TestReport report;
  report.id = std::move(id);
  report.statistic = observed;
  report.threshold = threshold;
  report.replications = static_cast<int>(r);
  report.status = observed <= threshold ? TestStatus::kPass : TestStatus::kFail;
  report.details = {{"alpha", alpha}, {"permutations", static_cast<double>(permutations)}};
  return report;
}

TestReport sup_diff_trend(std::vector<SupDiffGroup> groups, const Thresholds& thresholds, std::string id) {
  if (groups.size() < 2) {
    throw InvalidInputError("sup_diff_trend needs at least two values of n");
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (static_cast<int>(groups[i].sup_diffs.size()) < kMinTrendReplications) {
      throw InvalidInputError(fmt::format("sup_diff_trend needs >= {} replications per n", kMinTrendReplications));
    }
    if (i > 0 && groups[i].n == groups[i - 1].n) {
      throw InvalidInputError("sup_diff_trend: duplicate n");
    }
  }

  TestReport report;
  report.id = std::move(id);
  report.replications = static_cast<int>(groups.front().sup_diffs.size());
  std::vector<double> medians;
  double worst_stopped = 0.0;
  for (const auto& g : groups) {
    medians.push_back(median(g.sup_diffs));
    const double stopped = static_cast<double>(g.stopped) / static_cast<double>(g.sup_diffs.size());
    worst_stopped = std::max(worst_stopped, stopped);
    report.details.emplace_back(fmt::format("median_n{}", g.n), medians.back());
    report.details.emplace_back(fmt::format("stopped_fraction_n{}", g.n), stopped);
  }

  const double max_median = *std::max_element(medians.begin(), medians.end());
  const bool ratio_applies = groups.back().n >= 8 * groups.front().n;
  if (max_median < thresholds.exact_zero_floor) {
    report.statistic = max_median;
    report.threshold = thresholds.exact_zero_floor;
    report.status = TestStatus::kPass;
    report.note = "all medians below the exact-zero floor";
  } else {
    bool decreasing = true;
    for (std::size_t i = 1; i < medians.size(); ++i) {
      decreasing = decreasing && medians[i] < medians[i - 1];
    }
    report.statistic = medians.back() / medians.front();
    report.threshold = ratio_applies ? thresholds.trend_reduction : 1.0;
    const bool reduced = !ratio_applies || report.statistic < thresholds.trend_reduction;
    report.status = decreasing && reduced ? TestStatus::kPass : TestStatus::kFail;
    if (!decreasing) {
      report.note = "medians are not strictly decreasing in n";
    }
  }
  if (worst_stopped > thresholds.stopped_fraction_limit) {
    report.status = TestStatus::kInconclusive;
    report.note = fmt::format("stopped fraction {:.3f} exceeds {:.3f}", worst_stopped, thresholds.stopped_fraction_limit);
  }
  return report;
}

TestReport martingale_and_condcov(const PopulationModel& model, const LimitParams& params, int n, int k,
                                  const Eigen::VectorXd& v, int resamples, const RngStream& stream,
                                  const Thresholds& thresholds) {
  if (resamples < kMinResamples) {
    throw InvalidInputError(fmt::format("martingale_and_condcov needs >= {} resamples, got {}", kMinResamples, resamples));
  }
  if (k < 1 || n < 1) {
    throw InvalidInputError("martingale_and_condcov needs k >= 1 and n >= 1");
  }
  const Manifold& m = model.manifold();
  const int d = m.dim();
  if (v.size() != d) {
    throw InvalidInputError("martingale_and_condcov: conditioning state has the wrong dimension");
  }
  Sampler sampler(model, stream.with_purpose(StreamPurpose::kResample));
  Eigen::MatrixXd increments(d, resamples);
  for (int j = 0; j < resamples; ++j) {
    increments.col(j) = v_step(m, params, v, k, sampler.draw(), n) - v;
  }
  const double mean_norm = increments.rowwise().mean().norm();
  const double mean_bound =
      thresholds.mean_standard_errors * std::sqrt(params.a.entries.trace() / (static_cast<double>(n) * resamples));
  const Eigen::MatrixXd target = params.a.entries / static_cast<double>(n);
  const Eigen::MatrixXd s = empirical_covariance(increments);
  const double target_norm = target.norm();
  double cov_err = 0.0;
  if (target_norm > 0.0) {
    cov_err = (s - target).norm() / target_norm;
  } else if (s.norm() > 0.0) {
    cov_err = std::numeric_limits<double>::infinity();
  }
  double mean_ratio = 0.0;
  if (mean_bound > 0.0) {
    mean_ratio = mean_norm / mean_bound;
  } else if (mean_norm > 0.0) {
    mean_ratio = std::numeric_limits<double>::infinity();
  }

  TestReport report;
  report.id = "martingale_and_condcov";
  report.statistic = std::max(mean_ratio, cov_err / thresholds.condcov_rel_tol);
  report.threshold = 1.0;
  report.replications = resamples;
  report.metadata.n = n;
  report.metadata.model_id = model.id();
  report.metadata.seed = stream.seed;
  report.status = mean_norm <= mean_bound && cov_err <= thresholds.condcov_rel_tol ? TestStatus::kPass : TestStatus::kFail;
  report.details = {{"k", static_cast<double>(k)},
                    {"mean_increment_norm", mean_norm},
                    {"mean_bound", mean_bound},
                    {"covariance_rel_error", cov_err},
                    {"covariance_rel_tol", thresholds.condcov_rel_tol}};
  return report;
}

}  // namespace fdiff
