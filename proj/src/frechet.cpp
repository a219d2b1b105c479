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

#include "fdiff/frechet.hpp"

#include "fdiff/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace fdiff {

namespace {

constexpr int kMaxHalvings = 60;
constexpr double kSingularityFloor = 1e-8;
constexpr double kNegativeEigenvalueFloor = -1e-10;

/// Frechet functional and its negative half-gradient sum_i w_i log_x(X_i) at x.
///
/// Distances come from chord lengths |X_i - x| (one transcendental per point), which stay
/// accurate for nearby points where arccos of an inner product would not.
class Objective {
 public:
  Objective(const Manifold& manifold, const Eigen::Ref<const Eigen::MatrixXd>& points,
            const Eigen::Ref<const Eigen::VectorXd>& weights)
      : manifold_{manifold}, points_{points}, weights_{weights}, coef_(points.cols()) {}

  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& gradient) {
    const Eigen::Index count = points_.cols();
    const bool uniform = weights_.size() == 0;
    const double uniform_weight = 1.0 / static_cast<double>(count);
    const auto weight = [&](Eigen::Index i) { return uniform ? uniform_weight : weights_[i]; };
    double value = 0.0;
    switch (manifold_.kind()) {
      case ManifoldKind::kEuclidean: {
        chord_ = (points_.colwise() - x).colwise().squaredNorm();
        for (Eigen::Index i = 0; i < count; ++i) {
          coef_[i] = weight(i);
          value += coef_[i] * chord_[i];
        }
        gradient.noalias() = points_ * coef_;
        gradient -= coef_.sum() * x;
        return value;
      }
      case ManifoldKind::kSphere: {
        chord_ = (points_.colwise() - x).colwise().norm();
        double along_x = 0.0;
        for (Eigen::Index i = 0; i < count; ++i) {
          const double h = std::min(chord_[i], 2.0);
          const double theta = 2.0 * std::asin(0.5 * h);
          if (theta > std::numbers::pi - Manifold::kCutLocusMargin) {
            throw CutLocusError(fmt::format("Frechet iteration hit the cut locus of data point {}", i));
          }
          const double sin_theta = h * std::sqrt(std::max(0.0, 1.0 - 0.25 * h * h));
          const double cos_theta = 1.0 - 0.5 * h * h;
          const double w = weight(i);
          coef_[i] = sin_theta > 0.0 ? w * theta / sin_theta : w;
          along_x += coef_[i] * cos_theta;
          value += w * theta * theta;
        }
        gradient.noalias() = points_ * coef_;
        gradient -= along_x * x;
        gradient -= gradient.dot(x) * x;
        return value;
      }
      case ManifoldKind::kHyperbolic: {
        const Eigen::Index last = points_.rows() - 1;
        diff_ = points_.colwise() - x;
        chord_ = diff_.topRows(last).colwise().squaredNorm() - diff_.row(last).array().square().matrix();
        double along_x = 0.0;
        for (Eigen::Index i = 0; i < count; ++i) {
          const double m = std::sqrt(std::max(0.0, chord_[i]));
          const double theta = 2.0 * std::asinh(0.5 * m);
          const double sinh_theta = m * std::sqrt(1.0 + 0.25 * m * m);
          const double cosh_theta = 1.0 + 0.5 * m * m;
          const double w = weight(i);
          coef_[i] = sinh_theta > 0.0 ? w * theta / sinh_theta : w;
          along_x += coef_[i] * cosh_theta;
          value += w * theta * theta;
        }
        gradient.noalias() = points_ * coef_;
        gradient -= along_x * x;
        gradient += manifold_.ambient_inner(gradient, x) * x;
        return value;
      }
    }
    return value;
  }

  double norm(const Eigen::VectorXd& tangent) const {
    return std::sqrt(std::max(0.0, manifold_.ambient_inner(tangent, tangent)));
  }

 private:
  const Manifold& manifold_;
  Eigen::Ref<const Eigen::MatrixXd> points_;
  Eigen::Ref<const Eigen::VectorXd> weights_;
  Eigen::VectorXd coef_;
  Eigen::RowVectorXd chord_;
  Eigen::MatrixXd diff_;
};

}  // namespace

FrechetSolveResult frechet_mean(const Manifold& manifold, const Eigen::Ref<const Eigen::MatrixXd>& points,
                                const Eigen::Ref<const Eigen::VectorXd>& weights, const Eigen::VectorXd& init,
                                const SolverOptions& options) {
  if (points.cols() == 0) {
    throw InvalidInputError("Frechet mean of an empty sample");
  }
  if (points.rows() != manifold.ambient_dim() || init.size() != manifold.ambient_dim()) {
    throw InvalidInputError(fmt::format("Frechet mean: points must have ambient dimension {}", manifold.ambient_dim()));
  }
  if (weights.size() != 0 && weights.size() != points.cols()) {
    throw InvalidInputError("Frechet mean: one weight per point required");
  }

  Objective objective(manifold, points, weights);
  FrechetSolveResult result;
  Eigen::VectorXd x = init;
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd trial_grad(x.size());
  double value = objective.evaluate(x, grad);
  double grad_norm = objective.norm(grad);
  if (options.record_trace) {
    result.functional_trace.push_back(value);
  }

  constexpr double kRoundoff = 4.0 * std::numeric_limits<double>::epsilon();
  while (grad_norm > options.tol && result.iterations < options.max_iter) {
    bool accepted = false;
    double tau = 1.0;
    for (int halving = 0; halving < kMaxHalvings; ++halving, tau *= 0.5) {
      Eigen::VectorXd trial = manifold.exp_map(TangentVector{{x}, tau * grad}).coords;
      const double trial_value = objective.evaluate(trial, trial_grad);
      const double trial_norm = objective.norm(trial_grad);
      // Near the optimum the decrease drops below the functional's rounding; fall back
      // to requiring a smaller gradient there.
      if (trial_value < value || (trial_value <= value * (1.0 + kRoundoff) && trial_norm < grad_norm)) {
        x = std::move(trial);
        grad.swap(trial_grad);
        value = trial_value;
        grad_norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }
    ++result.iterations;
    if (options.record_trace) {
      result.functional_trace.push_back(value);
    }
  }
  result.mean = ManifoldPoint{std::move(x)};
  result.gradient_norm = grad_norm;
  result.converged = grad_norm <= options.tol;
  return result;
}

FrechetSolveResult frechet_mean(const Manifold& manifold, std::span<const ManifoldPoint> points,
                                std::span<const double> weights, const ManifoldPoint& init,
                                const SolverOptions& options) {
  if (points.empty()) {
    throw InvalidInputError("Frechet mean of an empty sample");
  }
  if (!weights.empty() && weights.size() != points.size()) {
    throw InvalidInputError("Frechet mean: one weight per point required");
  }
  Eigen::MatrixXd matrix(manifold.ambient_dim(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].coords.size() != manifold.ambient_dim()) {
      throw InvalidInputError(fmt::format("Frechet mean: point {} has the wrong dimension", i));
    }
    matrix.col(static_cast<Eigen::Index>(i)) = points[i].coords;
  }
  Eigen::VectorXd w;
  if (!weights.empty()) {
    w = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    if ((w.array() < 0.0).any() || std::abs(w.sum() - 1.0) > 1e-12) {
      throw InvalidInputError("Frechet mean: weights must be nonnegative and sum to 1");
    }
  }
  return frechet_mean(manifold, matrix, w, init.coords, options);
}

RunningFrechetMean::RunningFrechetMean(Manifold manifold, int capacity, SolverOptions options)
    : manifold_{manifold}, options_{options}, points_(manifold.ambient_dim(), std::max(capacity, 1)) {}

const FrechetSolveResult& RunningFrechetMean::add(const ManifoldPoint& x) {
  if (x.coords.size() != manifold_.ambient_dim()) {
    throw InvalidInputError("RunningFrechetMean: point has the wrong dimension");
  }
  if (count_ == points_.cols()) {
    points_.conservativeResize(Eigen::NoChange, 2 * points_.cols());
  }
  points_.col(count_++) = x.coords;
  if (count_ == 1) {
    current_ = FrechetSolveResult{x, 0.0, 0, true, {}};
    return current_;
  }
  current_ = frechet_mean(manifold_, points_.leftCols(count_), Eigen::VectorXd{}, current_.mean.coords, options_);
  return current_;
}

FrechetSolveResult incremental_mean_update(const Manifold& manifold, std::span<const ManifoldPoint> prefix,
                                           const FrechetSolveResult& prev, const ManifoldPoint& new_point,
                                           const SolverOptions& options) {
  if (!prev.converged) {
    throw InvalidInputError("incremental_mean_update needs a converged previous mean");
  }
  std::vector<ManifoldPoint> all(prefix.begin(), prefix.end());
  all.push_back(new_point);
  return frechet_mean(manifold, all, {}, prev.mean, options);
}

std::string_view to_string(MomentSource source) {
  switch (source) {
    case MomentSource::kAuto:
      return "auto";
    case MomentSource::kAnalytic:
      return "analytic";
    case MomentSource::kMonteCarlo:
      return "monte-carlo";
  }
  return "auto";
}

MomentSource moment_source_from_string(std::string_view name) {
  if (name == "auto") {
    return MomentSource::kAuto;
  }
  if (name == "analytic") {
    return MomentSource::kAnalytic;
  }
  if (name == "monte-carlo" || name == "monte_carlo") {
    return MomentSource::kMonteCarlo;
  }
  throw InvalidInputError(fmt::format("unknown moment source '{}'", name));
}

LimitParams limit_params_from_moments(const FrameMatrix& expected_hessian, const FrameMatrix& gamma,
                                      std::string provenance) {
  const Eigen::Index d = expected_hessian.entries.rows();
  if (expected_hessian.entries.cols() != d || gamma.entries.rows() != d || gamma.entries.cols() != d) {
    throw InvalidInputError("limit parameters: E[H] and Gamma must be square of the same size");
  }
  if (expected_hessian.symmetric_eigenvalues().minCoeff() < kSingularityFloor) {
    throw AssumptionViolation("E[H] is not invertible: smallest eigenvalue below 1e-8");
  }
  if (gamma.symmetric_eigenvalues().minCoeff() < kNegativeEigenvalueFloor) {
    throw NumericalFailure("Gamma has a negative eigenvalue below -1e-10");
  }
  const Eigen::MatrixXd inv = expected_hessian.entries.partialPivLu().inverse();
  Eigen::MatrixXd a = inv * gamma.entries * inv.transpose();
  a = 0.5 * (a + a.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.minCoeff() < kNegativeEigenvalueFloor) {
    throw NumericalFailure("A has a negative eigenvalue below -1e-10");
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();

  const OrthonormalFrame& frame = expected_hessian.frame;
  return LimitParams{expected_hessian, {frame, inv}, gamma, {frame, a}, {frame, root}, std::move(provenance)};
}

LimitParams estimate_limit_params(const PopulationModel& model, const ManifoldPoint& mu, const OrthonormalFrame& frame,
                                  int mc_samples, const RngStream& stream, MomentSource source) {
  const Manifold& m = model.manifold();
  m.validate(mu);
  if ((frame.base.coords - mu.coords).norm() > 1e-10) {
    throw InvalidInputError("estimate_limit_params: frame is not based at mu");
  }
  if (source != MomentSource::kMonteCarlo) {
    const PopulationMoments moments = population_moments(model);
    if (m.distance(moments.mu, mu) > 1e-8) {
      throw InvalidInputError(
          fmt::format("estimate_limit_params: mu is at distance {:.3g} from the population mean",
                      m.distance(moments.mu, mu)));
    }
    // Re-express on the caller's frame; both frames sit at (numerically) the same point.
    FrameMatrix eh = moments.expected_hessian;
    FrameMatrix gamma = moments.gamma;
    eh.frame.base = mu;
    gamma.frame.base = mu;
    return limit_params_from_moments(m.reexpress(eh, frame), m.reexpress(gamma, frame), "analytic");
  }

  if (mc_samples < 1) {
    throw InvalidInputError("Monte Carlo moment estimation needs mc_samples >= 1");
  }
  const int d = m.dim();
  Sampler sampler(model, stream);
  Eigen::MatrixXd eh = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < mc_samples; ++i) {
    const Eigen::VectorXd xi = m.coordinates(frame, m.log_map(mu, sampler.draw()));
    eh += m.hess_from_log_coordinates(xi);
    gamma.noalias() += xi * xi.transpose();
  }
  eh /= mc_samples;
  gamma /= mc_samples;
  return limit_params_from_moments({frame, eh}, {frame, gamma}, "monte-carlo");
}

}  // namespace fdiff
