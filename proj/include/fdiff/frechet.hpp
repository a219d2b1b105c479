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

#ifndef FDIFF_FRECHET_HPP
#define FDIFF_FRECHET_HPP

#include "fdiff/geometry.hpp"
#include "fdiff/sampling.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace fdiff {

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  /// Keep the Frechet functional value of every accepted iterate.
  bool record_trace = false;
};

struct FrechetSolveResult {
  ManifoldPoint mean;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> functional_trace;
};

/// Weighted Frechet mean by Riemannian fixed-point iteration
///   x <- exp_x(tau * sum_i w_i log_x(X_i)),
/// starting with tau = 1 and halving tau until the functional sum_i w_i d(x, X_i)^2
/// does not increase. Stops once |sum_i w_i log_x(X_i)| <= tol.
///
/// Empty `weights` means uniform weights. Returns converged = false after max_iter
/// iterations; throws CutLocusError if a log map is undefined along the way.
FrechetSolveResult frechet_mean(const Manifold& manifold, std::span<const ManifoldPoint> points,
                                std::span<const double> weights, const ManifoldPoint& init,
                                const SolverOptions& options = {});

/// Column-major variant: one ambient point per column, uniform weights when `weights` is empty.
FrechetSolveResult frechet_mean(const Manifold& manifold, const Eigen::Ref<const Eigen::MatrixXd>& points,
                                const Eigen::Ref<const Eigen::VectorXd>& weights, const Eigen::VectorXd& init,
                                const SolverOptions& options = {});

/// Sample Frechet mean of a growing prefix X_1, ..., X_k.
///
/// Each `add` re-solves over the whole prefix, warm-started at the previous mean.
class RunningFrechetMean {
 public:
  RunningFrechetMean(Manifold manifold, int capacity, SolverOptions options = {});

  /// Appends a point and returns the mean of the enlarged prefix.
  const FrechetSolveResult& add(const ManifoldPoint& x);

  [[nodiscard]] int count() const { return count_; }
  [[nodiscard]] const FrechetSolveResult& current() const { return current_; }
  [[nodiscard]] Eigen::Ref<const Eigen::MatrixXd> points() const { return points_.leftCols(count_); }

 private:
  Manifold manifold_;
  SolverOptions options_;
  Eigen::MatrixXd points_;
  int count_ = 0;
  FrechetSolveResult current_;
};

/// Warm-started mean of `prefix` plus `new_point`, initialized at prev.mean.
/// `prefix` holds the k points whose mean is `prev`. Throws InvalidInputError unless prev.converged.
FrechetSolveResult incremental_mean_update(const Manifold& manifold, std::span<const ManifoldPoint> prefix,
                                           const FrechetSolveResult& prev, const ManifoldPoint& new_point,
                                           const SolverOptions& options = {});

enum class MomentSource { kAuto, kAnalytic, kMonteCarlo };
std::string_view to_string(MomentSource source);
MomentSource moment_source_from_string(std::string_view name);

/// Parameters of the limiting diffusion, all in one frame at mu.
struct LimitParams {
  FrameMatrix expected_hessian;
  FrameMatrix expected_hessian_inv;
  FrameMatrix gamma;
  FrameMatrix a;
  FrameMatrix sqrt_a;
  /// "analytic" or "monte-carlo".
  std::string provenance;

  [[nodiscard]] const OrthonormalFrame& frame() const { return a.frame; }
  [[nodiscard]] int dim() const { return a.frame.dim(); }
};

/// A = E[H]^{-1} Gamma E[H]^{-T} and its symmetric PSD square root.
///
/// Throws AssumptionViolation when the smallest eigenvalue of (sym) E[H] is below 1e-8,
/// NumericalFailure when Gamma or A has an eigenvalue below -1e-10.
LimitParams limit_params_from_moments(const FrameMatrix& expected_hessian, const FrameMatrix& gamma,
                                      std::string provenance);

/// Moments of `model` at `mu` in `frame`: analytic when available (or requested),
/// otherwise Monte Carlo averages of H_{mu,X} and log_mu(X) log_mu(X)^T over mc_samples draws.
LimitParams estimate_limit_params(const PopulationModel& model, const ManifoldPoint& mu, const OrthonormalFrame& frame,
                                  int mc_samples, const RngStream& stream, MomentSource source = MomentSource::kAuto);

}  // namespace fdiff

#endif  // FDIFF_FRECHET_HPP
