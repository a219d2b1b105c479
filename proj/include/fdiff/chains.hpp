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

#ifndef FDIFF_CHAINS_HPP
#define FDIFF_CHAINS_HPP

#include "fdiff/frechet.hpp"
#include "fdiff/geometry.hpp"
#include "fdiff/sampling.hpp"

#include <optional>
#include <utility>
#include <vector>

/**
 * \file
 * \brief The martingale chain V^n_k and the rescaled sample-mean chain W^n_k.
 *
 * Both live in frame coordinates of the tangent space at the population mean mu
 * (the base point of the LimitParams frame):
 *
 *   V_1     = n^{-1/2} E[H]^{-1} log_mu(X_1)
 *   V_{k+1} = n^{-1/2} E[H]^{-1} log_mu(X_{k+1}) + ((k+1)/k I - (1/k) E[H]^{-1} H_{mu,X_{k+1}}) V_k
 *   W_k     = (k / sqrt(n)) log_mu(mu_k),   mu_k the sample Frechet mean of X_1..X_k.
 */

namespace fdiff {

struct ChainState {
  int k = 0;
  Eigen::VectorXd v;
  Eigen::VectorXd w;
  ManifoldPoint mu_k;
  bool stopped = false;
};

/// One step of the martingale chain from (k, v_k) with the next observation.
Eigen::VectorXd v_step(const Manifold& manifold, const LimitParams& params, const Eigen::VectorXd& v_k, int k,
                       const ManifoldPoint& x_next, int n);

/// Same step given the frame coordinates of log_mu(x_next).
Eigen::VectorXd v_step_from_log(const Manifold& manifold, const LimitParams& params, const Eigen::VectorXd& v_k,
                                int k, const Eigen::VectorXd& log_coords, int n);

/// W^n_k driven by a warm-started sample Frechet mean.
class RescaledMeanChain {
 public:
  RescaledMeanChain(const Manifold& manifold, const OrthonormalFrame& frame, int n, double stop_radius,
                    int capacity, SolverOptions solver = {});

  /// Advances k -> k + 1. Throws NumericalFailure when the mean solver does not converge
  /// and InvalidInputError once the chain is stopped.
  const ChainState& step(const ManifoldPoint& x_next);

  [[nodiscard]] const ChainState& state() const { return state_; }
  [[nodiscard]] const RunningFrechetMean& running_mean() const { return mean_; }
  /// Frame coordinates of log_mu(mu_k).
  [[nodiscard]] const Eigen::VectorXd& mean_log_coordinates() const { return mean_log_; }

 private:
  const Manifold* manifold_;
  const OrthonormalFrame* frame_;
  int n_;
  double stop_radius_;
  RunningFrechetMean mean_;
  ChainState state_;
  Eigen::VectorXd mean_log_;
};

/// Functional form of RescaledMeanChain::step; `chain` carries the data prefix.
const ChainState& w_step(RescaledMeanChain& chain, const ManifoldPoint& x_next);

struct CoupledRunOptions {
  SolverOptions solver;
  /// Grid spacing in steps; 0 selects ceil(n / 1000).
  int grid_stride = 0;
  bool record_paths = true;
  /// Steps k at which V_k and W_k are kept exactly (e.g. [eps0 n] and [n T]).
  std::vector<int> marginal_steps;
  /// Steps k at which |sum_i H_{mu,X_i}(log_mu mu_k) - sum_i log_mu X_i| / k is recorded.
  std::vector<int> residual_steps;
};

struct PathRecord {
  int n = 0;
  double horizon = 0.0;
  int steps = 0;
  std::vector<int> grid_steps;
  std::vector<Eigen::VectorXd> v_path;
  std::vector<Eigen::VectorXd> w_path;
  /// Running sup over every step (not only the grid) of |W_k - V_k| up to T or the stopping step.
  double sup_diff = 0.0;
  std::optional<double> stopped_at;
  std::vector<int> marginal_steps;
  std::vector<Eigen::VectorXd> v_marginals;
  std::vector<Eigen::VectorXd> w_marginals;
  std::vector<std::pair<int, double>> residuals;
  int max_solver_iterations = 0;

  [[nodiscard]] double time_at(std::size_t grid_index) const {
    return static_cast<double>(grid_steps[grid_index]) / n;
  }
};

/// Number of steps ceil(n T) consumed by a run.
int horizon_steps(int n, double horizon);

/// Simulates V and W on the same observations X_1..X_{ceil(nT)} drawn from `stream`.
/// Stops early at the first step where |W_k| >= r or |W_{k-1}| >= r.
PathRecord run_coupled(const PopulationModel& model, const LimitParams& params, int n, double horizon,
                       double stop_radius, const RngStream& stream, const CoupledRunOptions& options = {});

}  // namespace fdiff

#endif  // FDIFF_CHAINS_HPP
