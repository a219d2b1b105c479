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

#include "fdiff/chains.hpp"

#include "fdiff/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fdiff {

Eigen::VectorXd v_step_from_log(const Manifold& manifold, const LimitParams& params, const Eigen::VectorXd& v_k,
                                int k, const Eigen::VectorXd& log_coords, int n) {
  if (k < 0 || n < 1) {
    throw InvalidInputError(fmt::format("v_step needs k >= 0 and n >= 1 (k={}, n={})", k, n));
  }
  const Eigen::MatrixXd& eh_inv = params.expected_hessian_inv.entries;
  Eigen::VectorXd next = (eh_inv * log_coords) / std::sqrt(static_cast<double>(n));
  if (k == 0) {
    return next;
  }
  const Eigen::MatrixXd h = manifold.hess_from_log_coordinates(log_coords);
  const double kd = static_cast<double>(k);
  next += ((kd + 1.0) / kd) * v_k;
  next -= (eh_inv * (h * v_k)) / kd;
  return next;
}

Eigen::VectorXd v_step(const Manifold& manifold, const LimitParams& params, const Eigen::VectorXd& v_k, int k,
                       const ManifoldPoint& x_next, int n) {
  const OrthonormalFrame& frame = params.frame();
  const Eigen::VectorXd xi = manifold.coordinates(frame, manifold.log_map(frame.base, x_next));
  return v_step_from_log(manifold, params, v_k, k, xi, n);
}

RescaledMeanChain::RescaledMeanChain(const Manifold& manifold, const OrthonormalFrame& frame, int n,
                                     double stop_radius, int capacity, SolverOptions solver)
    : manifold_{&manifold},
      frame_{&frame},
      n_{n},
      stop_radius_{stop_radius},
      mean_{manifold, capacity, solver},
      state_{0, Eigen::VectorXd::Zero(manifold.dim()), Eigen::VectorXd::Zero(manifold.dim()), frame.base, false},
      mean_log_{Eigen::VectorXd::Zero(manifold.dim())} {
  if (n < 1 || !(stop_radius > 0.0)) {
    throw InvalidInputError("rescaled mean chain needs n >= 1 and r > 0");
  }
}

const ChainState& RescaledMeanChain::step(const ManifoldPoint& x_next) {
  if (state_.stopped) {
    throw InvalidInputError("rescaled mean chain is stopped");
  }
  const FrechetSolveResult& mean = mean_.add(x_next);
  if (!mean.converged) {
    throw NumericalFailure(fmt::format("sample Frechet mean did not converge at k={} (gradient norm {:.3e} after {} iterations)",
                                       mean_.count(), mean.gradient_norm, mean.iterations));
  }
  const double previous_norm = state_.w.norm();
  ++state_.k;
  state_.mu_k = mean.mean;
  mean_log_ = manifold_->coordinates(*frame_, manifold_->log_map(frame_->base, mean.mean));
  state_.w = (static_cast<double>(state_.k) / std::sqrt(static_cast<double>(n_))) * mean_log_;
  state_.stopped = state_.w.norm() >= stop_radius_ || previous_norm >= stop_radius_;
  return state_;
}

const ChainState& w_step(RescaledMeanChain& chain, const ManifoldPoint& x_next) {
  return chain.step(x_next);
}

int horizon_steps(int n, double horizon) {
  if (n < 1 || !(horizon > 0.0)) {
    throw InvalidInputError(fmt::format("horizon needs n >= 1 and T > 0 (n={}, T={})", n, horizon));
  }
  // Absorb representation error in n*T, e.g. 1000 * 0.3.
  return static_cast<int>(std::ceil(static_cast<double>(n) * horizon - 1e-9));
}

PathRecord run_coupled(const PopulationModel& model, const LimitParams& params, int n, double horizon,
                       double stop_radius, const RngStream& stream, const CoupledRunOptions& options) {
  if (!(stop_radius > 0.0)) {
    throw InvalidInputError("run_coupled needs r > 0");
  }
  const Manifold& m = model.manifold();
  const OrthonormalFrame& frame = params.frame();
  const int d = m.dim();
  const int steps = horizon_steps(n, horizon);
  const int stride = options.grid_stride > 0 ? options.grid_stride : (n + 999) / 1000;

  PathRecord rec;
  rec.n = n;
  rec.horizon = horizon;
  rec.marginal_steps = options.marginal_steps;
  rec.v_marginals.assign(options.marginal_steps.size(), Eigen::VectorXd::Zero(d));
  rec.w_marginals.assign(options.marginal_steps.size(), Eigen::VectorXd::Zero(d));

  Sampler sampler(model, stream.with_purpose(StreamPurpose::kData));
  RescaledMeanChain w_chain(m, frame, n, stop_radius, steps, options.solver);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);

  const bool residuals = !options.residual_steps.empty();
  Eigen::MatrixXd hess_sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd log_sum = Eigen::VectorXd::Zero(d);

  const auto record = [&](int k, const Eigen::VectorXd& w) {
    if (options.record_paths && (k % stride == 0 || k == steps)) {
      rec.grid_steps.push_back(k);
      rec.v_path.push_back(v);
      rec.w_path.push_back(w);
    }
    for (std::size_t j = 0; j < options.marginal_steps.size(); ++j) {
      if (options.marginal_steps[j] == k) {
        rec.v_marginals[j] = v;
        rec.w_marginals[j] = w;
      }
    }
  };
  record(0, w_chain.state().w);

  for (int k = 0; k < steps; ++k) {
    const ManifoldPoint x = sampler.draw();
    const Eigen::VectorXd xi = m.coordinates(frame, m.log_map(frame.base, x));
    v = v_step_from_log(m, params, v, k, xi, n);
    const ChainState& state = w_chain.step(x);
    rec.max_solver_iterations = std::max(rec.max_solver_iterations, w_chain.running_mean().current().iterations);
    rec.sup_diff = std::max(rec.sup_diff, (state.w - v).norm());
    if (residuals) {
      hess_sum += m.hess_from_log_coordinates(xi);
      log_sum += xi;
      if (std::find(options.residual_steps.begin(), options.residual_steps.end(), state.k) !=
          options.residual_steps.end()) {
        const double res = (hess_sum * w_chain.mean_log_coordinates() - log_sum).norm() / state.k;
        rec.residuals.emplace_back(state.k, res);
      }
    }
    record(state.k, state.w);
    rec.steps = state.k;
    if (state.stopped) {
      rec.stopped_at = static_cast<double>(state.k) / n;
      break;
    }
  }
  return rec;
}

}  // namespace fdiff
