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

#include "fdiff/limitlaw.hpp"

#include "fdiff/errors.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <cmath>

namespace fdiff {

DiffusionSpec DiffusionSpec::from(const LimitParams& params) {
  const Eigen::MatrixXd& root = params.sqrt_a.entries;
  if ((root * root.transpose() - params.a.entries).norm() > 1e-10) {
    throw InvalidInputError("diffusion spec: sqrt(A) sqrt(A)^T differs from A");
  }
  return {params.sqrt_a, params.a};
}

GaussianLaw gaussian_law_at(const DiffusionSpec& spec, double t) {
  if (!(t >= 0.0)) {
    throw DomainError(fmt::format("gaussian_law_at needs t >= 0, got {}", t));
  }
  return {Eigen::VectorXd::Zero(spec.dim()), {spec.a.frame, t * spec.a.entries}};
}

Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& covariance, int count, std::mt19937_64& engine) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (covariance + covariance.transpose()));
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(covariance.rows(), count);
  for (int j = 0; j < count; ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      z(i, j) = normal(engine);
    }
  }
  return root * z;
}

DiscretePath sample_brownian_path(const DiffusionSpec& spec, double horizon, int steps, const RngStream& stream) {
  if (steps < 1) {
    throw InvalidInputError(fmt::format("sample_brownian_path needs steps >= 1, got {}", steps));
  }
  if (!(horizon > 0.0)) {
    throw DomainError("sample_brownian_path needs T > 0");
  }
  const int d = spec.dim();
  const double dt = horizon / steps;
  const double scale = std::sqrt(dt);
  auto engine = stream.engine();
  std::normal_distribution<double> normal(0.0, 1.0);

  DiscretePath path;
  path.times.resize(static_cast<std::size_t>(steps) + 1);
  path.values = Eigen::MatrixXd::Zero(d, steps + 1);
  Eigen::VectorXd z(d);
  for (int j = 0; j < steps; ++j) {
    for (int i = 0; i < d; ++i) {
      z[i] = normal(engine);
    }
    path.values.col(j + 1) = path.values.col(j) + scale * (spec.sqrt_a.entries * z);
    path.times[static_cast<std::size_t>(j) + 1] = dt * (j + 1);
  }
  return path;
}

}  // namespace fdiff
