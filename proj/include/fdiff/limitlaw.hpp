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

#ifndef FDIFF_LIMITLAW_HPP
#define FDIFF_LIMITLAW_HPP

#include "fdiff/frechet.hpp"
#include "fdiff/geometry.hpp"
#include "fdiff/sampling.hpp"

#include <vector>

namespace fdiff {

/// dV_t = sqrt(A) dB_t, V_0 = 0.
struct DiffusionSpec {
  FrameMatrix sqrt_a;
  FrameMatrix a;

  /// Throws InvalidInputError unless sqrt_a sqrt_a^T = a within 1e-10.
  static DiffusionSpec from(const LimitParams& params);
  [[nodiscard]] int dim() const { return static_cast<int>(a.entries.rows()); }
};

struct GaussianLaw {
  Eigen::VectorXd mean;
  FrameMatrix covariance;
};

/// Law of V_t: N(0, t A). Throws DomainError for t < 0.
GaussianLaw gaussian_law_at(const DiffusionSpec& spec, double t);

struct DiscretePath {
  std::vector<double> times;
  /// One column per grid time.
  Eigen::MatrixXd values;
};

/// Exact grid sample V_{t_{j+1}} = V_{t_j} + sqrt(A) sqrt(dt) Z_j on a uniform grid over [0, T].
DiscretePath sample_brownian_path(const DiffusionSpec& spec, double horizon, int steps, const RngStream& stream);

/// R draws from N(0, covariance), one per column.
Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& covariance, int count, std::mt19937_64& engine);

}  // namespace fdiff

#endif  // FDIFF_LIMITLAW_HPP
