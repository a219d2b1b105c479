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

#ifndef FDIFF_SAMPLING_HPP
#define FDIFF_SAMPLING_HPP

#include "fdiff/geometry.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace fdiff {

/// What a random stream is used for; part of the stream key.
enum class StreamPurpose : std::uint64_t {
  kData = 1,
  kConditioning = 2,
  kResample = 3,
  kMoments = 4,
  kReference = 5,
  kPermutation = 6,
  kBrownian = 7,
};

/// Key of an independent random stream: (seed, replication, purpose).
///
/// Equal keys always produce the same engine state, so results never depend on
/// which worker thread consumes a stream.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  StreamPurpose purpose = StreamPurpose::kData;

  [[nodiscard]] std::mt19937_64 engine() const;
  [[nodiscard]] RngStream with_purpose(StreamPurpose p) const { return {seed, replication, p}; }
};

/// Weighted point masses.
struct DiscreteSpec {
  std::vector<ManifoldPoint> atoms;
  std::vector<double> weights;
};

/// Uniform law on the geodesic sphere of radius `radius` around the center.
struct UniformCircleSpec {
  double radius = 0.0;
};

/// Riemannian-volume uniform law on the geodesic ball of radius `max_radius`.
struct BallUniformSpec {
  double max_radius = 0.0;
};

/// exp_c of an isotropic N(0, sigma^2 I) tangent vector conditioned on |v| <= truncation.
struct GaussianPushforwardSpec {
  double sigma = 0.0;
  double truncation = 0.0;
};

using DistributionSpec = std::variant<DiscreteSpec, UniformCircleSpec, BallUniformSpec, GaussianPushforwardSpec>;

std::string distribution_name(const DistributionSpec& spec);

/// A sampling law on a manifold with a declared center.
class PopulationModel {
 public:
  /// Largest admissible support radius on the unit sphere.
  static constexpr double kSphereSupportLimit = 1.5707963267948966 - 1e-6;

  /// Validates the invariants and throws ConfigError on violation.
  PopulationModel(Manifold manifold, ManifoldPoint center, DistributionSpec distribution);

  [[nodiscard]] const Manifold& manifold() const { return manifold_; }
  [[nodiscard]] const ManifoldPoint& center() const { return center_; }
  [[nodiscard]] const DistributionSpec& distribution() const { return distribution_; }
  [[nodiscard]] std::string id() const;
  /// True for the rotationally symmetric continuous laws.
  [[nodiscard]] bool is_symmetric() const { return !std::holds_alternative<DiscreteSpec>(distribution_); }

 private:
  Manifold manifold_;
  ManifoldPoint center_;
  DistributionSpec distribution_;
};

/// Stateful i.i.d. sampler; the sequence is a pure function of (model, stream).
class Sampler {
 public:
  Sampler(const PopulationModel& model, const RngStream& stream);

  ManifoldPoint draw();
  std::vector<ManifoldPoint> draw(int count);

  /// Underlying engine, for callers that need auxiliary variates from the same stream.
  std::mt19937_64& engine() { return engine_; }

 private:
  Eigen::VectorXd unit_direction();

  const PopulationModel* model_;
  OrthonormalFrame center_frame_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::discrete_distribution<int> atoms_;
};

/// `count` i.i.d. draws. Throws InvalidInputError when count < 0.
std::vector<ManifoldPoint> sample(const PopulationModel& model, const RngStream& stream, int count);

/// Population Frechet mean, expected Hessian operator and tangent covariance.
struct PopulationMoments {
  ManifoldPoint mu;
  FrameMatrix expected_hessian;
  FrameMatrix gamma;
};

/// Exact moments, expressed in the default frame at mu.
///
/// Symmetric laws have mu = center with isotropic moments obtained from the
/// radial law; discrete laws solve for mu and sum over the atoms. Throws
/// AssumptionViolation when the smallest eigenvalue of E[H] is below 1e-8.
PopulationMoments population_moments(const PopulationModel& model);

/// Radial moments E[r^2] and E[transverse Hessian eigenvalue(r)] of a symmetric law.
struct RadialMoments {
  double mean_square_radius = 0.0;
  double mean_transverse_eigenvalue = 1.0;
};
RadialMoments radial_moments(const PopulationModel& model);

}  // namespace fdiff

#endif  // FDIFF_SAMPLING_HPP
