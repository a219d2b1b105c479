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

#include "fdiff/errors.hpp"
#include "fdiff/sampling.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

namespace fdiff {
namespace {

ManifoldPoint origin(const Manifold& m) {
  Eigen::VectorXd o = Eigen::VectorXd::Zero(m.ambient_dim());
  if (m.kind() != ManifoldKind::kEuclidean) {
    o[m.dim()] = 1.0;
  }
  return {o};
}

// Upper-tail p-value of Pearson's statistic for counts against expected probabilities.
double chi_square_p(const std::vector<int>& counts, const std::vector<double>& probs) {
  double total = 0.0;
  for (const int c : counts) {
    total += c;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = total * probs[i];
    stat += (counts[i] - e) * (counts[i] - e) / e;
  }
  const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Bins radial distances by equal-probability quantiles of a reference CDF.
double radial_p_value(const std::vector<ManifoldPoint>& xs, const Manifold& m, const ManifoldPoint& c,
                      const std::function<double(double)>& cdf, double max_radius, int bins) {
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (const auto& x : xs) {
    const double u = cdf(m.distance(c, x)) / cdf(max_radius);
    const int b = std::min(bins - 1, static_cast<int>(u * bins));
    ++counts[static_cast<std::size_t>(b)];
  }
  return chi_square_p(counts, std::vector<double>(static_cast<std::size_t>(bins), 1.0 / bins));
}

TEST(Sampling, StreamsAreDeterministicAndKeyed) {
  const RngStream s{42, 7, StreamPurpose::kData};
  auto a = s.engine();
  auto b = s.engine();
  EXPECT_EQ(a(), b());
  EXPECT_NE(s.engine()(), s.with_purpose(StreamPurpose::kResample).engine()());
  EXPECT_NE(s.engine()(), (RngStream{42, 8, StreamPurpose::kData}.engine()()));
  EXPECT_NE(s.engine()(), (RngStream{43, 7, StreamPurpose::kData}.engine()()));
}

TEST(Sampling, SphereSupportBeyondHemisphereIsRejected) {
  const Manifold m = Manifold::sphere(2);
  EXPECT_THROW(PopulationModel(m, origin(m), UniformCircleSpec{2.0}), ConfigError);
  EXPECT_THROW(PopulationModel(m, origin(m), BallUniformSpec{1.6}), ConfigError);
  EXPECT_THROW(PopulationModel(m, origin(m), GaussianPushforwardSpec{0.3, 1.6}), ConfigError);
  EXPECT_NO_THROW(PopulationModel(m, origin(m), UniformCircleSpec{1.5}));
  try {
    PopulationModel(m, origin(m), UniformCircleSpec{2.0});
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hemisphere"), std::string::npos);
  }
}

TEST(Sampling, DiscreteWeightsMustFormAProbabilityVector) {
  const Manifold m = Manifold::euclidean(2);
  const ManifoldPoint a{Eigen::Vector2d(1, 0)};
  const ManifoldPoint b{Eigen::Vector2d(0, 1)};
  EXPECT_THROW(PopulationModel(m, origin(m), DiscreteSpec{{a, b}, {0.5, 0.6}}), ConfigError);
  EXPECT_THROW(PopulationModel(m, origin(m), DiscreteSpec{{a, b}, {1.5, -0.5}}), ConfigError);
  EXPECT_THROW(PopulationModel(m, origin(m), DiscreteSpec{{a}, {0.5, 0.5}}), ConfigError);
  EXPECT_NO_THROW(PopulationModel(m, origin(m), DiscreteSpec{{a, b}, {0.25, 0.75}}));
}

TEST(Sampling, UniformCircleSitsAtFixedRadiusWithUniformAngle) {
  const Manifold m = Manifold::sphere(2);
  const ManifoldPoint c = origin(m);
  const PopulationModel model(m, c, UniformCircleSpec{0.5});
  const std::vector<ManifoldPoint> xs = sample(model, {3, 0, StreamPurpose::kData}, 20000);
  const OrthonormalFrame f = m.frame(c);
  const int bins = 24;
  std::vector<int> counts(bins, 0);
  for (const auto& x : xs) {
    EXPECT_TRUE(m.contains(x));
    EXPECT_NEAR(m.distance(c, x), 0.5, 1e-12);
    const Eigen::VectorXd xi = m.coordinates(f, m.log_map(c, x));
    const double angle = std::atan2(xi[1], xi[0]) + std::numbers::pi;
    ++counts[std::min(bins - 1, static_cast<int>(angle / (2 * std::numbers::pi) * bins))];
  }
  EXPECT_GT(chi_square_p(counts, std::vector<double>(bins, 1.0 / bins)), 0.01);
}

TEST(Sampling, BallUniformFollowsVolumeDensity) {
  const double rmax = 1.2;
  struct Case {
    Manifold m;
    std::function<double(double)> cdf;
  };
  const std::vector<Case> cases{
      {Manifold::euclidean(2), [](double r) { return r * r; }},
      {Manifold::sphere(2), [](double r) { return 1.0 - std::cos(r); }},
      {Manifold::hyperbolic(2), [](double r) { return std::cosh(r) - 1.0; }},
      {Manifold::sphere(3), [](double r) { return r - std::sin(r) * std::cos(r); }},
      {Manifold::hyperbolic(3), [](double r) { return std::sinh(r) * std::cosh(r) - r; }},
  };
  for (const auto& [m, cdf] : cases) {
    const PopulationModel model(m, origin(m), BallUniformSpec{rmax});
    const auto xs = sample(model, {5, 1, StreamPurpose::kData}, 20000);
    EXPECT_GT(radial_p_value(xs, m, origin(m), cdf, rmax, 20), 0.01) << m.name();
    for (const auto& x : xs) {
      ASSERT_LE(m.distance(origin(m), x), rmax + 1e-12);
    }
  }
}

TEST(Sampling, GaussianPushforwardRespectsTruncationAndScale) {
  const Manifold e = Manifold::euclidean(2);
  const PopulationModel flat(e, origin(e), GaussianPushforwardSpec{0.7, 10.0});
  const auto xs = sample(flat, {9, 0, StreamPurpose::kData}, 40000);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& x : xs) {
    cov += x.coords * x.coords.transpose();
  }
  cov /= static_cast<double>(xs.size());
  // Standard error of a variance estimate: sigma^2 sqrt(2 / R) ~ 0.0035.
  EXPECT_NEAR(cov(0, 0), 0.49, 0.02);
  EXPECT_NEAR(cov(1, 1), 0.49, 0.02);
  EXPECT_NEAR(cov(0, 1), 0.0, 0.02);

  const Manifold s = Manifold::sphere(2);
  const PopulationModel curved(s, origin(s), GaussianPushforwardSpec{0.5, 0.6});
  for (const auto& x : sample(curved, {9, 1, StreamPurpose::kData}, 5000)) {
    ASSERT_LE(s.distance(origin(s), x), 0.6 + 1e-12);
  }
}

TEST(Sampling, OffOriginCenterIsHonoured) {
  const Manifold m = Manifold::hyperbolic(2);
  const ManifoldPoint c{Eigen::Vector3d(std::sinh(1.0), 0.0, std::cosh(1.0))};
  const PopulationModel model(m, c, UniformCircleSpec{0.3});
  for (const auto& x : sample(model, {1, 0, StreamPurpose::kData}, 500)) {
    EXPECT_NEAR(m.distance(c, x), 0.3, 1e-10);
  }
}

TEST(Sampling, AnalyticMomentsMatchMonteCarloAverages) {
  for (const Manifold& m : {Manifold::sphere(2), Manifold::hyperbolic(2), Manifold::sphere(3)}) {
    for (const DistributionSpec& spec :
         std::vector<DistributionSpec>{UniformCircleSpec{0.5}, BallUniformSpec{1.0}, GaussianPushforwardSpec{0.4, 1.2}}) {
      const PopulationModel model(m, origin(m), spec);
      const PopulationMoments moments = population_moments(model);
      const OrthonormalFrame f = moments.expected_hessian.frame;
      const int d = m.dim();
      Eigen::MatrixXd eh = Eigen::MatrixXd::Zero(d, d);
      Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(d, d);
      const int count = 200000;
      Sampler sampler(model, {77, 0, StreamPurpose::kMoments});
      for (int i = 0; i < count; ++i) {
        const ManifoldPoint x = sampler.draw();
        eh += m.hess_operator(moments.mu, x, f).entries;
        const Eigen::VectorXd xi = m.coordinates(f, m.log_map(moments.mu, x));
        gamma += xi * xi.transpose();
      }
      eh /= count;
      gamma /= count;
      EXPECT_LT((eh - moments.expected_hessian.entries).norm() / moments.expected_hessian.entries.norm(), 0.01)
          << m.name() << " " << distribution_name(spec);
      EXPECT_LT((gamma - moments.gamma.entries).norm() / moments.gamma.entries.norm(), 0.02)
          << m.name() << " " << distribution_name(spec);
    }
  }
}

TEST(Sampling, UniformCircleRadialMomentsAreExact) {
  const Manifold m = Manifold::sphere(2);
  const RadialMoments r = radial_moments(PopulationModel(m, origin(m), UniformCircleSpec{0.5}));
  EXPECT_NEAR(r.mean_square_radius, 0.25, 1e-14);
  EXPECT_NEAR(r.mean_transverse_eigenvalue, 0.5 / std::tan(0.5), 1e-14);
}

TEST(Sampling, BallRadialMomentsMatchClosedForm) {
  // Geodesic disc of radius R on S^2: density sin(r) / (1 - cos R) on [0, R].
  const double big_r = 1.0;
  const Manifold m = Manifold::sphere(2);
  const RadialMoments r = radial_moments(PopulationModel(m, origin(m), BallUniformSpec{big_r}));
  const double norm = 1.0 - std::cos(big_r);
  // int_0^R r^2 sin r dr = 2 R sin R + (2 - R^2) cos R - 2
  const double r2 = (2.0 * big_r * std::sin(big_r) + (2.0 - big_r * big_r) * std::cos(big_r) - 2.0) / norm;
  // int_0^R r cot r sin r dr = int_0^R r cos r dr = R sin R + cos R - 1
  const double c = (big_r * std::sin(big_r) + std::cos(big_r) - 1.0) / norm;
  EXPECT_NEAR(r.mean_square_radius, r2, 1e-12);
  EXPECT_NEAR(r.mean_transverse_eigenvalue, c, 1e-12);
}

TEST(Sampling, DiscretePopulationMeanHasZeroGradient) {
  const Manifold m = Manifold::sphere(2);
  std::vector<ManifoldPoint> atoms;
  for (const auto& v : {Eigen::Vector3d(0.3, 0.1, 1.0), Eigen::Vector3d(-0.2, 0.4, 1.0),
                        Eigen::Vector3d(0.1, -0.5, 1.0), Eigen::Vector3d(0.6, 0.2, 1.0)}) {
    atoms.push_back(m.project(v));
  }
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const PopulationModel model(m, atoms.front(), DiscreteSpec{atoms, w});
  const PopulationMoments mom = population_moments(model);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(3);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    grad += w[i] * m.log_map(mom.mu, atoms[i]).coords;
  }
  EXPECT_LT(grad.norm(), 1e-12);
  EXPECT_TRUE(model.is_symmetric() == false);
}

TEST(Sampling, DiscreteSamplerHitsAtomsWithTheirWeights) {
  const Manifold m = Manifold::euclidean(1);
  std::vector<ManifoldPoint> atoms;
  for (int i = 0; i < 4; ++i) {
    atoms.push_back({Eigen::VectorXd::Constant(1, i)});
  }
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const PopulationModel model(m, origin(m), DiscreteSpec{atoms, w});
  std::vector<int> counts(4, 0);
  for (const auto& x : sample(model, {2, 0, StreamPurpose::kData}, 20000)) {
    ++counts[static_cast<std::size_t>(std::lround(x.coords[0]))];
  }
  EXPECT_GT(chi_square_p(counts, w), 0.01);
}

}  // namespace
}  // namespace fdiff
