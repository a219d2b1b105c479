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

#include "fdiff/sampling.hpp"

#include "fdiff/errors.hpp"
#include "fdiff/frechet.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace fdiff {

namespace {

constexpr double kSingularityFloor = 1e-8;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double support_radius(const DistributionSpec& spec) {
  return std::visit(overloaded{
                        [](const DiscreteSpec&) { return 0.0; },
                        [](const UniformCircleSpec& s) { return s.radius; },
                        [](const BallUniformSpec& s) { return s.max_radius; },
                        [](const GaussianPushforwardSpec& s) { return s.truncation; },
                    },
                    spec);
}

}  // namespace

std::mt19937_64 RngStream::engine() const {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(replication + 1));
  const std::uint64_t c = splitmix64(b ^ static_cast<std::uint64_t>(purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32U),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32U),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32U)};
  return std::mt19937_64(seq);
}

std::string distribution_name(const DistributionSpec& spec) {
  return std::visit(overloaded{
                        [](const DiscreteSpec&) { return std::string("discrete"); },
                        [](const UniformCircleSpec&) { return std::string("uniform_circle"); },
                        [](const BallUniformSpec&) { return std::string("ball_uniform"); },
                        [](const GaussianPushforwardSpec&) { return std::string("gaussian"); },
                    },
                    spec);
}

PopulationModel::PopulationModel(Manifold manifold, ManifoldPoint center, DistributionSpec distribution)
    : manifold_{manifold}, center_{std::move(center)}, distribution_{std::move(distribution)} {
  if (!manifold_.contains(center_, 1e-10)) {
    throw ConfigError(fmt::format("model center is not a point of {}", manifold_.name()));
  }
  const bool sphere = manifold_.kind() == ManifoldKind::kSphere;
  if (const auto* d = std::get_if<DiscreteSpec>(&distribution_)) {
    if (d->atoms.empty() || d->atoms.size() != d->weights.size()) {
      throw ConfigError("discrete model needs one weight per atom and at least one atom");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < d->atoms.size(); ++i) {
      if (!(d->weights[i] >= 0.0)) {
        throw ConfigError(fmt::format("discrete weight {} is negative", i));
      }
      total += d->weights[i];
      if (!manifold_.contains(d->atoms[i], 1e-10)) {
        throw ConfigError(fmt::format("discrete atom {} is not a point of {}", i, manifold_.name()));
      }
      if (sphere && manifold_.distance(center_, d->atoms[i]) > kSphereSupportLimit) {
        throw ConfigError(fmt::format(
            "discrete atom {} lies at distance {:.6g} from the center; sphere support must stay within "
            "pi/2 - 1e-6 of the center",
            i, manifold_.distance(center_, d->atoms[i])));
      }
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ConfigError(fmt::format("discrete weights sum to {:.17g}, expected 1", total));
    }
    return;
  }
  if (const auto* g = std::get_if<GaussianPushforwardSpec>(&distribution_); g != nullptr && !(g->sigma > 0.0)) {
    throw ConfigError("gaussian model needs sigma > 0");
  }
  const double radius = support_radius(distribution_);
  const bool circle = std::holds_alternative<UniformCircleSpec>(distribution_);
  if (!std::isfinite(radius) || (circle ? radius < 0.0 : !(radius > 0.0))) {
    throw ConfigError(fmt::format("{} model has invalid support radius {}", distribution_name(distribution_), radius));
  }
  if (sphere && radius > kSphereSupportLimit) {
    throw ConfigError(fmt::format(
        "support radius {:.6g} exceeds pi/2 - 1e-6; on the sphere the support must lie inside the open "
        "hemisphere around the center",
        radius));
  }
}

std::string PopulationModel::id() const {
  return std::visit(overloaded{
                        [&](const DiscreteSpec& d) {
                          return fmt::format("{}/discrete[{}]", manifold_.name(), d.atoms.size());
                        },
                        [&](const UniformCircleSpec& s) {
                          return fmt::format("{}/uniform_circle[{:g}]", manifold_.name(), s.radius);
                        },
                        [&](const BallUniformSpec& s) {
                          return fmt::format("{}/ball_uniform[{:g}]", manifold_.name(), s.max_radius);
                        },
                        [&](const GaussianPushforwardSpec& s) {
                          return fmt::format("{}/gaussian[{:g},{:g}]", manifold_.name(), s.sigma, s.truncation);
                        },
                    },
                    distribution_);
}

Sampler::Sampler(const PopulationModel& model, const RngStream& stream)
    : model_{&model}, center_frame_{model.manifold().frame(model.center())}, engine_{stream.engine()} {
  if (const auto* d = std::get_if<DiscreteSpec>(&model.distribution())) {
    atoms_ = std::discrete_distribution<int>(d->weights.begin(), d->weights.end());
  }
}

Eigen::VectorXd Sampler::unit_direction() {
  const int d = model_->manifold().dim();
  Eigen::VectorXd z(d);
  double n = 0.0;
  while (n < 1e-12) {
    for (int i = 0; i < d; ++i) {
      z[i] = normal_(engine_);
    }
    n = z.norm();
  }
  return z / n;
}

ManifoldPoint Sampler::draw() {
  const Manifold& m = model_->manifold();
  const int d = m.dim();
  const auto along = [&](const Eigen::VectorXd& tangent_coords) {
    return m.exp_map(m.from_coordinates(center_frame_, tangent_coords));
  };
  return std::visit(
      overloaded{
          [&](const DiscreteSpec& s) { return s.atoms[static_cast<std::size_t>(atoms_(engine_))]; },
          [&](const UniformCircleSpec& s) { return along(s.radius * unit_direction()); },
          [&](const BallUniformSpec& s) {
            // Propose uniformly in the tangent ball, accept with the volume-density ratio.
            double bound = 1.0;
            if (m.kind() == ManifoldKind::kHyperbolic) {
              bound = std::pow(std::sinh(s.max_radius) / s.max_radius, d - 1);
            }
            for (;;) {
              const Eigen::VectorXd u = unit_direction();
              const double r = s.max_radius * std::pow(uniform_(engine_), 1.0 / d);
              double ratio = 1.0;
              if (r > 0.0 && m.kind() == ManifoldKind::kSphere) {
                ratio = std::pow(std::sin(r) / r, d - 1);
              } else if (r > 0.0 && m.kind() == ManifoldKind::kHyperbolic) {
                ratio = std::pow(std::sinh(r) / r, d - 1) / bound;
              }
              if (uniform_(engine_) < ratio) {
                return along(r * u);
              }
            }
          },
          [&](const GaussianPushforwardSpec& s) {
            Eigen::VectorXd v(d);
            for (;;) {
              for (int i = 0; i < d; ++i) {
                v[i] = s.sigma * normal_(engine_);
              }
              if (v.norm() <= s.truncation) {
                return along(v);
              }
            }
          },
      },
      model_->distribution());
}

std::vector<ManifoldPoint> Sampler::draw(int count) {
  if (count < 0) {
    throw InvalidInputError(fmt::format("sample count must be >= 0, got {}", count));
  }
  std::vector<ManifoldPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(draw());
  }
  return out;
}

std::vector<ManifoldPoint> sample(const PopulationModel& model, const RngStream& stream, int count) {
  if (count < 0) {
    throw InvalidInputError(fmt::format("sample count must be >= 0, got {}", count));
  }
  Sampler sampler(model, stream);
  return sampler.draw(count);
}

RadialMoments radial_moments(const PopulationModel& model) {
  const Manifold& m = model.manifold();
  const int d = m.dim();
  const auto eig = [&](double r) { return m.transverse_hess_eigenvalue(r); };
  using Quadrature = boost::math::quadrature::gauss_kronrod<double, 61>;
  const auto radial_average = [&](auto&& density, double upper) {
    const double mass = Quadrature::integrate(density, 0.0, upper, 10, 1e-14);
    const double r2 = Quadrature::integrate([&](double r) { return r * r * density(r); }, 0.0, upper, 10, 1e-14);
    const double c = Quadrature::integrate([&](double r) { return eig(r) * density(r); }, 0.0, upper, 10, 1e-14);
    return RadialMoments{r2 / mass, c / mass};
  };
  return std::visit(
      overloaded{
          [&](const DiscreteSpec&) -> RadialMoments {
            throw InvalidInputError("radial moments are defined for symmetric models only");
          },
          [&](const UniformCircleSpec& s) { return RadialMoments{s.radius * s.radius, eig(s.radius)}; },
          [&](const BallUniformSpec& s) {
            const auto density = [&](double r) {
              switch (m.kind()) {
                case ManifoldKind::kSphere:
                  return std::pow(std::sin(r), d - 1);
                case ManifoldKind::kHyperbolic:
                  return std::pow(std::sinh(r), d - 1);
                case ManifoldKind::kEuclidean:
                  break;
              }
              return std::pow(r, d - 1);
            };
            return radial_average(density, s.max_radius);
          },
          [&](const GaussianPushforwardSpec& s) {
            const auto density = [&](double r) { return std::pow(r, d - 1) * std::exp(-0.5 * r * r / (s.sigma * s.sigma)); };
            return radial_average(density, s.truncation);
          },
      },
      model.distribution());
}

PopulationMoments population_moments(const PopulationModel& model) {
  const Manifold& m = model.manifold();
  const int d = m.dim();
  PopulationMoments out;
  if (const auto* disc = std::get_if<DiscreteSpec>(&model.distribution())) {
    SolverOptions opts;
    opts.tol = 1e-14;
    opts.max_iter = 100000;
    const FrechetSolveResult mean = frechet_mean(m, disc->atoms, disc->weights, disc->atoms.front(), opts);
    if (!mean.converged) {
      throw NumericalFailure("population Frechet mean of the discrete model did not converge");
    }
    out.mu = mean.mean;
    const OrthonormalFrame frame = m.frame(out.mu);
    Eigen::MatrixXd eh = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < disc->atoms.size(); ++i) {
      const Eigen::VectorXd xi = m.coordinates(frame, m.log_map(out.mu, disc->atoms[i]));
      eh += disc->weights[i] * m.hess_from_log_coordinates(xi);
      gamma += disc->weights[i] * xi * xi.transpose();
    }
    out.expected_hessian = {frame, eh};
    out.gamma = {frame, gamma};
  } else {
    out.mu = model.center();
    const OrthonormalFrame frame = m.frame(out.mu);
    const RadialMoments radial = radial_moments(model);
    const double eh = m.kind() == ManifoldKind::kEuclidean
                          ? 1.0
                          : (1.0 + (d - 1) * radial.mean_transverse_eigenvalue) / d;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    out.expected_hessian = {frame, eh * id};
    out.gamma = {frame, (radial.mean_square_radius / d) * id};
  }
  if (out.expected_hessian.symmetric_eigenvalues().minCoeff() < kSingularityFloor) {
    throw AssumptionViolation("expected Hessian operator is singular (smallest eigenvalue < 1e-8)");
  }
  return out;
}

}  // namespace fdiff
