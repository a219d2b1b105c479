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

#include "fdiff/geometry.hpp"

#include "fdiff/errors.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

namespace fdiff {

namespace {

constexpr double kSeriesThreshold = 1e-4;
constexpr double kFrameDegeneracy = 1e-8;

}  // namespace

std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::kEuclidean:
      return "euclidean";
    case ManifoldKind::kSphere:
      return "sphere";
    case ManifoldKind::kHyperbolic:
      return "hyperbolic";
  }
  return "unknown";
}

ManifoldKind manifold_kind_from_string(std::string_view name) {
  if (name == "euclidean") {
    return ManifoldKind::kEuclidean;
  }
  if (name == "sphere") {
    return ManifoldKind::kSphere;
  }
  if (name == "hyperbolic") {
    return ManifoldKind::kHyperbolic;
  }
  throw InvalidInputError(fmt::format("unknown manifold '{}' (expected euclidean, sphere or hyperbolic)", name));
}

double rho_cot_rho(double rho) {
  if (std::abs(rho) < kSeriesThreshold) {
    const double r2 = rho * rho;
    return 1.0 - r2 / 3.0 - r2 * r2 / 45.0;
  }
  return rho * std::cos(rho) / std::sin(rho);
}

double rho_coth_rho(double rho) {
  if (std::abs(rho) < kSeriesThreshold) {
    const double r2 = rho * rho;
    return 1.0 + r2 / 3.0 - r2 * r2 / 45.0;
  }
  return rho / std::tanh(rho);
}

Eigen::VectorXd FrameMatrix::symmetric_eigenvalues() const {
  const Eigen::MatrixXd sym = 0.5 * (entries + entries.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
}

Manifold::Manifold(ManifoldKind kind, int dim) : kind_{kind}, dim_{dim} {
  if (dim < 1) {
    throw InvalidInputError(fmt::format("manifold dimension must be >= 1, got {}", dim));
  }
}

CurvatureBounds Manifold::curvature_bounds() const {
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return {0.0, 0.0};
    case ManifoldKind::kSphere:
      return {0.0, 1.0};
    case ManifoldKind::kHyperbolic:
      return {-1.0, 0.0};
  }
  return {};
}

double Manifold::injectivity_radius() const {
  return kind_ == ManifoldKind::kSphere ? std::numbers::pi : std::numeric_limits<double>::infinity();
}

std::string Manifold::name() const {
  return fmt::format("{}({})", to_string(kind_), dim_);
}

void Manifold::check_dims(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != ambient_dim()) {
    throw InvalidInputError(
        fmt::format("{}: expected ambient dimension {}, got a vector of size {}", name(), ambient_dim(), v.size()));
  }
}

double Manifold::ambient_inner(const Eigen::Ref<const Eigen::VectorXd>& a,
                               const Eigen::Ref<const Eigen::VectorXd>& b) const {
  check_dims(a);
  check_dims(b);
  if (kind_ == ManifoldKind::kHyperbolic) {
    const auto last = a.size() - 1;
    return a.head(last).dot(b.head(last)) - a[last] * b[last];
  }
  return a.dot(b);
}

double Manifold::inner(const TangentVector& u, const TangentVector& v) const {
  return ambient_inner(u.coords, v.coords);
}

double Manifold::norm(const TangentVector& v) const {
  return std::sqrt(std::max(0.0, inner(v, v)));
}

bool Manifold::contains(const ManifoldPoint& x, double tol) const {
  if (x.coords.size() != ambient_dim() || !x.coords.allFinite()) {
    return false;
  }
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return true;
    case ManifoldKind::kSphere:
      return std::abs(x.coords.norm() - 1.0) <= tol;
    case ManifoldKind::kHyperbolic: {
      // Rounding in the Minkowski form grows with the squared coordinate size.
      const double scale = 1.0 + x.coords.squaredNorm();
      return std::abs(ambient_inner(x.coords, x.coords) + 1.0) <= tol * scale && x.coords[dim_] >= 1.0 - tol;
    }
  }
  return false;
}

bool Manifold::is_tangent(const TangentVector& v, double tol) const {
  if (v.coords.size() != ambient_dim() || !contains(v.base, 1e-10)) {
    return false;
  }
  if (kind_ == ManifoldKind::kEuclidean) {
    return true;
  }
  const double scale = 1.0 + v.coords.norm() * v.base.coords.norm();
  return std::abs(ambient_inner(v.coords, v.base.coords)) <= tol * scale;
}

void Manifold::validate(const ManifoldPoint& x) const {
  check_dims(x.coords);
  if (!contains(x, 1e-10)) {
    throw InvalidInputError(fmt::format("point is not on {}", name()));
  }
}

ManifoldPoint Manifold::project(const Eigen::Ref<const Eigen::VectorXd>& ambient) const {
  check_dims(ambient);
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return {ambient};
    case ManifoldKind::kSphere: {
      const double n = ambient.norm();
      if (n == 0.0) {
        throw InvalidInputError("cannot project the zero vector onto the sphere");
      }
      return {ambient / n};
    }
    case ManifoldKind::kHyperbolic: {
      Eigen::VectorXd p = ambient;
      p[dim_] = std::sqrt(1.0 + ambient.head(dim_).squaredNorm());
      return {std::move(p)};
    }
  }
  return {ambient};
}

TangentVector Manifold::project_tangent(const ManifoldPoint& base,
                                        const Eigen::Ref<const Eigen::VectorXd>& ambient) const {
  check_dims(base.coords);
  check_dims(ambient);
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return {base, ambient};
    case ManifoldKind::kSphere:
      return {base, ambient - ambient.dot(base.coords) * base.coords};
    case ManifoldKind::kHyperbolic:
      return {base, ambient + ambient_inner(ambient, base.coords) * base.coords};
  }
  return {base, ambient};
}

TangentVector Manifold::zero_vector(const ManifoldPoint& base) const {
  check_dims(base.coords);
  return {base, Eigen::VectorXd::Zero(ambient_dim())};
}

double Manifold::distance(const ManifoldPoint& x, const ManifoldPoint& y) const {
  check_dims(x.coords);
  check_dims(y.coords);
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return (x.coords - y.coords).norm();
    case ManifoldKind::kSphere: {
      // atan2 of (sin, cos) is well conditioned at both ends of [0, pi].
      const double c = std::clamp(x.coords.dot(y.coords), -1.0, 1.0);
      const double s = (y.coords - c * x.coords).norm();
      return std::atan2(s, c);
    }
    case ManifoldKind::kHyperbolic: {
      const double c = std::max(1.0, -ambient_inner(x.coords, y.coords));
      if (c < 2.0) {
        const Eigen::VectorXd diff = y.coords - x.coords;
        const double chord = std::sqrt(std::max(0.0, ambient_inner(diff, diff)));
        return 2.0 * std::asinh(0.5 * chord);
      }
      return std::acosh(c);
    }
  }
  return 0.0;
}

ManifoldPoint Manifold::exp_map(const TangentVector& v) const {
  check_dims(v.base.coords);
  check_dims(v.coords);
  const Eigen::VectorXd& x = v.base.coords;
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return {x + v.coords};
    case ManifoldKind::kSphere: {
      const double t = v.coords.norm();
      if (t == 0.0) {
        return v.base;
      }
      Eigen::VectorXd p = std::cos(t) * x + (std::sin(t) / t) * v.coords;
      p.normalize();
      return {std::move(p)};
    }
    case ManifoldKind::kHyperbolic: {
      const double t = norm(v);
      if (t == 0.0) {
        return v.base;
      }
      Eigen::VectorXd p = std::cosh(t) * x + (std::sinh(t) / t) * v.coords;
      const double q = -ambient_inner(p, p);
      if (q > 0.0) {
        p /= std::sqrt(q);
      }
      return {std::move(p)};
    }
  }
  return v.base;
}

TangentVector Manifold::log_map(const ManifoldPoint& x, const ManifoldPoint& y) const {
  check_dims(x.coords);
  check_dims(y.coords);
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return {x, y.coords - x.coords};
    case ManifoldKind::kSphere: {
      const double c = std::clamp(x.coords.dot(y.coords), -1.0, 1.0);
      Eigen::VectorXd perp = y.coords - c * x.coords;
      const double s = perp.norm();
      const double theta = std::atan2(s, c);
      if (theta > std::numbers::pi - kCutLocusMargin) {
        throw CutLocusError(fmt::format("log map on {}: points are antipodal (distance {:.17g})", name(), theta));
      }
      if (s == 0.0) {
        return zero_vector(x);
      }
      perp -= perp.dot(x.coords) * x.coords;
      return {x, (theta / perp.norm()) * perp};
    }
    case ManifoldKind::kHyperbolic: {
      const double theta = distance(x, y);
      const double c = std::cosh(theta);
      Eigen::VectorXd perp = y.coords - c * x.coords;
      perp += ambient_inner(perp, x.coords) * x.coords;
      const double scale = theta < kSeriesThreshold ? 1.0 - theta * theta / 6.0 : theta / std::sinh(theta);
      return {x, scale * perp};
    }
  }
  return zero_vector(x);
}

TangentVector Manifold::parallel_transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                           const TangentVector& v) const {
  check_dims(x.coords);
  check_dims(y.coords);
  check_dims(v.coords);
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return {y, v.coords};
    case ManifoldKind::kSphere: {
      if (distance(x, y) > std::numbers::pi - kCutLocusMargin) {
        throw CutLocusError(fmt::format("parallel transport on {}: points are antipodal", name()));
      }
      const double c = x.coords.dot(y.coords);
      return {y, v.coords - (y.coords.dot(v.coords) / (1.0 + c)) * (x.coords + y.coords)};
    }
    case ManifoldKind::kHyperbolic: {
      const double c = ambient_inner(x.coords, y.coords);
      return {y, v.coords + (ambient_inner(y.coords, v.coords) / (1.0 - c)) * (x.coords + y.coords)};
    }
  }
  return {y, v.coords};
}

OrthonormalFrame Manifold::frame(const ManifoldPoint& base) const {
  std::vector<int> order(static_cast<std::size_t>(ambient_dim()));
  std::iota(order.begin(), order.end(), 0);
  return frame(base, order);
}

OrthonormalFrame Manifold::frame(const ManifoldPoint& base, std::span<const int> axis_order) const {
  check_dims(base.coords);
  OrthonormalFrame out{base, Eigen::MatrixXd::Zero(ambient_dim(), dim_)};
  int found = 0;
  for (const int axis : axis_order) {
    if (found == dim_) {
      break;
    }
    if (axis < 0 || axis >= ambient_dim()) {
      throw InvalidInputError(fmt::format("frame axis {} out of range", axis));
    }
    Eigen::VectorXd e = Eigen::VectorXd::Unit(ambient_dim(), axis);
    Eigen::VectorXd v = project_tangent(base, e).coords;
    for (int j = 0; j < found; ++j) {
      v -= ambient_inner(v, out.basis.col(j)) * out.basis.col(j);
    }
    const double n = std::sqrt(std::max(0.0, ambient_inner(v, v)));
    if (n < kFrameDegeneracy) {
      continue;
    }
    out.basis.col(found++) = v / n;
  }
  if (found != dim_) {
    throw InvalidInputError(fmt::format("axis order spans only {} of {} tangent directions", found, dim_));
  }
  return out;
}

Eigen::VectorXd Manifold::coordinates(const OrthonormalFrame& frame, const TangentVector& v) const {
  check_dims(v.coords);
  if (kind_ == ManifoldKind::kHyperbolic) {
    Eigen::VectorXd w = v.coords;
    w[dim_] = -w[dim_];
    return frame.basis.transpose() * w;
  }
  return frame.basis.transpose() * v.coords;
}

TangentVector Manifold::from_coordinates(const OrthonormalFrame& frame,
                                         const Eigen::Ref<const Eigen::VectorXd>& coords) const {
  if (coords.size() != dim_) {
    throw InvalidInputError(fmt::format("expected {} frame coordinates, got {}", dim_, coords.size()));
  }
  return {frame.base, frame.basis * coords};
}

FrameMatrix Manifold::reexpress(const FrameMatrix& m, const OrthonormalFrame& target) const {
  if ((m.frame.base.coords - target.base.coords).norm() > 1e-10) {
    throw InvalidInputError("frames are based at different points");
  }
  // q(i, j) = <target_i, source_j>
  Eigen::MatrixXd q(dim_, dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      q(i, j) = ambient_inner(target.basis.col(i), m.frame.basis.col(j));
    }
  }
  return {target, q * m.entries * q.transpose()};
}

double Manifold::transverse_hess_eigenvalue(double rho) const {
  switch (kind_) {
    case ManifoldKind::kEuclidean:
      return 1.0;
    case ManifoldKind::kSphere:
      return rho_cot_rho(rho);
    case ManifoldKind::kHyperbolic:
      return rho_coth_rho(rho);
  }
  return 1.0;
}

Eigen::MatrixXd Manifold::hess_from_log_coordinates(const Eigen::Ref<const Eigen::VectorXd>& log_coords) const {
  const double rho = log_coords.norm();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim_, dim_);
  if (rho == 0.0 || kind_ == ManifoldKind::kEuclidean) {
    return h;
  }
  const double c = transverse_hess_eigenvalue(rho);
  const Eigen::VectorXd u = log_coords / rho;
  h *= c;
  h.noalias() += (1.0 - c) * u * u.transpose();
  return h;
}

FrameMatrix Manifold::hess_operator(const ManifoldPoint& x, const ManifoldPoint& y,
                                    const OrthonormalFrame& frame) const {
  if ((frame.base.coords - x.coords).norm() > 1e-10) {
    throw InvalidInputError("hess_operator: frame is not based at x");
  }
  const TangentVector log = log_map(x, y);
  return {frame, hess_from_log_coordinates(coordinates(frame, log))};
}

bool hess_bounds_check(const FrameMatrix& hess, double rho, const CurvatureBounds& bounds, double tol) {
  if (bounds.kappa0 > 0.0 || bounds.kappa1 < 0.0 || rho < 0.0) {
    throw DomainError("curvature bounds must satisfy kappa0 <= 0 <= kappa1 and rho >= 0");
  }
  const double s1 = std::sqrt(bounds.kappa1) * rho;
  if (bounds.kappa1 > 0.0 && s1 >= std::numbers::pi / 2.0) {
    throw DomainError(fmt::format("lower comparison bound needs sqrt(kappa1)*rho < pi/2, got {}", s1));
  }
  const double lower = bounds.kappa1 > 0.0 ? rho_cot_rho(s1) : 1.0;
  const double upper = bounds.kappa0 < 0.0 ? rho_coth_rho(std::sqrt(-bounds.kappa0) * rho) : 1.0;
  const Eigen::VectorXd eig = hess.symmetric_eigenvalues();
  return (eig.array() >= lower - tol).all() && (eig.array() <= upper + tol).all();
}

}  // namespace fdiff
