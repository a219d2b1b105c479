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

#ifndef FDIFF_GEOMETRY_HPP
#define FDIFF_GEOMETRY_HPP

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>

/**
 * \file
 * \brief Closed-form Riemannian geometry of the constant-curvature model spaces.
 *
 * Points and tangent vectors are stored in ambient coordinates:
 *  - Euclidean space R^d uses R^d itself;
 *  - the unit sphere S^d uses unit vectors of R^{d+1};
 *  - hyperbolic space H^d uses the upper sheet of the hyperboloid
 *    <x, x> = -1 in Minkowski space R^{d,1}, with the time-like coordinate last.
 */

namespace fdiff {

enum class ManifoldKind { kEuclidean, kSphere, kHyperbolic };

std::string_view to_string(ManifoldKind kind);
ManifoldKind manifold_kind_from_string(std::string_view name);

struct ManifoldPoint {
  Eigen::VectorXd coords;
};

struct TangentVector {
  ManifoldPoint base;
  Eigen::VectorXd coords;
};

/// Pinching constants of the sectional curvature, kappa0 <= K <= kappa1.
struct CurvatureBounds {
  double kappa0 = 0.0;
  double kappa1 = 0.0;
};

/// Orthonormal basis of the tangent space at `base`, one basis vector per column.
struct OrthonormalFrame {
  ManifoldPoint base;
  Eigen::MatrixXd basis;

  [[nodiscard]] int dim() const { return static_cast<int>(basis.cols()); }
};

/// Linear map on the tangent space at `frame.base`, expressed in `frame`.
struct FrameMatrix {
  OrthonormalFrame frame;
  Eigen::MatrixXd entries;

  /// Eigenvalues of the symmetric part, ascending.
  [[nodiscard]] Eigen::VectorXd symmetric_eigenvalues() const;
};

/// `rho * cot(rho)` with a series branch for small rho.
double rho_cot_rho(double rho);
/// `rho * coth(rho)` with a series branch for small rho.
double rho_coth_rho(double rho);

/// One of the three constant-curvature model spaces of a given dimension.
///
/// All member functions are const and free of shared state.
class Manifold {
 public:
  /// Distance to the cut locus below which log maps are refused.
  static constexpr double kCutLocusMargin = 1e-8;
  static constexpr double kMembershipTolerance = 1e-12;

  Manifold(ManifoldKind kind, int dim);

  static Manifold euclidean(int dim) { return {ManifoldKind::kEuclidean, dim}; }
  static Manifold sphere(int dim) { return {ManifoldKind::kSphere, dim}; }
  static Manifold hyperbolic(int dim) { return {ManifoldKind::kHyperbolic, dim}; }

  [[nodiscard]] ManifoldKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int ambient_dim() const { return kind_ == ManifoldKind::kEuclidean ? dim_ : dim_ + 1; }
  [[nodiscard]] CurvatureBounds curvature_bounds() const;
  [[nodiscard]] double injectivity_radius() const;
  [[nodiscard]] std::string name() const;

  bool operator==(const Manifold&) const = default;

  /// Ambient bilinear form: Euclidean dot product, or the Minkowski form for H^d.
  [[nodiscard]] double ambient_inner(const Eigen::Ref<const Eigen::VectorXd>& a,
                                     const Eigen::Ref<const Eigen::VectorXd>& b) const;
  [[nodiscard]] double inner(const TangentVector& u, const TangentVector& v) const;
  [[nodiscard]] double norm(const TangentVector& v) const;

  [[nodiscard]] bool contains(const ManifoldPoint& x, double tol = kMembershipTolerance) const;
  [[nodiscard]] bool is_tangent(const TangentVector& v, double tol = kMembershipTolerance) const;
  /// Throws InvalidInputError unless `x` is a point of this manifold.
  void validate(const ManifoldPoint& x) const;

  /// Pulls an ambient vector onto the manifold (normalization / sheet projection).
  [[nodiscard]] ManifoldPoint project(const Eigen::Ref<const Eigen::VectorXd>& ambient) const;
  /// Orthogonal projection of an ambient vector onto the tangent space at `base`.
  [[nodiscard]] TangentVector project_tangent(const ManifoldPoint& base,
                                              const Eigen::Ref<const Eigen::VectorXd>& ambient) const;
  [[nodiscard]] TangentVector zero_vector(const ManifoldPoint& base) const;

  [[nodiscard]] double distance(const ManifoldPoint& x, const ManifoldPoint& y) const;
  [[nodiscard]] ManifoldPoint exp_map(const TangentVector& v) const;
  [[nodiscard]] TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y) const;
  [[nodiscard]] TangentVector parallel_transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                                 const TangentVector& v) const;

  /// Gram-Schmidt over the ambient axes in the order given (default: index order).
  [[nodiscard]] OrthonormalFrame frame(const ManifoldPoint& base) const;
  [[nodiscard]] OrthonormalFrame frame(const ManifoldPoint& base, std::span<const int> axis_order) const;

  /// Coordinates of a tangent vector in `frame` (metric inner products with the basis).
  [[nodiscard]] Eigen::VectorXd coordinates(const OrthonormalFrame& frame, const TangentVector& v) const;
  [[nodiscard]] TangentVector from_coordinates(const OrthonormalFrame& frame,
                                               const Eigen::Ref<const Eigen::VectorXd>& coords) const;
  /// The same linear map written in another orthonormal frame at the same base point.
  [[nodiscard]] FrameMatrix reexpress(const FrameMatrix& m, const OrthonormalFrame& target) const;

  /// Hessian at x of half the squared distance to y, i.e. minus the covariant
  /// derivative of the field x -> log_x(y), in `frame`.
  [[nodiscard]] FrameMatrix hess_operator(const ManifoldPoint& x, const ManifoldPoint& y,
                                          const OrthonormalFrame& frame) const;

  /// Same operator from the log vector's frame coordinates: c*I + (1-c) u u^T.
  [[nodiscard]] Eigen::MatrixXd hess_from_log_coordinates(const Eigen::Ref<const Eigen::VectorXd>& log_coords) const;

  /// Eigenvalue of the Hessian orthogonal to the geodesic direction at distance rho.
  [[nodiscard]] double transverse_hess_eigenvalue(double rho) const;

 private:
  void check_dims(const Eigen::Ref<const Eigen::VectorXd>& v) const;

  ManifoldKind kind_;
  int dim_;
};

/// Checks every eigenvalue of the symmetrized operator against the comparison bounds
/// sqrt(k1) rho cot(sqrt(k1) rho) <= lambda <= sqrt(-k0) rho coth(sqrt(-k0) rho).
///
/// Throws DomainError when kappa1 > 0 and sqrt(kappa1) * rho >= pi / 2.
bool hess_bounds_check(const FrameMatrix& hess, double rho, const CurvatureBounds& bounds, double tol = 1e-9);

}  // namespace fdiff

#endif  // FDIFF_GEOMETRY_HPP
