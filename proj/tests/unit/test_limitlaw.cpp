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
#include "fdiff/limitlaw.hpp"

#include <gtest/gtest.h>

namespace fdiff {
namespace {

LimitParams anisotropic() {
  const Manifold m = Manifold::sphere(2);
  const OrthonormalFrame f = m.frame({Eigen::Vector3d(0, 0, 1)});
  Eigen::Matrix2d eh;
  eh << 0.9, 0.05, 0.05, 0.95;
  Eigen::Matrix2d gamma;
  gamma << 0.2, 0.04, 0.04, 0.1;
  return limit_params_from_moments({f, eh}, {f, gamma}, "analytic");
}

TEST(LimitLaw, MarginalIsCenteredWithLinearCovariance) {
  const DiffusionSpec spec = DiffusionSpec::from(anisotropic());
  const GaussianLaw law = gaussian_law_at(spec, 0.7);
  EXPECT_EQ(law.mean, Eigen::VectorXd::Zero(2));
  EXPECT_LT((law.covariance.entries - 0.7 * spec.a.entries).norm(), 1e-15);
  EXPECT_EQ(gaussian_law_at(spec, 0.0).covariance.entries.norm(), 0.0);
  EXPECT_THROW((void)gaussian_law_at(spec, -0.1), DomainError);
}

TEST(LimitLaw, InconsistentSquareRootIsRejected) {
  LimitParams p = anisotropic();
  p.sqrt_a.entries(0, 0) += 1e-3;
  EXPECT_THROW((void)DiffusionSpec::from(p), InvalidInputError);
}

TEST(LimitLaw, BrownianPathsHaveTheRightCovarianceAndIndependentIncrements) {
  const DiffusionSpec spec = DiffusionSpec::from(anisotropic());
  const int paths = 20000;
  Eigen::Matrix2d end_cov = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d cross = Eigen::Matrix2d::Zero();
  for (int i = 0; i < paths; ++i) {
    const DiscretePath p = sample_brownian_path(spec, 2.0, 40, {3, static_cast<std::uint64_t>(i), StreamPurpose::kBrownian});
    ASSERT_EQ(p.values.cols(), 41);
    ASSERT_DOUBLE_EQ(p.times.back(), 2.0);
    const Eigen::Vector2d end = p.values.col(40);
    const Eigen::Vector2d first_half = p.values.col(20);
    const Eigen::Vector2d second_half = end - first_half;
    end_cov += end * end.transpose();
    cross += first_half * second_half.transpose();
  }
  end_cov /= paths;
  cross /= paths;
  const Eigen::Matrix2d target = 2.0 * spec.a.entries;
  // Entry-wise standard error ~ |target| sqrt(2 / paths) ~ 0.01 |target|.
  EXPECT_LT((end_cov - target).norm() / target.norm(), 0.05);
  EXPECT_LT(cross.norm() / target.norm(), 0.05);
}

TEST(LimitLaw, PathRequiresPositiveStepsAndHorizon) {
  const DiffusionSpec spec = DiffusionSpec::from(anisotropic());
  EXPECT_THROW((void)sample_brownian_path(spec, 1.0, 0, {}), InvalidInputError);
  EXPECT_THROW((void)sample_brownian_path(spec, 0.0, 10, {}), DomainError);
}

TEST(LimitLaw, GaussianDrawsMatchTheirCovariance) {
  Eigen::Matrix3d cov;
  cov << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
  std::mt19937_64 engine(8);
  const Eigen::MatrixXd z = sample_gaussian(cov, 50000, engine);
  const Eigen::Matrix3d s = z * z.transpose() / 50000.0;
  EXPECT_LT((s - cov).norm() / cov.norm(), 0.03);
}

}  // namespace
}  // namespace fdiff
