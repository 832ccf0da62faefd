// Copyright 2026 The calibkit Authors
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


#include <gtest/gtest.h>

#include "test_support.hpp"

namespace calibkit {
namespace {

// Correspondences on planes through `centers` with `normals`, exactly
// consistent with truth: reference q on the plane, movable p = truth^-1(q + s)
// where s slides along the plane so nearest points do not coincide.
std::vector<Correspondence> planar_correspondences(Rng& rng, const ExtrinsicParams& truth,
                                                   const std::vector<Vec3>& centers,
                                                   const std::vector<Vec3>& normals,
                                                   std::size_t per_plane, double noise = 0.0) {
  const ExtrinsicParams inv = invert_params(truth);
  std::vector<Correspondence> out;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const Vec3 n = normals[k].normalized();
    const Vec3 u = n.unitOrthogonal();
    const Vec3 v = n.cross(u);
    for (std::size_t i = 0; i < per_plane; ++i) {
      Correspondence c;
      c.q = centers[k] + rng.uniform(-3, 3) * u + rng.uniform(-3, 3) * v;
      c.n = n;
      const Vec3 slid = c.q + rng.uniform(-0.05, 0.05) * u + rng.uniform(-0.05, 0.05) * v +
                        noise * rng.normal() * n;
      c.p = transform_point(inv, slid);
      out.push_back(c);
    }
  }
  return out;
}

std::vector<Vec3> corner_centers() { return {Vec3(0, 0, -2), Vec3(0, 5, 0), Vec3(5, 0, 0)}; }
std::vector<Vec3> corner_normals() { return {Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX()}; }

TEST(PointToPlaneResidual, Examples) {
  EXPECT_EQ(point_to_plane_residual({}, Vec3(1, 2, 3), Vec3(1, 2, 0), Vec3::UnitZ()), 3.0);
  EXPECT_EQ(point_to_plane_residual({}, Vec3(5, -2, 0), Vec3(0, 0, 0), Vec3::UnitZ()), 0.0);
  const auto shift = ExtrinsicParams::make(0, 0, 0, 0, 0, -1);
  EXPECT_EQ(point_to_plane_residual(shift, Vec3(0, 0, 1), Vec3::Zero(), Vec3::UnitZ()), 0.0);
}

TEST(RobustSigma, Examples) {
  const std::vector<double> a = {1, 2, 3, 4, 100};
  EXPECT_DOUBLE_EQ(robust_sigma(a), 1.4826);
  const std::vector<double> c = {0.3, 0.3, 0.3};
  EXPECT_EQ(robust_sigma(c), kSigmaFloor);
  EXPECT_THROW(robust_sigma(std::vector<double>{}), CalibError);
}

TEST(RobustSigma, RecoversGaussianSigma) {
  Rng rng(41);
  std::vector<double> d(100000);
  for (double& x : d) x = 0.7 + 0.02 * rng.normal();
  EXPECT_NEAR(robust_sigma(d), 0.02, 0.02 * 0.02);
}

TEST(RobustSigmaProperty, ShiftInvariantAndScaleEquivariant) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(1 + static_cast<std::size_t>(rng.uniform(0, 60)));
    for (double& x : d) x = rng.uniform(-1, 1);
    const double s = robust_sigma(d);
    const double shift = rng.uniform(-5, 5), scale = rng.uniform(0.5, 4);
    std::vector<double> e = d;
    for (double& x : e) x = scale * x + shift;
    const double se = robust_sigma(e);
    if (s > kSigmaFloor) {
      ASSERT_NEAR(se, scale * s, 1e-9);
    }
    ASSERT_GE(se, kSigmaFloor);
  }
}

TEST(Jacobian, MatchesCentralDifferences) {
  Rng rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    const ExtrinsicParams x = testing::random_params(rng, kPi, 5.0);
    const Vec3 p = testing::random_vec(rng, 10.0), q = testing::random_vec(rng, 10.0);
    const Vec3 n = testing::random_unit(rng);
    const Vec6 j = jacobian_point_to_plane(x, p, q, n);
    for (Eigen::Index k = 0; k < 6; ++k) {
      const double h = 1e-6;
      Vec6 a = x.to_vector(), b = x.to_vector();
      a[k] += h;
      b[k] -= h;
      const double fd = (point_to_plane_residual({a[0], a[1], a[2], a[3], a[4], a[5]}, p, q, n) -
                         point_to_plane_residual({b[0], b[1], b[2], b[3], b[4], b[5]}, p, q, n)) /
                        (2 * h);
      ASSERT_NEAR(j[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
    // Translation block is the normal itself.
    ASSERT_EQ(j.tail<3>(), n);
  }
}

TEST(Jacobian, PointOnRotationAxisHasZeroAngularTerm) {
  const Vec6 j = jacobian_point_to_plane({}, Vec3(0, 0, 2), Vec3::Zero(), Vec3::UnitX());
  EXPECT_NEAR(j[2], 0.0, 1e-15);
}

TEST(SolveGaussMarkov, PriorOnlyReturnsPriorExactly) {
  ResidualBundle b;
  b.prior.values = ExtrinsicParams::make(0.1, -0.2, 0.3, 1.0, 2.0, -3.0);
  b.prior.sigmas = {0.01, 0.01, 0.01, 0.01, 0.01, 0.01};
  const AdjustmentResult r = solve_gauss_markov(b, ExtrinsicParams{});
  EXPECT_EQ(r.params, b.prior.values);
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_NEAR(r.covariance(i, i), 1e-4, 1e-16);
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (i != j) {
        EXPECT_EQ(r.covariance(i, j), 0.0);
      }
    }
  }
}

TEST(SolveGaussMarkov, ExactCornerSolve) {
  Rng rng(44);
  const auto truth = ExtrinsicParams::make(0.05, -0.03, 0.08, 0.4, -0.2, 0.3);
  ResidualBundle b;
  b.correspondences =
      planar_correspondences(rng, truth, corner_centers(), corner_normals(), 200);
  b.prior = ParamPrior::unconstrained();
  b.sigma_d = 0.01;
  const AdjustmentResult r = solve_gauss_markov(b, ExtrinsicParams{});
  EXPECT_LT(testing::max_abs_diff(r.params, truth, true), 1e-9);
  EXPECT_LT(testing::max_abs_diff(r.params, truth, false), 1e-9);
  EXPECT_EQ(r.redundancy, 600 - 6);
  EXPECT_TRUE(r.converged);
}

TEST(SolveGaussMarkov, SinglePlaneIsRankDeficient) {
  Rng rng(45);
  ResidualBundle b;
  b.correspondences = planar_correspondences(rng, {}, {Vec3(0, 0, -2)}, {Vec3::UnitZ()}, 300);
  b.prior = ParamPrior::unconstrained();
  b.sigma_d = 0.01;
  try {
    solve_gauss_markov(b, ExtrinsicParams{});
    FAIL();
  } catch (const RankDeficiencyError& e) {
    const auto dir = e.null_direction();
    EXPECT_LT(std::abs(dir[0]) + std::abs(dir[1]) + std::abs(dir[5]), 1e-6);
    EXPECT_GT(e.condition_number(), 1e10);
  }
}

TEST(SolveGaussMarkov, UnderDetermined) {
  Rng rng(46);
  ResidualBundle b;
  b.correspondences = planar_correspondences(rng, {}, {Vec3(0, 0, -2)}, {Vec3::UnitZ()}, 2);
  b.prior = ParamPrior::unconstrained();
  try {
    solve_gauss_markov(b, ExtrinsicParams{});
    FAIL();
  } catch (const CalibError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnderDetermined);
  }
}

TEST(SolveGaussMarkovProperty, MaskedParametersStayFixed) {
  Rng rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const ExtrinsicParams truth = testing::random_params(rng, 0.1, 0.5);
    ResidualBundle b;
    b.correspondences =
        planar_correspondences(rng, truth, corner_centers(), corner_normals(), 50, 0.003);
    b.prior = ParamPrior::unconstrained(testing::random_params(rng, 0.1, 0.5));
    b.sigma_d = 0.003;
    std::array<bool, 6> mask{};
    for (bool& m : mask) m = rng.uniform(0, 1) < 0.5;
    b.prior.estimate_mask = mask;
    const AdjustmentResult r = solve_gauss_markov(b, testing::random_params(rng, 0.1, 0.5));
    const Vec6 got = r.params.to_vector(), prior = b.prior.values.to_vector();
    for (Eigen::Index i = 0; i < 6; ++i) {
      if (mask[static_cast<std::size_t>(i)]) continue;
      ASSERT_EQ(got[i], prior[i]);
      ASSERT_EQ(r.covariance.row(i).cwiseAbs().maxCoeff(), 0.0);
      ASSERT_EQ(r.covariance.col(i).cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(SolveGaussMarkovProperty, CovarianceSymmetricPositiveDefinite) {
  Rng rng(48);
  for (int trial = 0; trial < 50; ++trial) {
    const ExtrinsicParams truth = testing::random_params(rng, 0.1, 0.5);
    ResidualBundle b;
    b.correspondences =
        planar_correspondences(rng, truth, corner_centers(), corner_normals(), 40, 0.005);
    b.prior = ParamPrior::unconstrained();
    b.sigma_d = 0.005;
    const AdjustmentResult r = solve_gauss_markov(b, ExtrinsicParams{});
    ASSERT_LT((r.covariance - r.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-18);
    const Eigen::SelfAdjointEigenSolver<Mat6> es(r.covariance);
    ASSERT_GT(es.eigenvalues().minCoeff(), 0.0);
    ASSERT_LE(weighted_ssr(b, r.params), weighted_ssr(b, ExtrinsicParams{}));
  }
}

TEST(SolveGaussMarkovProperty, TighterPriorNeverIncreasesSigma) {
  Rng rng(49);
  for (int trial = 0; trial < 30; ++trial) {
    ResidualBundle b;
    b.correspondences =
        planar_correspondences(rng, {}, corner_centers(), corner_normals(), 30, 0.01);
    b.sigma_d = 0.01;
    b.prior.sigmas = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    const std::size_t k = static_cast<std::size_t>(rng.uniform(0, 6));
    const AdjustmentResult loose = solve_gauss_markov(b, ExtrinsicParams{});
    b.prior.sigmas[k] = 0.001;
    const AdjustmentResult tight = solve_gauss_markov(b, ExtrinsicParams{});
    // Compare unit-weight covariances so that the sigma0 rescale does not
    // mask the effect of the prior.
    const double a = loose.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) /
                     loose.sigma0_squared;
    const double c = tight.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) /
                     tight.sigma0_squared;
    ASSERT_LE(c, a * (1 + 1e-12));
  }
}

TEST(SolveGaussMarkov, InvalidSigmaD) {
  ResidualBundle b;
  b.sigma_d = 0.0;
  EXPECT_THROW(solve_gauss_markov(b, ExtrinsicParams{}), CalibError);
}

}  // namespace
}  // namespace calibkit
