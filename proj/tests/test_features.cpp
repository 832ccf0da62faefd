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

// Population-covariance eigenvalues computed independently of the library.
Vec3 eigenvalues_desc(const std::vector<Vec3>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(pts.size());
  Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  return {ev[2], ev[1], ev[0]};
}

TEST(LocalShape, FewerThanThreePointsIsDegenerate) {
  const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  const LocalShape s = local_shape(two);
  EXPECT_EQ(s.planarity, 0.0);
}

TEST(EstimateNormals, UnitSquareGivesZNormals) {
  // Regular 10x10 grid on z = 0 with the sensor above it.
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) pts.emplace_back(i / 9.0, j / 9.0, -2.0);
  }
  const PointCloud out = estimate_normals_planarity(testing::cloud_of(pts));
  const KdTree tree(pts);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Point& p = out.points[i];
    EXPECT_NEAR((*p.normal - Vec3::UnitZ()).norm(), 0.0, 1e-6);
    std::vector<Vec3> hood;
    for (const Neighbor& n : tree.knn(pts[i], 10)) hood.push_back(pts[n.index]);
    const Vec3 ev = eigenvalues_desc(hood);
    EXPECT_NEAR(*p.planarity, (ev[1] - ev[2]) / ev[0], 1e-9);
  }
}

TEST(EstimateNormals, IsotropicBallHasLowPlanarity) {
  Rng rng(21);
  std::vector<Vec3> pts;
  while (pts.size() < 5000) {
    const Vec3 v = testing::random_vec(rng, 1.0);
    if (v.norm() <= 1.0) pts.push_back(v + Vec3(10, 0, 0));
  }
  // Monte-Carlo oracle: mean planarity of 10-point samples from a uniform ball.
  double oracle = 0.0;
  const int draws = 20000;
  for (int d = 0; d < draws; ++d) {
    std::vector<Vec3> s;
    while (s.size() < 10) {
      const Vec3 v = testing::random_vec(rng, 1.0);
      if (v.norm() <= 1.0) s.push_back(v);
    }
    const Vec3 ev = eigenvalues_desc(s);
    oracle += (ev[1] - ev[2]) / ev[0];
  }
  oracle /= draws;
  const PointCloud out = estimate_normals_planarity(testing::cloud_of(pts));
  double mean = 0.0;
  for (const Point& p : out.points) mean += *p.planarity;
  mean /= static_cast<double>(out.size());
  EXPECT_NEAR(mean, oracle, 0.1);
}

TEST(EstimateNormals, ThreePointsWithKThree) {
  NeighborhoodConfig cfg;
  cfg.k_neighbors = 3;
  const PointCloud out = estimate_normals_planarity(
      testing::cloud_of({Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(0, 1, 1)}), cfg);
  for (const Point& p : out.points) {
    EXPECT_NEAR((*p.normal - Vec3(0, 0, -1)).norm(), 0.0, 1e-9);
    EXPECT_GE(*p.planarity, 0.0);
    EXPECT_LE(*p.planarity, 1.0);
  }
}

TEST(EstimateNormals, TooFewPointsIsInsufficientData) {
  try {
    estimate_normals_planarity(testing::cloud_of({Vec3(0, 0, 1), Vec3(1, 0, 1)}));
    FAIL();
  } catch (const CalibError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
}

TEST(EstimateNormals, MaxRadiusIsolatesPoints) {
  Rng rng(22);
  auto pts = testing::square_patch(rng, 200, 4.0, 1.0);
  pts.emplace_back(50, 50, 50);
  NeighborhoodConfig cfg;
  cfg.max_radius = 1.0;
  const PointCloud out = estimate_normals_planarity(testing::cloud_of(pts), cfg);
  EXPECT_EQ(*out.points.back().planarity, 0.0);
}

TEST(EstimateNormalsProperty, NormalsFaceOriginAndAreUnit) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud c = testing::random_cloud(rng, 300, 10.0);
    const PointCloud out = estimate_normals_planarity(c);
    for (const Point& p : out.points) {
      ASSERT_NEAR(p.normal->norm(), 1.0, 1e-12);
      ASSERT_GE(p.normal->dot(-p.position), 0.0);
      ASSERT_GE(*p.planarity, 0.0);
      ASSERT_LE(*p.planarity, 1.0);
    }
  }
}

TEST(EstimateNormalsProperty, RigidMotionInvariance) {
  Rng rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud c = testing::random_cloud(rng, 200, 3.0);
    const ExtrinsicParams g = testing::random_params(rng, kPi, 20.0);
    const PointCloud a = estimate_normals_planarity(c);
    const PointCloud b = estimate_normals_planarity(apply_transform(c, g));
    const Mat3 r = rotation_of(g);
    for (std::size_t i = 0; i < c.size(); ++i) {
      ASSERT_NEAR(*a.points[i].planarity, *b.points[i].planarity, 1e-9);
      // Orientation depends on the origin, so compare the undirected line.
      const double cosang = std::abs((r * *a.points[i].normal).dot(*b.points[i].normal));
      if (*a.points[i].planarity > 0.05) {
        ASSERT_NEAR(cosang, 1.0, 1e-6);
      }
    }
  }
}

}  // namespace
}  // namespace calibkit
