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

#include <algorithm>
#include <numeric>

#include "test_support.hpp"

namespace calibkit {
namespace {

PointCloud prepared(const PointCloud& c) { return prepare_cloud(c, PipelineConfig{}); }

TEST(SelectUniform, SmallOverlapReturnsAllInside) {
  Rng rng(51);
  const PointCloud ref = testing::cloud_of(testing::square_patch(rng, 100, 1.0));
  MatchConfig cfg;
  cfg.num_selected = 500;
  const auto idx = select_uniform(ref, bounds_of(ref), cfg);
  std::vector<std::size_t> all(100);
  std::iota(all.begin(), all.end(), std::size_t{0});
  EXPECT_EQ(idx, all);
}

TEST(SelectUniform, NoOverlap) {
  const PointCloud ref = testing::cloud_of({Vec3(0, 0, 0), Vec3(1, 1, 1)});
  Aabb far;
  far.extend(Vec3(10, 10, 10));
  far.extend(Vec3(11, 11, 11));
  try {
    select_uniform(ref, far, MatchConfig{});
    FAIL();
  } catch (const CalibError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoOverlap);
  }
}

TEST(SelectUniform, SpreadsSelectionEvenly) {
  // Dense patch in one quadrant, sparse elsewhere: the selection must not
  // follow the input density.
  Rng rng(52);
  std::vector<Vec3> pts = testing::square_patch(rng, 20000, 5.0);
  for (const Vec3& p : testing::square_patch(rng, 20000, 10.0)) pts.push_back(p);
  const PointCloud ref = testing::cloud_of(pts);
  MatchConfig cfg;
  cfg.num_selected = 100;
  const auto idx = select_uniform(ref, bounds_of(ref), cfg);
  EXPECT_GE(idx.size(), 50u);
  EXPECT_LE(idx.size(), 200u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  std::array<double, 4> counts{};
  for (std::size_t i : idx) {
    const Vec3& p = pts[i];
    counts[(p.x() < 5 ? 0 : 1) + (p.y() < 5 ? 0 : 2)] += 1.0;
  }
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / 4.0;
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean) / 4.0;
  EXPECT_LT(std::sqrt(var) / mean, 0.5);
}

TEST(MatchNn, SelfMatchHasZeroDistance) {
  Rng rng(53);
  const PointCloud c = prepared(testing::corner_views(10, 20, 0.0, {}, 1).ref);
  std::vector<std::size_t> sel(c.size());
  std::iota(sel.begin(), sel.end(), std::size_t{0});
  for (const Correspondence& m : match_nn(sel, c, c, ExtrinsicParams{})) {
    ASSERT_EQ(m.mov_index, m.ref_index);
    ASSERT_EQ(m.signed_distance, 0.0);
  }
}

TEST(MatchNn, SingleMovablePoint) {
  PointCloud ref = testing::cloud_of({Vec3(0, 0, 0), Vec3(1, 0, 0)});
  for (Point& p : ref.points) p.normal = Vec3::UnitZ();
  const PointCloud mov = testing::cloud_of({Vec3(0, 0, 2)});
  const std::vector<std::size_t> sel = {0, 1};
  const auto m = match_nn(sel, ref, mov, ExtrinsicParams::make(0, 0, 0, 0, 0, 1));
  ASSERT_EQ(m.size(), 2u);
  for (const Correspondence& c : m) {
    EXPECT_EQ(c.mov_index, 0u);
    EXPECT_EQ(c.signed_distance, 3.0);
    EXPECT_EQ(c.p, Vec3(0, 0, 2));
  }
}

TEST(MatchNnProperty, AgreesWithBruteForce) {
  Rng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    PointCloud ref = testing::random_cloud(rng, 200, 5.0);
    for (Point& p : ref.points) p.normal = testing::random_unit(rng);
    const PointCloud mov = testing::random_cloud(rng, 300, 5.0);
    const ExtrinsicParams g = testing::random_params(rng, 0.5, 1.0);
    std::vector<Vec3> moved;
    for (const Point& p : mov.points) moved.push_back(transform_point(g, p.position));
    std::vector<std::size_t> sel(ref.size());
    std::iota(sel.begin(), sel.end(), std::size_t{0});
    for (const Correspondence& c : match_nn(sel, ref, mov, g)) {
      ASSERT_EQ(c.mov_index, testing::brute_nearest(moved, c.q));
      ASSERT_NEAR(c.signed_distance, (moved[c.mov_index] - c.q).dot(c.n), 1e-12);
    }
  }
}

TEST(Reject, DropsDistantOutlier) {
  Rng rng(55);
  PointCloud mov;
  std::vector<Correspondence> corr;
  for (std::size_t i = 0; i < 200; ++i) {
    Point p;
    p.normal = Vec3::UnitZ();
    mov.points.push_back(p);
    Correspondence c;
    c.mov_index = i;
    c.n = Vec3::UnitZ();
    c.signed_distance = 0.01 * rng.normal();
    corr.push_back(c);
  }
  corr[17].signed_distance = 10.0;
  const auto kept = reject(corr, mov, ExtrinsicParams{}, MatchConfig{});
  EXPECT_LT(kept.size(), 200u);
  for (const Correspondence& c : kept) EXPECT_NE(c.mov_index, 17u);
}

TEST(Reject, TiltedNormalsLeaveSceneUnsuitable) {
  PointCloud mov;
  std::vector<Correspondence> corr;
  for (std::size_t i = 0; i < 200; ++i) {
    Point p;
    p.normal = Vec3(std::sin(kPi / 4), 0, std::cos(kPi / 4));
    mov.points.push_back(p);
    Correspondence c;
    c.mov_index = i;
    c.n = Vec3::UnitZ();
    corr.push_back(c);
  }
  try {
    reject(corr, mov, ExtrinsicParams{}, MatchConfig{});
    FAIL();
  } catch (const CalibError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSceneUnsuitable);
  }
}

TEST(RunIcp, AlignedCloudsConvergeImmediately) {
  const auto views = testing::corner_views(10, 50, 0.0, {}, 2);
  const PointCloud ref = prepared(views.ref);
  const AdjustmentResult r = run_icp(ref, ref, {}, ParamPrior::unconstrained());
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.num_iterations, 2u);
  EXPECT_LT(testing::max_abs_diff(r.params, {}, true), 1e-9);
  EXPECT_LT(testing::max_abs_diff(r.params, {}, false), 1e-9);
}

TEST(RunIcp, RecoversCornerExtrinsics) {
  const auto truth = ExtrinsicParams::make(deg2rad(2), deg2rad(-1), deg2rad(3), 0.05, -0.03, 0.10);
  const auto views = testing::corner_views(10, 100, 0.005, truth, 3);
  const PointCloud ref = prepared(views.ref), mov = prepared(views.mov);
  const ExtrinsicParams init = perturb(truth, deg2rad(3), 0.03, 4);
  const AdjustmentResult r = run_icp(ref, mov, init, ParamPrior::unconstrained(init));
  EXPECT_LT(testing::max_abs_diff(r.params, truth, true), deg2rad(0.1));
  EXPECT_LT(testing::max_abs_diff(r.params, truth, false), 0.005);
  ASSERT_FALSE(r.iterations.empty());
  for (const IterationRecord& it : r.iterations) {
    EXPECT_LE(it.wssr_after, it.wssr_before * (1 + 1e-9));
    EXPECT_LE(it.num_retained, it.num_matched);
  }
}

TEST(RunIcp, SinglePlaneIsRankDeficient) {
  SceneSpec s;
  s.seed = 5;
  s.planes.push_back({Vec3(0, 0, -2), Vec3::UnitZ(), {20, 20}, 50});
  const PointCloud world = generate_scene(s);
  const PointCloud ref = prepared(render_view(world, {}, 0.0, 100, 1));
  const PointCloud mov = prepared(render_view(world, {}, 0.0, 100, 2));
  try {
    run_icp(ref, mov, {}, ParamPrior::unconstrained());
    FAIL();
  } catch (const RankDeficiencyError& e) {
    const auto d = e.null_direction();
    EXPECT_LT(std::abs(d[0]) + std::abs(d[1]) + std::abs(d[5]), 1e-3);
  }
}

TEST(RunIcp, MissingNormals) {
  const PointCloud c = testing::cloud_of({Vec3(1, 0, 0)});
  try {
    run_icp(c, c, {}, ParamPrior::unconstrained());
    FAIL();
  } catch (const CalibError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAttribute);
  }
}

TEST(RunIcpProperty, MovableOrderDoesNotMatter) {
  const auto truth = ExtrinsicParams::make(0.01, 0.02, -0.01, 0.05, 0.0, -0.05);
  const auto views = testing::corner_views(10, 40, 0.003, truth, 6);
  const PointCloud ref = prepared(views.ref), mov = prepared(views.mov);
  PointCloud shuffled = mov;
  Rng rng(56);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    std::swap(shuffled.points[i],
              shuffled.points[static_cast<std::size_t>(rng.uniform(0, static_cast<double>(i + 1)))]);
  }
  const AdjustmentResult a = run_icp(ref, mov, {}, ParamPrior::unconstrained());
  const AdjustmentResult b = run_icp(ref, shuffled, {}, ParamPrior::unconstrained());
  EXPECT_LT(testing::max_abs_diff(a.params, b.params, true), 1e-6);
  EXPECT_LT(testing::max_abs_diff(a.params, b.params, false), 1e-5);
}

}  // namespace
}  // namespace calibkit
