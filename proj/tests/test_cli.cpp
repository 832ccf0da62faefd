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

#include <spdlog/spdlog.h>

#include "calibkit/cli/commands.hpp"
#include "test_support.hpp"

namespace calibkit {
namespace {

namespace fs = std::filesystem;
using testing::slurp;
using testing::temp_dir;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { spdlog::set_level(spdlog::level::off); }
  void TearDown() override { spdlog::set_level(spdlog::level::info); }
};

TEST_F(Cli, CalibratePairIdenticalCloudsGivesIdentity) {
  const auto dir = temp_dir("cli_identity");
  PointCloud c = testing::corner_views(10, 30, 0.0, {}, 81).ref;
  c.frame_id = "front";
  io::write_ply(dir / "front.ply", c);
  io::write_ply(dir / "copy.ply", c);
  ASSERT_EQ(cli::cmd_calibrate_pair(dir / "front.ply", dir / "copy.ply", std::nullopt,
                                    dir / "out" / "report.json"),
            cli::kExitOk);
  const io::CalibrationReport r = io::read_report(dir / "out" / "report.json");
  EXPECT_EQ(r.status, "converged");
  EXPECT_EQ(r.pair.reference, "front");
  for (double v : r.params) EXPECT_NEAR(v, 0.0, 1e-9);
  EXPECT_GT(r.num_correspondences, 0u);
}

TEST_F(Cli, CalibratePairRecoversSyntheticPose) {
  const auto dir = temp_dir("cli_pair");
  const auto truth = ExtrinsicParams::make(0.02, -0.01, 0.03, 0.1, -0.05, 0.05);
  const PointCloud world = generate_scene(testing::corner_scene(10, 40, 5, Vec3(-2, -2, -2)));
  io::write_ply(dir / "ref.ply", render_view(world, {}, 0.0, 1e3, 1, "ref"));
  io::write_ply(dir / "mov.ply", render_view(world, truth, 0.0, 1e3, 2, "mov"));
  io::write_text(dir / "cfg.toml", "[prior]\nsigmas = [10, 10, 10, 1, 1, 1]\n");
  ASSERT_EQ(cli::cmd_calibrate_pair(dir / "ref.ply", dir / "mov.ply", dir / "cfg.toml",
                                    dir / "r.json", 7),
            cli::kExitOk);
  const io::CalibrationReport r = io::read_report(dir / "r.json");
  const ExtrinsicParams got = io::params_from_boundary(r.params);
  EXPECT_LT(testing::max_abs_diff(got, truth, true), 1e-6);
  EXPECT_LT(testing::max_abs_diff(got, truth, false), 1e-6);
  EXPECT_EQ(r.config["seed"], 7);
}

TEST_F(Cli, MissingInputsExitWithUsageCode) {
  const auto dir = temp_dir("cli_missing");
  EXPECT_EQ(cli::cmd_calibrate_pair(dir / "a.ply", dir / "b.ply", std::nullopt, dir / "r.json"),
            cli::kExitUsage);
  EXPECT_FALSE(fs::exists(dir / "r.json"));
  EXPECT_EQ(cli::cmd_run_session(dir, std::nullopt, dir / "out"), cli::kExitUsage);
  EXPECT_EQ(cli::cmd_simulate(dir / "nope.toml", dir / "sim"), cli::kExitUsage);
}

TEST_F(Cli, SceneFailureWritesReportAndExitsWithQualityCode) {
  const auto dir = temp_dir("cli_plane");
  SceneSpec s;
  s.seed = 2;
  s.planes.push_back({Vec3(0, 0, -2), Vec3::UnitZ(), {20, 20}, 30});
  const PointCloud world = generate_scene(s);
  io::write_ply(dir / "ref.ply", render_view(world, {}, 0.0, 1e3, 1, "ref"));
  io::write_ply(dir / "mov.ply", render_view(world, {}, 0.0, 1e3, 2, "mov"));
  EXPECT_EQ(cli::cmd_calibrate_pair(dir / "ref.ply", dir / "mov.ply", std::nullopt, dir / "r.json"),
            cli::kExitQuality);
  EXPECT_EQ(io::read_report(dir / "r.json").status, "rank_deficient");
}

TEST_F(Cli, SessionWithoutStopsExitsWithQualityCode) {
  const auto dir = temp_dir("cli_moving");
  const auto scen = dir / "scenario";
  fs::create_directories(scen / "site_1");
  std::vector<TwistSample> twist;
  for (int i = 0; i < 100; ++i) twist.push_back({i * 0.1, 4.0, 0.1});
  io::write_text(scen / "twist.csv", io::format_twist_csv(twist));
  const auto views = testing::corner_views(6, 10, 0.0, {}, 3);
  io::write_ply(scen / "site_1" / "a.ply", views.ref);
  io::write_ply(scen / "site_1" / "b.ply", views.mov);
  io::write_text(dir / "cfg.toml", "[session]\nreference_sensor = \"a\"\n");
  EXPECT_EQ(cli::cmd_run_session(scen, dir / "cfg.toml", dir / "out"), cli::kExitQuality);
  const io::CalibrationReport r = io::read_report(dir / "out" / "a-b_report.json");
  EXPECT_TRUE(r.history.empty());
  EXPECT_FALSE(r.done);
  EXPECT_EQ(slurp(dir / "out" / "a-b_log.csv"), io::csv_header());
  // Unknown reference sensor.
  io::write_text(dir / "cfg2.toml", "[session]\nreference_sensor = \"zz\"\n");
  EXPECT_EQ(cli::cmd_run_session(scen, dir / "cfg2.toml", dir / "out2"), cli::kExitUsage);
}

TEST_F(Cli, SimulateIsReproducible) {
  const fs::path scene = CALIBKIT_SOURCE_DIR "/scenarios/twelve_sites.toml";
  const auto dir = temp_dir("cli_sim");
  ASSERT_EQ(cli::cmd_simulate(scene, dir / "a", 12), cli::kExitOk);
  ASSERT_EQ(cli::cmd_simulate(scene, dir / "b", 12), cli::kExitOk);
  ASSERT_EQ(cli::cmd_simulate(scene, dir / "c", 13), cli::kExitOk);
  std::size_t sites = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    sites += e.is_directory() && e.path().filename().string().rfind("site_", 0) == 0 ? 1 : 0;
  }
  EXPECT_EQ(sites, 12u);
  for (const char* f : {"twist.csv", "ground_truth.toml", "site_1/lidar1.ply", "site_12/lidar2.ply"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir / "a" / "site_1/lidar2.ply"), slurp(dir / "c" / "site_1/lidar2.ply"));
  const io::GroundTruth gt = io::read_ground_truth(dir / "a" / "ground_truth.toml");
  EXPECT_EQ(gt.reference, "lidar1");
  const io::BoundaryParams& g = gt.extrinsics.at("lidar2");
  EXPECT_NEAR(g[0], 2.0, 1e-9);
  EXPECT_NEAR(g[5], 0.1, 1e-9);
}

}  // namespace
}  // namespace calibkit
