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


#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "calibkit/cli/commands.hpp"
#include "calibkit/version.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  namespace cli = calibkit::cli;

  CLI::App app{"calibkit: continuous target-free extrinsic calibration"};
  app.set_version_flag("--version", std::string(calibkit::kVersion));
  app.require_subcommand(1);

  bool verbose = false;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_option("-c,--config", config, "TOML configuration file");
  app.add_option("--seed", seed, "Seed for all randomness");

  std::string ref_file;
  std::string mov_file;
  std::string output;
  auto* calibrate = app.add_subcommand("calibrate-pair", "Calibrate one sensor pair from two PLY files");
  calibrate->add_option("reference", ref_file, "Reference cloud (PLY)")->required();
  calibrate->add_option("movable", mov_file, "Movable cloud (PLY)")->required();
  calibrate->add_option("-o,--output", output, "Report path (JSON)")->required();

  std::string scenario_dir;
  auto* session = app.add_subcommand("run-session", "Replay a scenario directory");
  session->add_option("scenario", scenario_dir, "Scenario directory")->required();
  session->add_option("-o,--output", output, "Output directory")->required();

  std::string scene_config;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic scenario directory");
  simulate->add_option("scene", scene_config, "Scene configuration (TOML)")->required();
  simulate->add_option("-o,--output", output, "Output directory")->required();

  for (auto* sub : {calibrate, session, simulate}) {
    sub->add_option("-c,--config", config, "TOML configuration file");
    sub->add_option("--seed", seed, "Seed for all randomness");
    sub->add_flag("-v,--verbose", verbose, "Debug logging");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("calibkit");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  if (const char* level = std::getenv("CALIBKIT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }

  const std::optional<fs::path> config_path =
      config ? std::optional<fs::path>(*config) : std::nullopt;
  if (calibrate->parsed()) {
    return cli::cmd_calibrate_pair(ref_file, mov_file, config_path, output, seed);
  }
  if (session->parsed()) {
    return cli::cmd_run_session(scenario_dir, config_path, output, seed);
  }
  if (config_path) {
    spdlog::warn("--config is ignored by simulate");
  }
  return cli::cmd_simulate(scene_config, output, seed);
}
