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

// Entry points of the calibkit tool. Exit codes: 0 success, 1 usage or I/O
// error, 2 calibration-quality failure (a report is still written).

#ifndef CALIBKIT_CLI_COMMANDS_HPP
#define CALIBKIT_CLI_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "calibkit/io/config.hpp"
#include "calibkit/io/ply.hpp"
#include "calibkit/io/report.hpp"
#include "calibkit/io/scenario_dir.hpp"
#include "calibkit/pipeline.hpp"
#include "calibkit/session.hpp"
#include "calibkit/synth.hpp"

namespace calibkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitQuality = 2;

namespace fs = std::filesystem;

namespace detail {

inline io::CalibConfig config_or_default(const std::optional<fs::path>& config_file) {
  return config_file ? io::load_config(*config_file) : io::CalibConfig{};
}

inline io::Json config_echo(const io::CalibConfig& cfg, std::optional<std::uint64_t> seed) {
  io::Json j = io::config_to_json(cfg);
  j["seed"] = seed ? io::Json(*seed) : io::Json(nullptr);
  return j;
}

/// Errors caused by the inputs rather than by the scene.
inline bool is_input_error(ErrorCode c) {
  return c == ErrorCode::kInvalidArgument || c == ErrorCode::kNonMonotonicTime ||
         c == ErrorCode::kParse || c == ErrorCode::kIo;
}

inline void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw CalibError(ErrorCode::kIo,
                       "cannot create '" + path.parent_path().string() + "': " + ec.message());
    }
  }
}

}  // namespace detail

/// Single-pair calibration of two PLY files; writes a JSON report.
inline int cmd_calibrate_pair(const fs::path& ref_file, const fs::path& mov_file,
                              const std::optional<fs::path>& config_file,
                              const fs::path& output_path,
                              std::optional<std::uint64_t> seed = std::nullopt) {
  io::CalibConfig cfg;
  PointCloud ref;
  PointCloud mov;
  try {
    cfg = detail::config_or_default(config_file);
    ref = io::read_ply(ref_file);
    mov = io::read_ply(mov_file);
    detail::ensure_parent(output_path);
  } catch (const CalibError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  io::CalibrationReport report;
  report.pair = {ref.frame_id, mov.frame_id};
  report.config = detail::config_echo(cfg, seed);
  report.num_sites = 1;
  int code = kExitOk;
  try {
    spdlog::info("calibrating {} ({} points) against {} ({} points)", mov.frame_id, mov.size(),
                 ref.frame_id, ref.size());
    const AdjustmentResult r = calibrate_pair(ref, mov, cfg.prior, cfg.pipeline);
    report.params = io::to_boundary(r.params);
    report.sigmas = io::to_boundary(r.sigmas());
    report.covariance = io::to_rows(r.covariance);
    report.num_correspondences = r.num_correspondences;
    report.num_iterations = r.num_iterations;
    report.residual_mean = r.residual_mean;
    report.residual_std = r.residual_std;
    report.done = r.converged;
    report.status = r.converged ? "converged" : "not_converged";
    if (!r.converged) {
      report.message = "ICP did not converge within " + std::to_string(r.num_iterations) +
                       " iterations";
      code = kExitQuality;
    }
  } catch (const CalibError& e) {
    if (detail::is_input_error(e.code())) {
      spdlog::error("{}", e.what());
      return kExitUsage;
    }
    report.params = io::to_boundary(cfg.prior.values);
    report.sigmas = io::to_boundary(cfg.prior.sigmas);
    report.covariance = io::diagonal_covariance(cfg.prior);
    report.status = std::string(to_string(e.code()));
    report.message = e.what();
    code = kExitQuality;
  }
  try {
    io::write_report(output_path, report);
  } catch (const CalibError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  if (code == kExitOk) {
    spdlog::info("converged after {} iterations, {} correspondences", report.num_iterations,
                 report.num_correspondences);
  } else {
    spdlog::warn("calibration failed: {}", report.message);
  }
  return code;
}

/// File names of one pair's outputs inside the output directory.
inline std::string pair_stem(const PairId& pair) { return pair.reference + "-" + pair.movable; }

/// Replays a scenario directory; one session per non-reference sensor.
/// Writes <ref>-<mov>_log.csv and <ref>-<mov>_report.json per pair.
inline int cmd_run_session(const fs::path& scenario_dir,
                           const std::optional<fs::path>& config_file, const fs::path& output_dir,
                           std::optional<std::uint64_t> seed = std::nullopt) {
  io::CalibConfig cfg;
  io::ScenarioDir data;
  try {
    cfg = detail::config_or_default(config_file);
    data = io::read_scenario_dir(scenario_dir);
    fs::create_directories(output_dir);
  } catch (const CalibError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  std::string reference;
  if (cfg.reference_sensor) {
    reference = *cfg.reference_sensor;
  } else if (data.ground_truth) {
    reference = data.ground_truth->reference;
  } else {
    spdlog::error("no reference sensor: set [session] reference_sensor in the config");
    return kExitUsage;
  }
  if (std::find(data.sensors.begin(), data.sensors.end(), reference) == data.sensors.end()) {
    spdlog::error("reference sensor '{}' has no clouds in '{}'", reference, scenario_dir.string());
    return kExitUsage;
  }
  std::vector<PairId> pairs;
  for (const std::string& id : data.sensors) {
    if (id != reference) pairs.push_back({reference, id});
  }
  if (pairs.empty()) {
    spdlog::error("scenario '{}' holds no sensor besides the reference", scenario_dir.string());
    return kExitUsage;
  }

  std::vector<std::future<SessionOutcome>> jobs;
  for (const PairId& pair : pairs) {
    jobs.push_back(std::async(std::launch::async, [&data, &cfg, pair] {
      return run_session(data.scenario, pair, cfg.pipeline, cfg.session, cfg.prior);
    }));
  }
  int code = kExitOk;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    SessionOutcome outcome;
    try {
      outcome = jobs[i].get();
    } catch (const CalibError& e) {
      spdlog::error("{}: {}", pairs[i].movable, e.what());
      code = std::max(code, detail::is_input_error(e.code()) ? kExitUsage : kExitQuality);
      continue;
    }
    io::CalibrationReport report = io::make_session_report(outcome.state, cfg);
    report.config = detail::config_echo(cfg, seed);
    const std::string stem = pair_stem(pairs[i]);
    try {
      io::write_text(output_dir / (stem + "_log.csv"), io::format_csv_log(report.history));
      io::write_report(output_dir / (stem + "_report.json"), report);
    } catch (const CalibError& e) {
      spdlog::error("{}", e.what());
      return kExitUsage;
    }
    std::size_t accepted = 0;
    for (const SiteRecord& s : outcome.state.history) accepted += s.accepted ? 1 : 0;
    spdlog::info("{}: {} static intervals, {} sites accepted, done={}", stem,
                 outcome.static_intervals, accepted, outcome.state.done);
    if (!outcome.state.done) code = std::max(code, kExitQuality);
  }
  return code;
}

/// Materializes a simulated scenario directory. A given seed overrides the
/// one in the scene config.
inline int cmd_simulate(const fs::path& scene_config, const fs::path& output_dir,
                        std::optional<std::uint64_t> seed = std::nullopt) {
  try {
    io::SimulationConfig sc = io::load_simulation_config(scene_config);
    if (seed) sc.spec.seed = *seed;
    const Simulation sim = simulate(sc.spec);
    io::write_scenario_dir(output_dir, sim);
    spdlog::info("wrote scenario '{}' with {} sites and {} sensors to {}", sc.spec.name,
                 sc.spec.sites.size(), sc.spec.sensors.size(), output_dir.string());
  } catch (const CalibError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace calibkit::cli

#endif  // CALIBKIT_CLI_COMMANDS_HPP
