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

// Scenario directory layout:
//
//   twist.csv            timestamp,linear,angular (s, m/s, rad/s)
//   site_<N>/<id>.ply    one cloud per sensor, N = 1, 2, ... in drive order
//   ground_truth.toml    optional
//
// Each site cloud is one message at the start of its accumulation window.

#ifndef CALIBKIT_IO_SCENARIO_DIR_HPP
#define CALIBKIT_IO_SCENARIO_DIR_HPP

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "calibkit/io/ply.hpp"
#include "calibkit/io/report.hpp"
#include "calibkit/scenario.hpp"
#include "calibkit/synth.hpp"

namespace calibkit::io {

struct ScenarioDir {
  Scenario scenario;
  std::vector<std::string> sensors;  // sorted ids seen in any site
  std::optional<GroundTruth> ground_truth;
};

inline std::string format_twist_csv(const std::vector<TwistSample>& twist) {
  std::string out = "timestamp,linear,angular\n";
  for (const TwistSample& s : twist) {
    out += detail::format_double(s.timestamp) + "," + detail::format_double(s.linear_speed) + "," +
           detail::format_double(s.angular_speed) + "\n";
  }
  return out;
}

inline std::vector<TwistSample> parse_twist_csv(const std::string& text,
                                                const std::string& source = "twist.csv") {
  std::vector<TwistSample> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1 && line.find_first_of("0123456789") != 0 && line[0] != '-' &&
        line[0] != '.') {
      continue;  // header
    }
    std::array<double, 3> v{};
    std::size_t field = 0;
    std::size_t start = 0;
    for (; field < 3; ++field) {
      std::size_t comma = line.find(',', start);
      if (field < 2 && comma == std::string_view::npos) break;
      if (field == 2) comma = line.size();
      const auto parsed = detail::parse_double(line.substr(start, comma - start));
      if (!parsed) break;
      v[field] = *parsed;
      start = comma + 1;
    }
    if (field != 3) {
      throw CalibError(ErrorCode::kParse,
                       source + ":line " + std::to_string(line_no) +
                           ": expected 'timestamp,linear,angular'");
    }
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

/// Site directories ordered by N; other entries are ignored.
inline std::vector<std::pair<std::size_t, std::filesystem::path>> site_directories(
    const std::filesystem::path& dir) {
  std::vector<std::pair<std::size_t, std::filesystem::path>> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("site_", 0) != 0) continue;
    std::size_t n = 0;
    const char* first = name.data() + 5;
    const char* last = name.data() + name.size();
    const auto r = std::from_chars(first, last, n);
    if (r.ec != std::errc() || r.ptr != last || first == last) continue;
    out.emplace_back(n, entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline ScenarioDir read_scenario_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw CalibError(ErrorCode::kIo, "scenario directory '" + dir.string() + "' not found");
  }
  const fs::path twist_path = dir / "twist.csv";
  if (!fs::exists(twist_path)) {
    throw CalibError(ErrorCode::kIo, "scenario '" + dir.string() + "' has no twist.csv");
  }
  ScenarioDir out;
  out.scenario.twist = parse_twist_csv(detail::read_text(twist_path), twist_path.string());
  const auto sites = site_directories(dir);
  if (sites.empty()) {
    throw CalibError(ErrorCode::kIo, "scenario '" + dir.string() + "' has no site_<N> directories");
  }
  std::set<std::string> sensors;
  for (const auto& [n, path] : sites) {
    SiteData site;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ply") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      PointCloud cloud = read_ply(f);
      const std::string id = f.stem().string();
      cloud.frame_id = id;
      sensors.insert(id);
      site.messages[id].push_back({0.0, std::move(cloud)});
    }
    out.scenario.sites.push_back(std::move(site));
  }
  out.sensors.assign(sensors.begin(), sensors.end());
  if (fs::exists(dir / "ground_truth.toml")) {
    out.ground_truth = read_ground_truth(dir / "ground_truth.toml");
  }
  return out;
}

inline void write_scenario_dir(const std::filesystem::path& dir, const Simulation& sim) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw CalibError(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  }
  write_text(dir / "twist.csv", format_twist_csv(sim.scenario.twist));
  for (std::size_t s = 0; s < sim.scenario.sites.size(); ++s) {
    const fs::path site_dir = dir / ("site_" + std::to_string(s + 1));
    fs::create_directories(site_dir, ec);
    if (ec) {
      throw CalibError(ErrorCode::kIo, "cannot create '" + site_dir.string() + "': " + ec.message());
    }
    for (const auto& [id, messages] : sim.scenario.sites[s].messages) {
      PointCloud merged;
      merged.frame_id = id;
      for (const CloudMessage& m : messages) {
        merged.points.insert(merged.points.end(), m.cloud.points.begin(), m.cloud.points.end());
        merged.acquired_at_site = m.cloud.acquired_at_site;
      }
      write_ply(site_dir / (id + ".ply"), merged);
    }
  }
  write_text(dir / "ground_truth.toml", format_ground_truth(ground_truth_of(sim)));
}

}  // namespace calibkit::io

#endif  // CALIBKIT_IO_SCENARIO_DIR_HPP
