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

// TOML configuration. Angles are given in degrees (keys ending in _deg) and
// converted to radians here; everything past this boundary is SI.
//
//   [features]  k_neighbors, max_radius
//   [filter]    min_range, max_range, min_intensity, voxel_size, min_planarity
//   [match]     num_selected, max_distance_factor, max_normal_angle_deg,
//               max_iterations, convergence_delta_angle_deg,
//               convergence_delta_translation, min_correspondences
//   [session]   reference_sensor, static_linear_threshold,
//               static_angular_threshold_deg, trigger_delay,
//               accumulation_duration, stop_sigma_angles_deg,
//               stop_sigma_translation, update_gate_factor, hysteresis_factor
//   [prior]     values, sigmas (6 entries: 3 angles in deg, 3 translations in
//               m; sigma "inf" leaves a parameter unconstrained), estimate
//
// A simulation file additionally holds name, seed, [motion], [[sensors]] and
// [[sites]] with nested [[sites.planes]].

#ifndef CALIBKIT_IO_CONFIG_HPP
#define CALIBKIT_IO_CONFIG_HPP

#include <array>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "calibkit/pipeline.hpp"
#include "calibkit/session.hpp"
#include "calibkit/synth.hpp"

namespace calibkit::io {

/// Parameter vector at the file boundary: angles in degrees, translations in
/// meters.
using BoundaryParams = std::array<double, 6>;

inline BoundaryParams to_boundary(const std::array<double, 6>& si) {
  BoundaryParams out = si;
  for (std::size_t i = 0; i < 3; ++i) out[i] = rad2deg(si[i]);
  return out;
}

inline BoundaryParams to_boundary(const ExtrinsicParams& p) {
  const Vec6 v = p.to_vector();
  return to_boundary(std::array<double, 6>{v[0], v[1], v[2], v[3], v[4], v[5]});
}

inline std::array<double, 6> from_boundary(const BoundaryParams& b) {
  std::array<double, 6> out = b;
  for (std::size_t i = 0; i < 3; ++i) out[i] = deg2rad(b[i]);
  return out;
}

inline ExtrinsicParams params_from_boundary(const BoundaryParams& b) {
  const auto si = from_boundary(b);
  return ExtrinsicParams::make(si[0], si[1], si[2], si[3], si[4], si[5]);
}

struct CalibConfig {
  PipelineConfig pipeline;
  SessionConfig session;
  ParamPrior prior;
  std::optional<std::string> reference_sensor;

  void validate() const {
    pipeline.validate();
    session.validate();
    prior.validate();
  }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& source, const std::string& what) {
  throw CalibError(ErrorCode::kParse, source + ": " + what);
}

/// Typed access to one table with a check for unknown keys.
class TableReader {
 public:
  TableReader(const toml::table* table, std::string path, std::string source)
      : table_(table), path_(std::move(path)), source_(std::move(source)) {}

  bool present() const { return table_ != nullptr; }

  void mark(const std::string& key) { seen_.insert(key); }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    seen_.insert(key);
    if (table_ == nullptr) return std::nullopt;
    const toml::node* node = table_->get(key);
    if (node == nullptr) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = node->value_exact<double>()) return *v;
      if (auto v = node->value_exact<std::int64_t>()) return static_cast<double>(*v);
    } else if constexpr (std::is_same_v<T, std::size_t>) {
      if (auto v = node->value_exact<std::int64_t>(); v && *v >= 0) {
        return static_cast<std::size_t>(*v);
      }
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (auto v = node->value_exact<std::int64_t>(); v && *v >= 0) {
        return static_cast<std::uint64_t>(*v);
      }
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node->value_exact<bool>()) return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value_exact<std::string>()) return *v;
    }
    fail(key, "has the wrong type");
  }

  template <typename T>
  void read(const std::string& key, T& dst) {
    if (auto v = get<T>(key)) dst = *v;
  }

  void read_deg(const std::string& key, double& dst_rad) {
    if (auto v = get<double>(key)) dst_rad = deg2rad(*v);
  }

  template <typename T, std::size_t N>
  std::optional<std::array<T, N>> get_array(const std::string& key) {
    seen_.insert(key);
    if (table_ == nullptr) return std::nullopt;
    const toml::node* node = table_->get(key);
    if (node == nullptr) return std::nullopt;
    const toml::array* arr = node->as_array();
    if (arr == nullptr || arr->size() != N) {
      fail(key, "must be an array of " + std::to_string(N) + " entries");
    }
    std::array<T, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
      const toml::node& e = *arr->get(i);
      if constexpr (std::is_same_v<T, double>) {
        if (auto v = e.value_exact<double>()) out[i] = *v;
        else if (auto w = e.value_exact<std::int64_t>()) out[i] = static_cast<double>(*w);
        else fail(key, "entry " + std::to_string(i) + " is not a number");
      } else {
        if (auto v = e.value_exact<T>()) out[i] = *v;
        else fail(key, "entry " + std::to_string(i) + " has the wrong type");
      }
    }
    return out;
  }

  const toml::table* subtable(const std::string& key) {
    seen_.insert(key);
    if (table_ == nullptr) return nullptr;
    const toml::node* node = table_->get(key);
    if (node == nullptr) return nullptr;
    if (!node->is_table()) fail(key, "must be a table");
    return node->as_table();
  }

  const toml::array* array_of_tables(const std::string& key) {
    seen_.insert(key);
    if (table_ == nullptr) return nullptr;
    const toml::node* node = table_->get(key);
    if (node == nullptr) return nullptr;
    if (!node->is_array_of_tables()) fail(key, "must be an array of tables");
    return node->as_array();
  }

  void reject_unknown() const {
    if (table_ == nullptr) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.count(std::string(k.str()))) fail(std::string(k.str()), "is not a known key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    config_error(source_, (path_.empty() ? key : path_ + "." + key) + " " + what);
  }

 private:
  const toml::table* table_;
  std::string path_;
  std::string source_;
  std::set<std::string> seen_;
};

inline toml::table parse_toml(const std::string& text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    config_error(source, "line " + std::to_string(b.line) + ", column " +
                             std::to_string(b.column) + ": " + std::string(e.description()));
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CalibError(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  }
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void read_calib_sections(TableReader& root, CalibConfig& cfg, const std::string& source) {
  {
    TableReader t(root.subtable("features"), "features", source);
    t.read("k_neighbors", cfg.pipeline.features.k_neighbors);
    if (auto v = t.get<double>("max_radius")) cfg.pipeline.features.max_radius = *v;
    t.reject_unknown();
  }
  {
    TableReader t(root.subtable("filter"), "filter", source);
    FilterConfig& f = cfg.pipeline.filter;
    t.read("min_range", f.min_range);
    t.read("max_range", f.max_range);
    if (auto v = t.get<double>("min_intensity")) f.min_intensity = *v;
    t.read("voxel_size", f.voxel_size);
    t.read("min_planarity", f.min_planarity);
    t.reject_unknown();
  }
  {
    TableReader t(root.subtable("match"), "match", source);
    MatchConfig& m = cfg.pipeline.match;
    t.read("num_selected", m.num_selected);
    t.read("max_distance_factor", m.max_distance_factor);
    t.read_deg("max_normal_angle_deg", m.max_normal_angle);
    t.read("max_iterations", m.max_iterations);
    t.read_deg("convergence_delta_angle_deg", m.convergence_delta_angle);
    t.read("convergence_delta_translation", m.convergence_delta_translation);
    t.read("min_correspondences", m.min_correspondences);
    t.reject_unknown();
  }
  {
    TableReader t(root.subtable("session"), "session", source);
    SessionConfig& s = cfg.session;
    if (auto v = t.get<std::string>("reference_sensor")) cfg.reference_sensor = *v;
    t.read("static_linear_threshold", s.static_linear_threshold);
    t.read_deg("static_angular_threshold_deg", s.static_angular_threshold);
    t.read("trigger_delay", s.trigger_delay);
    t.read("accumulation_duration", s.accumulation_duration);
    t.read_deg("stop_sigma_angles_deg", s.stop_sigma_angles);
    t.read("stop_sigma_translation", s.stop_sigma_translation);
    t.read("update_gate_factor", s.update_gate_factor);
    t.read("hysteresis_factor", s.hysteresis_factor);
    t.reject_unknown();
  }
  {
    TableReader t(root.subtable("prior"), "prior", source);
    ParamPrior& p = cfg.prior;
    if (auto v = t.get_array<double, 6>("values")) p.values = params_from_boundary(*v);
    if (auto v = t.get_array<double, 6>("sigmas")) p.sigmas = from_boundary(*v);
    if (auto v = t.get_array<bool, 6>("estimate")) p.estimate_mask = *v;
    t.reject_unknown();
  }
}

inline Vec3 vec3_of(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

}  // namespace detail

inline CalibConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  const toml::table table = detail::parse_toml(text, source);
  detail::TableReader root(&table, "", source);
  CalibConfig cfg;
  detail::read_calib_sections(root, cfg, source);
  // a simulation file doubles as calibration config
  for (const char* key : {"name", "seed", "motion", "sensors", "sites"}) root.mark(key);
  root.reject_unknown();
  try {
    cfg.validate();
  } catch (const CalibError& e) {
    detail::config_error(source, e.what());
  }
  return cfg;
}

inline CalibConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::read_text(path), path.string());
}

/// Configuration echo in boundary units, embedded in reports.
inline nlohmann::ordered_json config_to_json(const CalibConfig& cfg) {
  auto num_or_null = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  const auto& f = cfg.pipeline.features;
  const auto& fl = cfg.pipeline.filter;
  const auto& m = cfg.pipeline.match;
  const auto& s = cfg.session;
  nlohmann::ordered_json j;
  j["features"] = {{"k_neighbors", f.k_neighbors},
                   {"max_radius", f.max_radius ? nlohmann::ordered_json(*f.max_radius) : nlohmann::ordered_json(nullptr)}};
  j["filter"] = {{"min_range", fl.min_range},
                 {"max_range", fl.max_range},
                 {"min_intensity", fl.min_intensity ? nlohmann::ordered_json(*fl.min_intensity)
                                                    : nlohmann::ordered_json(nullptr)},
                 {"voxel_size", fl.voxel_size},
                 {"min_planarity", fl.min_planarity}};
  j["match"] = {{"num_selected", m.num_selected},
                {"max_distance_factor", m.max_distance_factor},
                {"max_normal_angle_deg", rad2deg(m.max_normal_angle)},
                {"max_iterations", m.max_iterations},
                {"convergence_delta_angle_deg", rad2deg(m.convergence_delta_angle)},
                {"convergence_delta_translation", m.convergence_delta_translation},
                {"min_correspondences", m.min_correspondences}};
  j["session"] = {
      {"reference_sensor", cfg.reference_sensor ? nlohmann::ordered_json(*cfg.reference_sensor)
                                                : nlohmann::ordered_json(nullptr)},
      {"static_linear_threshold", s.static_linear_threshold},
      {"static_angular_threshold_deg", rad2deg(s.static_angular_threshold)},
      {"trigger_delay", s.trigger_delay},
      {"accumulation_duration", s.accumulation_duration},
      {"stop_sigma_angles_deg", rad2deg(s.stop_sigma_angles)},
      {"stop_sigma_translation", s.stop_sigma_translation},
      {"update_gate_factor", s.update_gate_factor},
      {"hysteresis_factor", s.hysteresis_factor}};
  nlohmann::ordered_json values = nlohmann::ordered_json::array();
  nlohmann::ordered_json sigmas = nlohmann::ordered_json::array();
  const BoundaryParams v = to_boundary(cfg.prior.values);
  const BoundaryParams sg = to_boundary(cfg.prior.sigmas);
  for (std::size_t i = 0; i < 6; ++i) {
    values.push_back(v[i]);
    sigmas.push_back(num_or_null(sg[i]));
  }
  j["prior"] = {{"values", values}, {"sigmas", sigmas}, {"estimate", cfg.prior.estimate_mask}};
  return j;
}

/// Simulation description plus the calibration settings it may carry.
struct SimulationConfig {
  SimulationSpec spec;
  CalibConfig calib;
};

inline SimulationConfig parse_simulation_config(const std::string& text,
                                                const std::string& source = "<scene>") {
  const toml::table table = detail::parse_toml(text, source);
  detail::TableReader root(&table, "", source);
  SimulationConfig out;
  SimulationSpec& spec = out.spec;
  root.read("name", spec.name);
  root.read("seed", spec.seed);
  detail::read_calib_sections(root, out.calib, source);
  {
    detail::TableReader t(root.subtable("motion"), "motion", source);
    MotionSpec& m = spec.motion;
    t.read("sample_rate", m.sample_rate);
    t.read("drive_duration", m.drive_duration);
    t.read("static_duration", m.static_duration);
    t.read("linear_speed", m.linear_speed);
    t.read_deg("angular_speed_deg", m.angular_speed);
    if (const toml::node* n = table["motion"]["short_stops"].node()) {
      const toml::array* arr = n->as_array();
      if (arr == nullptr) t.fail("short_stops", "must be an array");
      for (const toml::node& e : *arr) {
        auto v = e.value_exact<std::int64_t>();
        if (!v || *v < 1) t.fail("short_stops", "entries must be site numbers >= 1");
        m.short_stops.push_back(static_cast<std::size_t>(*v - 1));
      }
    }
    t.mark("short_stops");
    t.read("short_stop_duration", m.short_stop_duration);
    t.reject_unknown();
  }
  if (const toml::array* sensors = root.array_of_tables("sensors")) {
    for (std::size_t i = 0; i < sensors->size(); ++i) {
      const std::string path = "sensors[" + std::to_string(i) + "]";
      detail::TableReader t(sensors->get(i)->as_table(), path, source);
      SensorSpec s;
      auto id = t.get<std::string>("id");
      if (!id || id->empty()) t.fail("id", "is required");
      s.id = *id;
      if (auto pose = t.get_array<double, 6>("pose")) s.pose = params_from_boundary(*pose);
      t.read("noise_sigma", s.noise_sigma);
      t.read("max_range", s.max_range);
      t.reject_unknown();
      spec.sensors.push_back(std::move(s));
    }
  }
  if (const toml::array* sites = root.array_of_tables("sites")) {
    for (std::size_t i = 0; i < sites->size(); ++i) {
      const std::string path = "sites[" + std::to_string(i) + "]";
      detail::TableReader t(sites->get(i)->as_table(), path, source);
      SceneSpec scene;
      t.read("clutter_fraction", scene.clutter_fraction);
      if (const toml::array* planes = t.array_of_tables("planes")) {
        for (std::size_t k = 0; k < planes->size(); ++k) {
          detail::TableReader pt(planes->get(k)->as_table(),
                                 path + ".planes[" + std::to_string(k) + "]", source);
          PlaneSpec plane;
          if (auto c = pt.get_array<double, 3>("center")) plane.center = detail::vec3_of(*c);
          if (auto n = pt.get_array<double, 3>("normal")) plane.normal = detail::vec3_of(*n);
          if (auto e = pt.get_array<double, 2>("extent")) plane.extent = *e;
          pt.read("density", plane.density);
          pt.reject_unknown();
          if (plane.normal.norm() > 0.0) plane.normal.normalize();
          scene.planes.push_back(plane);
        }
      }
      t.reject_unknown();
      spec.sites.push_back(std::move(scene));
    }
  }
  root.reject_unknown();
  try {
    spec.validate();
    out.calib.validate();
  } catch (const CalibError& e) {
    detail::config_error(source, e.what());
  }
  return out;
}

inline SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  return parse_simulation_config(detail::read_text(path), path.string());
}

}  // namespace calibkit::io

#endif  // CALIBKIT_IO_CONFIG_HPP
