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

// Calibration report (JSON), per-site log (CSV) and ground-truth file (TOML).
// Parameters and sigmas are written in degrees and meters; the covariance
// stays in SI units (rad, m). Non-finite numbers are written as JSON null.

#ifndef CALIBKIT_IO_REPORT_HPP
#define CALIBKIT_IO_REPORT_HPP

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "calibkit/core/transform.hpp"
#include "calibkit/io/config.hpp"
#include "calibkit/io/ply.hpp"
#include "calibkit/session.hpp"
#include "calibkit/version.hpp"

namespace calibkit::io {

using Json = nlohmann::ordered_json;

struct ReportSite {
  std::size_t site = 0;
  double timestamp = 0.0;
  bool accepted = false;
  std::string status;
  std::string message;
  bool has_estimate = false;
  std::size_t num_correspondences = 0;
  std::size_t num_iterations = 0;
  double residual_mean = 0.0;
  double residual_std = 0.0;
  BoundaryParams params{};
  BoundaryParams sigmas{};

  bool operator==(const ReportSite&) const = default;
};

struct CalibrationReport {
  std::string tool = "calibkit";
  std::string version = kVersion;
  std::string rotation_convention = kRotationConvention;
  PairId pair;
  std::string status;  // "converged", "not_converged", "done", "not_done" or an error code
  std::string message;
  bool done = false;
  std::size_t num_sites = 0;
  std::size_t num_correspondences = 0;
  std::size_t num_iterations = 0;
  double residual_mean = 0.0;
  double residual_std = 0.0;
  BoundaryParams params{};
  BoundaryParams sigmas{};
  std::array<std::array<double, 6>, 6> covariance{};  // SI units
  std::vector<ReportSite> history;
  Json config;

  bool operator==(const CalibrationReport&) const = default;
};

inline ReportSite to_report_site(const SiteRecord& r) {
  ReportSite s;
  s.site = r.site;
  s.timestamp = r.timestamp;
  s.accepted = r.accepted;
  s.status = r.status;
  s.message = r.message;
  s.has_estimate = r.has_estimate;
  s.num_correspondences = r.num_correspondences;
  s.num_iterations = r.num_iterations;
  s.residual_mean = r.residual_mean;
  s.residual_std = r.residual_std;
  s.params = to_boundary(r.params);
  s.sigmas = to_boundary(r.sigmas);
  return s;
}

/// Covariance of a prior with independent parameters.
inline std::array<std::array<double, 6>, 6> diagonal_covariance(const ParamPrior& p) {
  std::array<std::array<double, 6>, 6> c{};
  for (std::size_t i = 0; i < 6; ++i) c[i][i] = p.sigmas[i] * p.sigmas[i];
  return c;
}

inline std::array<std::array<double, 6>, 6> to_rows(const Mat6& m) {
  std::array<std::array<double, 6>, 6> c{};
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      c[i][j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return c;
}

/// Report of a finished session. The covariance is that of the last
/// accepted site (the prior's diagonal when no site was accepted).
inline CalibrationReport make_session_report(const CalibrationState& state,
                                             const CalibConfig& cfg) {
  CalibrationReport r;
  r.pair = state.pair_id;
  r.done = state.done;
  r.status = state.done ? "done" : "not_done";
  r.num_sites = state.site_counter;
  r.params = to_boundary(state.current.values);
  r.sigmas = to_boundary(state.current.sigmas);
  r.covariance = diagonal_covariance(state.current);
  for (const SiteRecord& s : state.history) {
    r.history.push_back(to_report_site(s));
    if (s.accepted) {
      r.num_correspondences = s.num_correspondences;
      r.num_iterations = s.num_iterations;
      r.residual_mean = s.residual_mean;
      r.residual_std = s.residual_std;
      r.covariance = to_rows(s.covariance);
    }
  }
  if (state.history.empty()) {
    r.message = "no static interval triggered a calibration";
  } else if (!state.done) {
    r.message = "stop criterion not reached";
  }
  r.config = config_to_json(cfg);
  return r;
}

namespace detail {

inline Json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline double number_of(const Json& j) {
  if (j.is_null()) return kInf;
  return j.get<double>();
}

inline Json params_json(const BoundaryParams& b) {
  Json j = Json::object();
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string unit = is_angle_index(i) ? "_deg" : "_m";
    j[std::string(kParamNames[i]) + unit] = number(b[i]);
  }
  return j;
}

inline BoundaryParams params_of(const Json& j) {
  BoundaryParams b{};
  for (std::size_t i = 0; i < 6; ++i) {
    const std::string unit = is_angle_index(i) ? "_deg" : "_m";
    b[i] = number_of(j.at(std::string(kParamNames[i]) + unit));
  }
  return b;
}

}  // namespace detail

inline Json report_to_json(const CalibrationReport& r) {
  using detail::number;
  Json j;
  j["tool"] = r.tool;
  j["version"] = r.version;
  j["rotation_convention"] = r.rotation_convention;
  j["pair"] = {{"reference", r.pair.reference}, {"movable", r.pair.movable}};
  j["status"] = r.status;
  j["message"] = r.message;
  j["done"] = r.done;
  j["num_sites"] = r.num_sites;
  j["num_correspondences"] = r.num_correspondences;
  j["num_iterations"] = r.num_iterations;
  j["residual_mean"] = number(r.residual_mean);
  j["residual_std"] = number(r.residual_std);
  j["params"] = detail::params_json(r.params);
  j["sigmas"] = detail::params_json(r.sigmas);
  Json cov = Json::array();
  for (const auto& row : r.covariance) {
    Json jr = Json::array();
    for (double v : row) jr.push_back(number(v));
    cov.push_back(jr);
  }
  j["covariance"] = cov;
  Json hist = Json::array();
  for (const ReportSite& s : r.history) {
    hist.push_back({{"site", s.site},
                    {"timestamp", number(s.timestamp)},
                    {"accepted", s.accepted},
                    {"status", s.status},
                    {"message", s.message},
                    {"has_estimate", s.has_estimate},
                    {"num_correspondences", s.num_correspondences},
                    {"num_iterations", s.num_iterations},
                    {"residual_mean", number(s.residual_mean)},
                    {"residual_std", number(s.residual_std)},
                    {"params", detail::params_json(s.params)},
                    {"sigmas", detail::params_json(s.sigmas)}});
  }
  j["history"] = hist;
  j["config"] = r.config;
  return j;
}

inline CalibrationReport report_from_json(const Json& j) {
  using detail::number_of;
  try {
    CalibrationReport r;
    r.tool = j.at("tool").get<std::string>();
    r.version = j.at("version").get<std::string>();
    r.rotation_convention = j.at("rotation_convention").get<std::string>();
    r.pair.reference = j.at("pair").at("reference").get<std::string>();
    r.pair.movable = j.at("pair").at("movable").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.message = j.at("message").get<std::string>();
    r.done = j.at("done").get<bool>();
    r.num_sites = j.at("num_sites").get<std::size_t>();
    r.num_correspondences = j.at("num_correspondences").get<std::size_t>();
    r.num_iterations = j.at("num_iterations").get<std::size_t>();
    r.residual_mean = number_of(j.at("residual_mean"));
    r.residual_std = number_of(j.at("residual_std"));
    r.params = detail::params_of(j.at("params"));
    r.sigmas = detail::params_of(j.at("sigmas"));
    const Json& cov = j.at("covariance");
    if (cov.size() != 6) throw CalibError(ErrorCode::kParse, "covariance must be 6x6");
    for (std::size_t a = 0; a < 6; ++a) {
      if (cov[a].size() != 6) throw CalibError(ErrorCode::kParse, "covariance must be 6x6");
      for (std::size_t b = 0; b < 6; ++b) r.covariance[a][b] = number_of(cov[a][b]);
    }
    for (const Json& h : j.at("history")) {
      ReportSite s;
      s.site = h.at("site").get<std::size_t>();
      s.timestamp = number_of(h.at("timestamp"));
      s.accepted = h.at("accepted").get<bool>();
      s.status = h.at("status").get<std::string>();
      s.message = h.at("message").get<std::string>();
      s.has_estimate = h.at("has_estimate").get<bool>();
      s.num_correspondences = h.at("num_correspondences").get<std::size_t>();
      s.num_iterations = h.at("num_iterations").get<std::size_t>();
      s.residual_mean = number_of(h.at("residual_mean"));
      s.residual_std = number_of(h.at("residual_std"));
      s.params = detail::params_of(h.at("params"));
      s.sigmas = detail::params_of(h.at("sigmas"));
      r.history.push_back(std::move(s));
    }
    r.config = j.at("config");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw CalibError(ErrorCode::kParse, std::string("report: ") + e.what());
  }
}

inline std::string format_report(const CalibrationReport& r) {
  return report_to_json(r).dump(2) + "\n";
}

inline CalibrationReport parse_report(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CalibError(ErrorCode::kParse, std::string("report: ") + e.what());
  }
  return report_from_json(j);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CalibError(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw CalibError(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

inline void write_report(const std::filesystem::path& path, const CalibrationReport& r) {
  write_text(path, format_report(r));
}

inline CalibrationReport read_report(const std::filesystem::path& path) {
  return parse_report(detail::read_text(path));
}

// ---------------------------------------------------------------------------
// Per-site CSV log

inline std::string csv_header() {
  std::string h = "site,timestamp,n_correspondences,residual_mean,residual_std";
  for (std::size_t i = 0; i < 6; ++i) {
    h += "," + std::string(kParamNames[i]) + (is_angle_index(i) ? "_deg" : "_m");
  }
  for (std::size_t i = 0; i < 6; ++i) {
    h += ",sigma_" + std::string(kParamNames[i]) + (is_angle_index(i) ? "_deg" : "_m");
  }
  return h + ",accepted,status\n";
}

/// One row per site. Sites without an estimate leave the correspondence
/// count and residual columns empty and repeat the calibration in force.
inline std::string csv_row(const ReportSite& s) {
  auto num = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    return detail::format_double(v);
  };
  std::string row = std::to_string(s.site) + "," + num(s.timestamp);
  if (s.has_estimate) {
    row += "," + std::to_string(s.num_correspondences) + "," + num(s.residual_mean) + "," +
           num(s.residual_std);
  } else {
    row += ",,,";
  }
  for (double v : s.params) row += "," + num(v);
  for (double v : s.sigmas) row += "," + num(v);
  row += std::string(",") + (s.accepted ? "1" : "0") + "," + s.status + "\n";
  return row;
}

inline std::string format_csv_log(const std::vector<ReportSite>& sites) {
  std::string out = csv_header();
  for (const ReportSite& s : sites) out += csv_row(s);
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth

struct GroundTruth {
  std::string reference;
  std::string rotation_convention = kRotationConvention;
  std::map<std::string, BoundaryParams> extrinsics;  // movable -> reference, deg / m

  bool operator==(const GroundTruth&) const = default;
};

inline GroundTruth ground_truth_of(const Simulation& sim) {
  GroundTruth gt;
  gt.reference = sim.reference;
  for (const auto& [id, p] : sim.ground_truth) gt.extrinsics[id] = to_boundary(p);
  return gt;
}

inline std::string format_ground_truth(const GroundTruth& gt) {
  auto quoted = [](const std::string& s) {
    toml::value<std::string> v(s);
    std::ostringstream os;
    os << v;
    return os.str();
  };
  std::string out = "# extrinsics map movable sensor coordinates into the reference frame\n";
  out += "reference = " + quoted(gt.reference) + "\n";
  out += "rotation_convention = " + quoted(gt.rotation_convention) + "\n";
  for (const auto& [id, b] : gt.extrinsics) {
    out += "\n[extrinsics." + quoted(id) + "]\n";
    for (std::size_t i = 0; i < 6; ++i) {
      out += std::string(kParamNames[i]) + (is_angle_index(i) ? "_deg" : "_m") + " = " +
             detail::format_double(b[i]) + "\n";
    }
  }
  return out;
}

inline GroundTruth parse_ground_truth(const std::string& text,
                                      const std::string& source = "<ground_truth>") {
  const toml::table table = detail::parse_toml(text, source);
  detail::TableReader root(&table, "", source);
  GroundTruth gt;
  auto ref = root.get<std::string>("reference");
  if (!ref) root.fail("reference", "is required");
  gt.reference = *ref;
  root.read("rotation_convention", gt.rotation_convention);
  if (const toml::table* ex = root.subtable("extrinsics")) {
    for (const auto& [key, node] : *ex) {
      const std::string id(key.str());
      if (!node.is_table()) root.fail("extrinsics." + id, "must be a table");
      detail::TableReader t(node.as_table(), "extrinsics." + id, source);
      BoundaryParams b{};
      for (std::size_t i = 0; i < 6; ++i) {
        const std::string k = std::string(kParamNames[i]) + (is_angle_index(i) ? "_deg" : "_m");
        auto v = t.get<double>(k);
        if (!v) t.fail(k, "is required");
        b[i] = *v;
      }
      t.reject_unknown();
      gt.extrinsics[id] = b;
    }
  }
  root.reject_unknown();
  return gt;
}

inline GroundTruth read_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(detail::read_text(path), path.string());
}

}  // namespace calibkit::io

#endif  // CALIBKIT_IO_REPORT_HPP
