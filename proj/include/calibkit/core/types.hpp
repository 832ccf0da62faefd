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

#ifndef CALIBKIT_CORE_TYPES_HPP
#define CALIBKIT_CORE_TYPES_HPP

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "calibkit/core/error.hpp"

namespace calibkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  if (a > -kPi && a <= kPi) {
    return a;
  }
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) {
    r += 2.0 * kPi;
  }
  return r;
}

struct Point {
  Vec3 position = Vec3::Zero();
  std::optional<double> intensity;
  std::optional<Vec3> normal;  // unit length when present
  std::optional<double> planarity;  // in [0, 1] when present
};

/// Which optional attributes the points of a cloud carry.
struct PointSchema {
  bool intensity = false;
  bool normal = false;
  bool planarity = false;

  bool operator==(const PointSchema&) const = default;
};

inline PointSchema schema_of(const Point& p) {
  return {p.intensity.has_value(), p.normal.has_value(), p.planarity.has_value()};
}

struct PointCloud {
  std::vector<Point> points;
  std::string frame_id;
  std::optional<std::size_t> acquired_at_site;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Schema of the first point; meaningful once validate() has passed.
  PointSchema schema() const { return points.empty() ? PointSchema{} : schema_of(points.front()); }
  bool has_intensity() const { return schema().intensity; }
  bool has_normals() const { return schema().normal; }
  bool has_planarity() const { return schema().planarity; }

  /// Throws kInvalidArgument if points disagree on their attribute schema,
  /// carry a non-unit normal, or an out-of-range planarity.
  void validate() const {
    const PointSchema expected = schema();
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Point& p = points[i];
      if (!(schema_of(p) == expected)) {
        throw CalibError(ErrorCode::kInvalidArgument,
                         "point " + std::to_string(i) + " has a different attribute schema");
      }
      if (p.normal && std::abs(p.normal->norm() - 1.0) > 1e-9) {
        throw CalibError(ErrorCode::kInvalidArgument,
                         "point " + std::to_string(i) + " has a non-unit normal");
      }
      if (p.planarity && !(*p.planarity >= 0.0 && *p.planarity <= 1.0)) {
        throw CalibError(ErrorCode::kInvalidArgument,
                         "point " + std::to_string(i) + " has planarity outside [0,1]");
      }
    }
  }
};

/// Extrinsic calibration parameters. Rotation R = Rz(alpha_z) * Ry(alpha_y) *
/// Rx(alpha_x) acting on column vectors; the transform maps movable-sensor
/// coordinates into the reference-sensor frame: x_ref = R * x_mov + t.
struct ExtrinsicParams {
  double alpha_x = 0.0;
  double alpha_y = 0.0;
  double alpha_z = 0.0;
  double t_x = 0.0;
  double t_y = 0.0;
  double t_z = 0.0;

  static ExtrinsicParams make(double ax, double ay, double az, double tx, double ty, double tz) {
    return {normalize_angle(ax), normalize_angle(ay), normalize_angle(az), tx, ty, tz};
  }

  static ExtrinsicParams from_vector(const Vec6& v) {
    return make(v[0], v[1], v[2], v[3], v[4], v[5]);
  }

  Vec6 to_vector() const {
    Vec6 v;
    v << alpha_x, alpha_y, alpha_z, t_x, t_y, t_z;
    return v;
  }

  Vec3 translation() const { return {t_x, t_y, t_z}; }

  double operator[](std::size_t i) const { return to_vector()[static_cast<Eigen::Index>(i)]; }

  bool operator==(const ExtrinsicParams&) const = default;
};

inline constexpr std::array<const char*, 6> kParamNames = {"alpha_x", "alpha_y", "alpha_z",
                                                          "t_x",     "t_y",     "t_z"};

inline constexpr bool is_angle_index(std::size_t i) { return i < 3; }

/// A priori observation of the parameters. A sigma of +inf means the
/// parameter has no prior observation; estimate_mask[i] == false holds the
/// parameter fixed at values[i].
struct ParamPrior {
  ExtrinsicParams values;
  std::array<double, 6> sigmas = {kInf, kInf, kInf, kInf, kInf, kInf};
  std::array<bool, 6> estimate_mask = {true, true, true, true, true, true};

  static ParamPrior unconstrained(const ExtrinsicParams& values = {}) {
    ParamPrior p;
    p.values = values;
    return p;
  }

  std::size_t num_estimated() const {
    std::size_t n = 0;
    for (bool b : estimate_mask) {
      n += b ? 1 : 0;
    }
    return n;
  }

  void validate() const {
    const Vec6 v = values.to_vector();
    for (std::size_t i = 0; i < 6; ++i) {
      if (!estimate_mask[i] && !std::isfinite(v[static_cast<Eigen::Index>(i)])) {
        throw CalibError(ErrorCode::kInvalidArgument,
                         std::string("fixed parameter ") + kParamNames[i] + " has no finite value");
      }
      if (std::isnan(sigmas[i]) || sigmas[i] <= 0.0) {
        throw CalibError(ErrorCode::kInvalidArgument,
                         std::string("prior sigma of ") + kParamNames[i] + " must be positive");
      }
    }
  }
};

/// Per-iteration bookkeeping of the ICP loop.
struct IterationRecord {
  std::size_t num_matched = 0;
  std::size_t num_retained = 0;
  double sigma_d = 0.0;
  double wssr_before = 0.0;  // weighted point-to-plane SSR at the params entering the iteration
  double wssr_after = 0.0;   // same correspondences, params leaving the iteration
  double max_delta_angle = 0.0;
  double max_delta_translation = 0.0;
};

struct AdjustmentResult {
  ExtrinsicParams params;
  Mat6 covariance = Mat6::Zero();  // order alpha_x..t_z; fixed parameters carry zero rows/cols
  double residual_mean = 0.0;
  double residual_std = 0.0;
  std::size_t num_correspondences = 0;
  std::size_t num_iterations = 0;
  bool converged = false;

  double sigma0_squared = 1.0;
  long redundancy = 0;
  std::vector<IterationRecord> iterations;  // filled by the ICP loop only

  std::array<double, 6> sigmas() const {
    std::array<double, 6> s{};
    for (Eigen::Index i = 0; i < 6; ++i) {
      s[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, covariance(i, i)));
    }
    return s;
  }
};

/// Axis-aligned box, used for overlap computations.
struct Aabb {
  Vec3 min = Vec3::Constant(kInf);
  Vec3 max = Vec3::Constant(-kInf);

  bool valid() const { return (min.array() <= max.array()).all(); }
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  Aabb expanded(double margin) const {
    return {min.array() - margin, max.array() + margin};
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool intersects(const Aabb& o) const {
    return (min.array() <= o.max.array()).all() && (o.min.array() <= max.array()).all();
  }
};

inline Aabb bounds_of(const PointCloud& cloud) {
  Aabb box;
  for (const Point& p : cloud.points) {
    box.extend(p.position);
  }
  return box;
}

}  // namespace calibkit

#endif  // CALIBKIT_CORE_TYPES_HPP
