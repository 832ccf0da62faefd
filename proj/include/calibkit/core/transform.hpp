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

#ifndef CALIBKIT_CORE_TRANSFORM_HPP
#define CALIBKIT_CORE_TRANSFORM_HPP

#include <algorithm>
#include <cmath>

#include "calibkit/core/types.hpp"

namespace calibkit {

inline constexpr const char* kRotationConvention =
    "R = Rz(alpha_z) * Ry(alpha_y) * Rx(alpha_x) (intrinsic x-y-z Euler angles, column vectors); "
    "x_reference = R * x_movable + t";

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

inline Mat3 compose_rotation(double alpha_x, double alpha_y, double alpha_z) {
  return rot_z(alpha_z) * rot_y(alpha_y) * rot_x(alpha_x);
}

inline Mat3 rotation_of(const ExtrinsicParams& p) {
  return compose_rotation(p.alpha_x, p.alpha_y, p.alpha_z);
}

/// Inverse of compose_rotation. Near gimbal lock (|alpha_y| within 1e-9 of
/// pi/2) alpha_x is set to 0 and the full rotation is carried by alpha_z.
inline Vec3 extract_euler(const Mat3& r) {
  const double sy = std::clamp(-r(2, 0), -1.0, 1.0);
  const double cy = std::hypot(r(0, 0), r(1, 0));
  const double ay = std::atan2(sy, cy);
  if (std::abs(std::abs(ay) - kPi / 2.0) < 1e-9) {
    return {0.0, ay, std::atan2(-r(0, 1), r(1, 1))};
  }
  return {std::atan2(r(2, 1), r(2, 2)), ay, std::atan2(r(1, 0), r(0, 0))};
}

inline ExtrinsicParams params_from_rt(const Mat3& r, const Vec3& t) {
  const Vec3 a = extract_euler(r);
  return ExtrinsicParams::make(a[0], a[1], a[2], t[0], t[1], t[2]);
}

inline Vec3 transform_point(const ExtrinsicParams& params, const Vec3& p) {
  return rotation_of(params) * p + params.translation();
}

/// Maps positions through R p + t and normals through R.
inline PointCloud apply_transform(const PointCloud& cloud, const ExtrinsicParams& params) {
  if (cloud.empty()) {
    throw CalibError(ErrorCode::kNoData, "apply_transform: cloud is empty");
  }
  PointCloud out = cloud;
  if (params == ExtrinsicParams{}) {
    return out;
  }
  const Mat3 r = rotation_of(params);
  const Vec3 t = params.translation();
  for (Point& p : out.points) {
    p.position = r * p.position + t;
    if (p.normal) {
      p.normal = (r * *p.normal).normalized();
    }
  }
  return out;
}

inline ExtrinsicParams invert_params(const ExtrinsicParams& params) {
  const Mat3 rt = rotation_of(params).transpose();
  return params_from_rt(rt, -(rt * params.translation()));
}

/// a ∘ b: applies b first, then a.
inline ExtrinsicParams compose_params(const ExtrinsicParams& a, const ExtrinsicParams& b) {
  const Mat3 ra = rotation_of(a);
  return params_from_rt(ra * rotation_of(b), ra * b.translation() + a.translation());
}

}  // namespace calibkit

#endif  // CALIBKIT_CORE_TRANSFORM_HPP
