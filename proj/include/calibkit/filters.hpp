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

#ifndef CALIBKIT_FILTERS_HPP
#define CALIBKIT_FILTERS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "calibkit/core/types.hpp"

namespace calibkit {

struct FilterConfig {
  double min_range = 0.5;   // m
  double max_range = 60.0;  // m
  std::optional<double> min_intensity;
  double voxel_size = 0.2;     // m
  double min_planarity = 0.3;  // 0 disables the planarity stage

  void validate() const {
    if (!(min_range >= 0.0) || !(min_range < max_range)) {
      throw CalibError(ErrorCode::kInvalidArgument, "filter: require 0 <= min_range < max_range");
    }
    if (!(voxel_size > 0.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "filter: voxel_size must be positive");
    }
    if (!(min_planarity >= 0.0 && min_planarity <= 1.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "filter: min_planarity must lie in [0,1]");
    }
  }
};

namespace detail {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    // large odd multipliers; only distribution matters, not cryptographic quality
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

inline VoxelKey voxel_of(const Vec3& p, double size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / size)),
          static_cast<std::int64_t>(std::floor(p.y() / size)),
          static_cast<std::int64_t>(std::floor(p.z() / size))};
}

using VoxelMap = std::unordered_map<VoxelKey, std::vector<std::size_t>, VoxelKeyHash>;

inline VoxelMap group_by_voxel(std::span<const Vec3> pts, double size) {
  VoxelMap cells;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cells[voxel_of(pts[i], size)].push_back(i);
  }
  return cells;
}

inline PointCloud keep_if(const PointCloud& cloud, const std::function<bool(const Point&)>& pred) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.acquired_at_site = cloud.acquired_at_site;
  for (const Point& p : cloud.points) {
    if (pred(p)) {
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace detail

/// Keeps, per occupied voxel, the real point nearest to the voxel's centroid
/// (ties to the lower index). Survivors stay in input order.
inline std::vector<std::size_t> voxel_representatives(std::span<const Vec3> pts, double size) {
  const detail::VoxelMap cells = detail::group_by_voxel(pts, size);
  std::vector<std::size_t> keep;
  keep.reserve(cells.size());
  for (const auto& [key, members] : cells) {
    Vec3 c = Vec3::Zero();
    for (std::size_t i : members) {
      c += pts[i];
    }
    c /= static_cast<double>(members.size());
    std::size_t best = members.front();
    double best_d2 = (pts[best] - c).squaredNorm();
    for (std::size_t i : members) {
      const double d2 = (pts[i] - c).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
        best = i;
        best_d2 = d2;
      }
    }
    keep.push_back(best);
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

inline PointCloud voxel_thin_out(const PointCloud& cloud, double voxel_size) {
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    pts.push_back(p.position);
  }
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.acquired_at_site = cloud.acquired_at_site;
  for (std::size_t i : voxel_representatives(pts, voxel_size)) {
    out.points.push_back(cloud.points[i]);
  }
  return out;
}

/// A named cloud -> cloud stage. Stages must only drop points.
struct FilterStage {
  std::string name;
  std::function<PointCloud(const PointCloud&)> apply;
};

/// Ordered filter stack. Sensor-specific stages can be inserted around the
/// default ones by name.
class FilterStack {
 public:
  FilterStack() = default;

  /// range -> intensity -> planarity -> voxel
  static FilterStack from_config(const FilterConfig& cfg) {
    cfg.validate();
    FilterStack stack;
    stack.add({"range", [cfg](const PointCloud& c) {
                 return detail::keep_if(c, [&](const Point& p) {
                   const double r = p.position.norm();
                   return r >= cfg.min_range && r <= cfg.max_range;
                 });
               }});
    if (cfg.min_intensity) {
      const double min_i = *cfg.min_intensity;
      stack.add({"intensity", [min_i](const PointCloud& c) {
                   if (!c.empty() && !c.has_intensity()) {
                     throw CalibError(ErrorCode::kMissingAttribute,
                                      "intensity filter: cloud '" + c.frame_id +
                                          "' has no intensity attribute");
                   }
                   return detail::keep_if(c, [&](const Point& p) { return *p.intensity >= min_i; });
                 }});
    }
    if (cfg.min_planarity > 0.0) {
      const double min_p = cfg.min_planarity;
      stack.add({"planarity", [min_p](const PointCloud& c) {
                   if (!c.empty() && !c.has_planarity()) {
                     throw CalibError(ErrorCode::kMissingAttribute,
                                      "planarity filter: cloud '" + c.frame_id +
                                          "' has no planarity attribute");
                   }
                   return detail::keep_if(c, [&](const Point& p) { return *p.planarity >= min_p; });
                 }});
    }
    const double voxel = cfg.voxel_size;
    stack.add({"voxel", [voxel](const PointCloud& c) { return voxel_thin_out(c, voxel); }});
    return stack;
  }

  void add(FilterStage stage) { stages_.push_back(std::move(stage)); }

  /// Inserts before the stage called `before`; appends if there is none.
  void insert_before(const std::string& before, FilterStage stage) {
    auto it = std::find_if(stages_.begin(), stages_.end(),
                           [&](const FilterStage& s) { return s.name == before; });
    stages_.insert(it, std::move(stage));
  }

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& s : stages_) {
      n.push_back(s.name);
    }
    return n;
  }

  PointCloud apply(const PointCloud& cloud) const {
    if (cloud.empty()) {
      throw CalibError(ErrorCode::kNoData, "filters: cloud '" + cloud.frame_id + "' is empty");
    }
    PointCloud current = cloud;
    for (const FilterStage& stage : stages_) {
      current = stage.apply(current);
      if (current.empty()) {
        throw CalibError(ErrorCode::kEmptyResult, "filters: stage '" + stage.name +
                                                      "' removed every point of '" +
                                                      cloud.frame_id + "'");
      }
    }
    return current;
  }

 private:
  std::vector<FilterStage> stages_;
};

inline PointCloud apply_filters(const PointCloud& cloud, const FilterConfig& cfg) {
  return FilterStack::from_config(cfg).apply(cloud);
}

}  // namespace calibkit

#endif  // CALIBKIT_FILTERS_HPP
