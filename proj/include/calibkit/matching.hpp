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

#ifndef CALIBKIT_MATCHING_HPP
#define CALIBKIT_MATCHING_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "calibkit/adjust.hpp"
#include "calibkit/core/transform.hpp"
#include "calibkit/core/types.hpp"
#include "calibkit/filters.hpp"
#include "calibkit/spatial/kdtree.hpp"

namespace calibkit {

struct MatchConfig {
  std::size_t num_selected = 2000;
  double max_distance_factor = 3.0;
  double max_normal_angle = 0.5235987755982988;  // 30 deg
  std::size_t max_iterations = 50;
  double convergence_delta_angle = 1e-5;        // rad
  double convergence_delta_translation = 1e-4;  // m
  std::size_t min_correspondences = 100;

  void validate() const {
    if (num_selected == 0 || max_iterations == 0 || min_correspondences == 0 ||
        !(max_distance_factor > 0.0) || !(max_normal_angle > 0.0) ||
        !(convergence_delta_angle > 0.0) || !(convergence_delta_translation > 0.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "match config values must be positive");
    }
  }

  GaussNewtonOptions gauss_newton() const {
    GaussNewtonOptions o;
    o.delta_angle = convergence_delta_angle;
    o.delta_translation = convergence_delta_translation;
    return o;
  }
};

namespace detail {

inline std::size_t occupied_voxels(std::span<const Vec3> pts, double size) {
  return group_by_voxel(pts, size).size();
}

/// Smallest voxel edge (up to 1% in log scale) whose grid has at most
/// `target` occupied cells.
inline double voxel_size_for_count(std::span<const Vec3> pts, std::size_t target) {
  Aabb box;
  for (const Vec3& p : pts) {
    box.extend(p);
  }
  double hi = std::max((box.max - box.min).maxCoeff(), 1e-9);
  while (occupied_voxels(pts, hi) > target) {
    hi *= 2.0;
  }
  double lo = hi;
  while (lo > 1e-12 && occupied_voxels(pts, lo) <= target) {
    lo *= 0.5;
  }
  while (hi / lo > 1.01) {
    const double mid = std::sqrt(lo * hi);
    if (occupied_voxels(pts, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

inline std::vector<std::size_t> indices_inside(const PointCloud& cloud, const Aabb& box) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (box.contains(cloud.points[i].position)) {
      idx.push_back(i);
    }
  }
  return idx;
}

inline std::vector<Vec3> gather(const PointCloud& cloud, std::span<const std::size_t> idx) {
  std::vector<Vec3> pts;
  pts.reserve(idx.size());
  for (std::size_t i : idx) {
    pts.push_back(cloud.points[i].position);
  }
  return pts;
}

}  // namespace detail

/// Uniform-sampling selection: reference points inside the movable cloud's
/// bounding box (grown by one selection voxel), thinned to one point per
/// voxel with the voxel edge tuned so that about num_selected cells are
/// occupied. Returned indices are ascending.
inline std::vector<std::size_t> select_uniform(const PointCloud& ref_cloud, const Aabb& mov_bounds,
                                               const MatchConfig& cfg) {
  if (ref_cloud.empty()) {
    throw CalibError(ErrorCode::kNoData, "select_uniform: reference cloud is empty");
  }
  std::vector<std::size_t> overlap = detail::indices_inside(ref_cloud, mov_bounds);
  if (overlap.empty()) {
    throw CalibError(ErrorCode::kNoOverlap,
                     "select_uniform: no reference point lies inside the movable cloud's bounds");
  }
  if (overlap.size() <= cfg.num_selected) {
    return overlap;
  }
  double voxel = detail::voxel_size_for_count(detail::gather(ref_cloud, overlap), cfg.num_selected);
  overlap = detail::indices_inside(ref_cloud, mov_bounds.expanded(voxel));
  if (overlap.size() <= cfg.num_selected) {
    return overlap;
  }
  const std::vector<Vec3> pts = detail::gather(ref_cloud, overlap);
  voxel = detail::voxel_size_for_count(pts, cfg.num_selected);
  std::vector<std::size_t> out;
  for (std::size_t k : voxel_representatives(pts, voxel)) {
    out.push_back(overlap[k]);
  }
  return out;
}

/// Nearest movable neighbor of every selected reference point, with the
/// movable cloud mapped into the reference frame by current_params.
inline std::vector<Correspondence> match_nn(std::span<const std::size_t> selected,
                                            const PointCloud& ref_cloud,
                                            const PointCloud& mov_cloud,
                                            const ExtrinsicParams& current_params) {
  if (mov_cloud.empty()) {
    throw CalibError(ErrorCode::kNoData, "match_nn: movable cloud is empty");
  }
  if (!ref_cloud.has_normals()) {
    throw CalibError(ErrorCode::kMissingAttribute, "match_nn: reference cloud has no normals");
  }
  const Mat3 r = rotation_of(current_params);
  const Vec3 t = current_params.translation();
  std::vector<Vec3> moved;
  moved.reserve(mov_cloud.size());
  for (const Point& p : mov_cloud.points) {
    moved.push_back(r * p.position + t);
  }
  const KdTree tree(std::move(moved));

  std::vector<Correspondence> out;
  out.reserve(selected.size());
  for (std::size_t i : selected) {
    if (i >= ref_cloud.size()) {
      throw CalibError(ErrorCode::kInvalidArgument, "match_nn: selected index out of range");
    }
    const Point& q = ref_cloud.points[i];
    const Neighbor nn = tree.nearest(q.position);
    Correspondence c;
    c.ref_index = i;
    c.mov_index = nn.index;
    c.q = q.position;
    c.n = *q.normal;
    c.p = mov_cloud.points[nn.index].position;
    c.signed_distance = (tree.point(nn.index) - c.q).dot(c.n);
    out.push_back(c);
  }
  return out;
}

/// Drops correspondences whose distance is more than max_distance_factor
/// robust sigmas from the median distance, or whose reference normal and
/// rotated movable normal differ by more than max_normal_angle.
inline std::vector<Correspondence> reject(std::span<const Correspondence> correspondences,
                                          const PointCloud& mov_cloud,
                                          const ExtrinsicParams& current_params,
                                          const MatchConfig& cfg) {
  if (correspondences.empty()) {
    throw CalibError(ErrorCode::kSceneUnsuitable, "reject: no correspondences");
  }
  if (!mov_cloud.has_normals()) {
    throw CalibError(ErrorCode::kMissingAttribute, "reject: movable cloud has no normals");
  }
  std::vector<double> d;
  d.reserve(correspondences.size());
  for (const Correspondence& c : correspondences) {
    d.push_back(c.signed_distance);
  }
  const double med = median_of(d);
  const double gate = cfg.max_distance_factor * robust_sigma(d);
  const double min_cos = std::cos(cfg.max_normal_angle);
  const Mat3 r = rotation_of(current_params);

  std::vector<Correspondence> kept;
  kept.reserve(correspondences.size());
  for (const Correspondence& c : correspondences) {
    if (std::abs(c.signed_distance - med) > gate) {
      continue;
    }
    const Vec3 n_mov = r * *mov_cloud.points[c.mov_index].normal;
    if (c.n.dot(n_mov) < min_cos) {
      continue;
    }
    kept.push_back(c);
  }
  if (kept.size() < cfg.min_correspondences) {
    throw CalibError(ErrorCode::kSceneUnsuitable,
                     "reject: " + std::to_string(kept.size()) + " of " +
                         std::to_string(correspondences.size()) +
                         " correspondences survive, fewer than min_correspondences = " +
                         std::to_string(cfg.min_correspondences));
  }
  return kept;
}

/// Point-to-plane ICP of the movable cloud against the fixed reference
/// cloud. Both clouds must carry normals. Selection runs once; matching,
/// rejection and the adjustment repeat until the parameter change drops
/// below the convergence thresholds or max_iterations is hit, in which case
/// the last iterate is returned with converged = false.
inline AdjustmentResult run_icp(const PointCloud& ref_cloud, const PointCloud& mov_cloud,
                                const ExtrinsicParams& initial, const ParamPrior& prior,
                                const MatchConfig& cfg = {}) {
  cfg.validate();
  prior.validate();
  if (ref_cloud.empty() || mov_cloud.empty()) {
    throw CalibError(ErrorCode::kNoData, "run_icp: empty input cloud");
  }
  if (!ref_cloud.has_normals() || !mov_cloud.has_normals()) {
    throw CalibError(ErrorCode::kMissingAttribute, "run_icp: both clouds need normals");
  }

  Vec6 x0 = initial.to_vector();
  const Vec6 xp = prior.values.to_vector();
  for (std::size_t i = 0; i < 6; ++i) {
    if (!prior.estimate_mask[i]) {
      x0[static_cast<Eigen::Index>(i)] = xp[static_cast<Eigen::Index>(i)];
    }
  }
  ExtrinsicParams params{x0[0], x0[1], x0[2], x0[3], x0[4], x0[5]};

  const std::vector<std::size_t> selected =
      select_uniform(ref_cloud, bounds_of(apply_transform(mov_cloud, params)), cfg);
  const GaussNewtonOptions gn = cfg.gauss_newton();

  AdjustmentResult last;
  std::vector<IterationRecord> trace;
  bool converged = false;
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    const std::vector<Correspondence> matched = match_nn(selected, ref_cloud, mov_cloud, params);
    std::vector<double> d;
    d.reserve(matched.size());
    for (const Correspondence& c : matched) {
      d.push_back(c.signed_distance);
    }
    ResidualBundle bundle;
    bundle.correspondences = reject(matched, mov_cloud, params, cfg);
    bundle.prior = prior;
    bundle.sigma_d = robust_sigma(d);

    last = solve_gauss_markov(bundle, params, gn);

    IterationRecord rec;
    rec.num_matched = matched.size();
    rec.num_retained = bundle.correspondences.size();
    rec.sigma_d = bundle.sigma_d;
    rec.wssr_before = weighted_point_to_plane_ssr(bundle.correspondences, bundle.sigma_d, params);
    rec.wssr_after =
        weighted_point_to_plane_ssr(bundle.correspondences, bundle.sigma_d, last.params);
    const Vec6 delta = last.params.to_vector() - params.to_vector();
    for (Eigen::Index i = 0; i < 3; ++i) {
      rec.max_delta_angle = std::max(rec.max_delta_angle, std::abs(normalize_angle(delta[i])));
      rec.max_delta_translation = std::max(rec.max_delta_translation, std::abs(delta[i + 3]));
    }
    trace.push_back(rec);
    params = last.params;

    if (rec.max_delta_angle < cfg.convergence_delta_angle &&
        rec.max_delta_translation < cfg.convergence_delta_translation) {
      converged = true;
      break;
    }
  }
  last.num_iterations = trace.size();
  last.converged = converged;
  last.iterations = std::move(trace);
  return last;
}

}  // namespace calibkit

#endif  // CALIBKIT_MATCHING_HPP
