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

#ifndef CALIBKIT_FEATURES_HPP
#define CALIBKIT_FEATURES_HPP

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <optional>
#include <span>
#include <string>

#include "calibkit/core/types.hpp"
#include "calibkit/spatial/kdtree.hpp"

namespace calibkit {

struct NeighborhoodConfig {
  std::size_t k_neighbors = 10;       // includes the query point itself
  std::optional<double> max_radius;   // meters; neighbors farther away are dropped

  void validate() const {
    if (k_neighbors < 3) {
      throw CalibError(ErrorCode::kInvalidArgument, "k_neighbors must be >= 3");
    }
    if (max_radius && !(*max_radius > 0.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "max_radius must be positive");
    }
  }
};

/// Eigen-structure of a local neighborhood, eigenvalues sorted l1 >= l2 >= l3 >= 0.
struct LocalShape {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  Vec3 normal = Vec3::UnitZ();  // eigenvector of l3
  double planarity = 0.0;
};

/// PCA of a point set (population covariance). With fewer than 3 points or a
/// zero-spread set the shape is rank deficient: planarity 0, normal +z.
inline LocalShape local_shape(std::span<const Vec3> pts) {
  LocalShape shape;
  if (pts.size() < 3) {
    return shape;
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) {
    mean += p;
  }
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) {
    const Vec3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());

  const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 ev = es.eigenvalues().cwiseMax(0.0);  // ascending
  shape.l1 = ev[2];
  shape.l2 = ev[1];
  shape.l3 = ev[0];
  if (!(shape.l1 > 0.0)) {
    shape.l1 = shape.l2 = shape.l3 = 0.0;
    return shape;
  }
  shape.normal = es.eigenvectors().col(0).normalized();
  shape.planarity = std::clamp((shape.l2 - shape.l3) / shape.l1, 0.0, 1.0);
  return shape;
}

/// Flips n so that it points toward the sensor origin: dot(n, -position) >= 0.
inline Vec3 orient_toward_origin(const Vec3& n, const Vec3& position) {
  return n.dot(-position) < 0.0 ? Vec3(-n) : n;
}

/// Adds a unit normal and planarity (l2 - l3) / l1 to every point, from the
/// k-nearest-neighbor covariance around it.
inline PointCloud estimate_normals_planarity(const PointCloud& cloud,
                                             const NeighborhoodConfig& cfg = {}) {
  cfg.validate();
  if (cloud.size() < cfg.k_neighbors) {
    throw CalibError(ErrorCode::kInsufficientData,
                     "estimate_normals_planarity: cloud has " + std::to_string(cloud.size()) +
                         " points, fewer than k_neighbors = " + std::to_string(cfg.k_neighbors));
  }
  const KdTree tree(positions_of(cloud));
  const double max_d2 = cfg.max_radius ? *cfg.max_radius * *cfg.max_radius : kInf;

  PointCloud out = cloud;
  std::vector<Vec3> hood;
  hood.reserve(cfg.k_neighbors);
  for (Point& p : out.points) {
    hood.clear();
    for (const Neighbor& n : tree.knn(p.position, cfg.k_neighbors, max_d2)) {
      hood.push_back(tree.point(n.index));
    }
    const LocalShape shape = local_shape(hood);
    p.normal = orient_toward_origin(shape.normal, p.position);
    p.planarity = shape.planarity;
  }
  return out;
}

}  // namespace calibkit

#endif  // CALIBKIT_FEATURES_HPP
