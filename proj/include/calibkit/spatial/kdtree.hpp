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

#ifndef CALIBKIT_SPATIAL_KDTREE_HPP
#define CALIBKIT_SPATIAL_KDTREE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "calibkit/core/types.hpp"

namespace calibkit {

struct Neighbor {
  std::size_t index = 0;
  double dist2 = 0.0;

  // Distance first, index second: ties resolve to the lower point index.
  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
};

/// Static 3-D k-d tree over a fixed point set. Queries are exact and
/// deterministic: neighbors are ordered by (squared distance, index).
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points, std::size_t leaf_size = 12)
      : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
      build(0, points_.size());
    }
  }

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Up to k nearest neighbors with dist2 <= max_dist2, sorted ascending.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k, double max_dist2 = kInf) const {
    std::vector<Neighbor> heap;
    if (k == 0 || points_.empty()) {
      return heap;
    }
    heap.reserve(k + 1);
    search(0, query, k, max_dist2, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  Neighbor nearest(const Vec3& query) const {
    auto n = knn(query, 1);
    return n.empty() ? Neighbor{0, kInf} : n.front();
  }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= leaf_size_) {
      return id;
    }
    Vec3 lo = Vec3::Constant(kInf), hi = Vec3::Constant(-kInf);
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) {
      return id;  // all coincident: keep as a leaf
    }
    const std::size_t mid = begin + (end - begin) / 2;
    auto less = [&](std::size_t a, std::size_t b) {
      const double va = points_[a][axis], vb = points_[b][axis];
      return va < vb || (va == vb && a < b);
    };
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), less);
    // read before the children reorder their ranges
    const double split = points_[order_[mid]][axis];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void search(std::uint32_t id, const Vec3& q, std::size_t k, double max_dist2,
              std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
        if (cand.dist2 > max_dist2) {
          continue;
        }
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t first = diff < 0.0 ? node.left : node.right;
    const std::uint32_t second = diff < 0.0 ? node.right : node.left;
    search(first, q, k, max_dist2, heap);
    const double bound = heap.size() < k ? max_dist2 : std::min(max_dist2, heap.front().dist2);
    if (diff * diff <= bound) {
      search(second, q, k, max_dist2, heap);
    }
  }

  std::vector<Vec3> points_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

inline std::vector<Vec3> positions_of(const PointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const Point& p : cloud.points) {
    out.push_back(p.position);
  }
  return out;
}

}  // namespace calibkit

#endif  // CALIBKIT_SPATIAL_KDTREE_HPP
