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

#ifndef CALIBKIT_PIPELINE_HPP
#define CALIBKIT_PIPELINE_HPP

#include "calibkit/features.hpp"
#include "calibkit/filters.hpp"
#include "calibkit/matching.hpp"

namespace calibkit {

struct PipelineConfig {
  NeighborhoodConfig features;
  FilterConfig filter;
  MatchConfig match;

  void validate() const {
    features.validate();
    filter.validate();
    match.validate();
  }
};

/// Normals and planarity, then the filter stack.
inline PointCloud prepare_cloud(const PointCloud& cloud, const PipelineConfig& cfg) {
  cloud.validate();
  return apply_filters(estimate_normals_planarity(cloud, cfg.features), cfg.filter);
}

/// One calibration of a sensor pair: prepare both clouds and run ICP
/// starting from the prior values.
inline AdjustmentResult calibrate_pair(const PointCloud& ref_cloud, const PointCloud& mov_cloud,
                                       const ParamPrior& prior, const PipelineConfig& cfg) {
  cfg.validate();
  const PointCloud ref = prepare_cloud(ref_cloud, cfg);
  const PointCloud mov = prepare_cloud(mov_cloud, cfg);
  return run_icp(ref, mov, prior.values, prior, cfg.match);
}

}  // namespace calibkit

#endif  // CALIBKIT_PIPELINE_HPP
