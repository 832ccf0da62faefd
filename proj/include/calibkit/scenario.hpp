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

#ifndef CALIBKIT_SCENARIO_HPP
#define CALIBKIT_SCENARIO_HPP

#include <map>
#include <string>
#include <vector>

#include "calibkit/core/types.hpp"

namespace calibkit {

struct TwistSample {
  double timestamp = 0.0;      // s
  double linear_speed = 0.0;   // m/s
  double angular_speed = 0.0;  // rad/s
};

/// One cloud message; offset is seconds after the start of the accumulation
/// window of the site it belongs to.
struct CloudMessage {
  double offset = 0.0;
  PointCloud cloud;
};

/// Cloud messages recorded by each sensor while the robot stood at one site.
struct SiteData {
  std::map<std::string, std::vector<CloudMessage>> messages;
};

/// A recorded drive: one twist stream, and one SiteData per static interval
/// long enough to complete an accumulation (in order of occurrence).
struct Scenario {
  std::vector<TwistSample> twist;
  std::vector<SiteData> sites;
};

}  // namespace calibkit

#endif  // CALIBKIT_SCENARIO_HPP
