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


// Umbrella header for the calibration library (no CLI or logging deps).

#ifndef CALIBKIT_CALIBKIT_HPP
#define CALIBKIT_CALIBKIT_HPP

#include "calibkit/adjust.hpp"
#include "calibkit/core/error.hpp"
#include "calibkit/core/transform.hpp"
#include "calibkit/core/types.hpp"
#include "calibkit/features.hpp"
#include "calibkit/filters.hpp"
#include "calibkit/io/config.hpp"
#include "calibkit/io/ply.hpp"
#include "calibkit/io/report.hpp"
#include "calibkit/io/scenario_dir.hpp"
#include "calibkit/matching.hpp"
#include "calibkit/pipeline.hpp"
#include "calibkit/scenario.hpp"
#include "calibkit/session.hpp"
#include "calibkit/spatial/kdtree.hpp"
#include "calibkit/synth.hpp"
#include "calibkit/version.hpp"

#endif  // CALIBKIT_CALIBKIT_HPP
