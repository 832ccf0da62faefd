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

// Online calibration procedure: the robot's twist decides when it is static;
// after a trigger delay the clouds of each sensor are accumulated for a fixed
// window and one calibration runs per site. Each accepted site's estimate and
// precision become the prior of the next one, until every estimated
// parameter is precise enough.

#ifndef CALIBKIT_SESSION_HPP
#define CALIBKIT_SESSION_HPP

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calibkit/pipeline.hpp"
#include "calibkit/scenario.hpp"

namespace calibkit {

struct SessionConfig {
  double static_linear_threshold = 0.05;   // m/s
  double static_angular_threshold = 0.02;  // rad/s
  double trigger_delay = 2.0;              // s
  double accumulation_duration = 2.0;      // s
  double stop_sigma_angles = 0.002;        // rad
  double stop_sigma_translation = 0.01;    // m
  double update_gate_factor = 1.0;
  double hysteresis_factor = 2.0;  // leaving the static state needs speed > factor * threshold

  void validate() const {
    if (!(static_linear_threshold > 0.0) || !(static_angular_threshold > 0.0) ||
        !(trigger_delay > 0.0) || !(accumulation_duration > 0.0) || !(stop_sigma_angles > 0.0) ||
        !(stop_sigma_translation > 0.0) || !(update_gate_factor > 0.0) ||
        !(hysteresis_factor >= 1.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "session config values must be positive");
    }
  }
};

enum class MotionEventKind { kBecameStatic, kBecameMoving };

struct MotionEvent {
  MotionEventKind kind;
  double timestamp;

  bool operator==(const MotionEvent&) const = default;
};

/// Static/moving classifier with hysteresis. The robot starts out moving.
class MotionStateDetector {
 public:
  explicit MotionStateDetector(const SessionConfig& cfg) : cfg_(cfg) {}

  std::optional<MotionEvent> update(const TwistSample& s) {
    if (last_time_ && !(s.timestamp > *last_time_)) {
      throw CalibError(ErrorCode::kNonMonotonicTime,
                       "motion_state: timestamps must be strictly increasing");
    }
    if (!(s.linear_speed >= 0.0) || !(s.angular_speed >= 0.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "motion_state: speeds must be >= 0");
    }
    last_time_ = s.timestamp;
    if (!static_) {
      if (s.linear_speed < cfg_.static_linear_threshold &&
          s.angular_speed < cfg_.static_angular_threshold) {
        static_ = true;
        return MotionEvent{MotionEventKind::kBecameStatic, s.timestamp};
      }
    } else if (s.linear_speed > cfg_.hysteresis_factor * cfg_.static_linear_threshold ||
               s.angular_speed > cfg_.hysteresis_factor * cfg_.static_angular_threshold) {
      static_ = false;
      return MotionEvent{MotionEventKind::kBecameMoving, s.timestamp};
    }
    return std::nullopt;
  }

  bool is_static() const { return static_; }

 private:
  SessionConfig cfg_;
  bool static_ = false;
  std::optional<double> last_time_;
};

inline std::vector<MotionEvent> motion_state(std::span<const TwistSample> twist,
                                             const SessionConfig& cfg) {
  MotionStateDetector detector(cfg);
  std::vector<MotionEvent> events;
  for (const TwistSample& s : twist) {
    if (auto e = detector.update(s)) {
      events.push_back(*e);
    }
  }
  return events;
}

/// Accumulation window [start, end] of one static interval.
struct SiteWindow {
  double start = 0.0;
  double end = 0.0;
};

/// Windows of the static intervals that stay static for at least
/// trigger_delay + accumulation_duration. A static interval still open at
/// the end of the stream lasts until the last sample.
inline std::vector<SiteWindow> site_windows(std::span<const TwistSample> twist,
                                            const SessionConfig& cfg) {
  std::vector<SiteWindow> out;
  if (twist.empty()) {
    return out;
  }
  const std::vector<MotionEvent> events = motion_state(twist, cfg);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].kind != MotionEventKind::kBecameStatic) {
      continue;
    }
    const double until =
        i + 1 < events.size() ? events[i + 1].timestamp : twist.back().timestamp;
    const double start = events[i].timestamp + cfg.trigger_delay;
    const double end = start + cfg.accumulation_duration;
    if (end <= until) {
      out.push_back({start, end});
    }
  }
  return out;
}

/// Concatenates all messages whose offset falls inside the window.
inline PointCloud accumulate(std::span<const CloudMessage> messages, double duration,
                             const std::string& frame_id) {
  PointCloud out;
  out.frame_id = frame_id;
  for (const CloudMessage& m : messages) {
    if (m.offset < 0.0 || m.offset > duration) {
      continue;
    }
    out.points.insert(out.points.end(), m.cloud.points.begin(), m.cloud.points.end());
    if (!out.acquired_at_site) {
      out.acquired_at_site = m.cloud.acquired_at_site;
    }
  }
  return out;
}

struct PairId {
  std::string reference;
  std::string movable;

  bool operator==(const PairId&) const = default;
};

/// Outcome of one site. `params`/`sigmas` hold the site's own estimate when
/// the adjustment produced one, otherwise the state's values at that time.
struct SiteRecord {
  std::size_t site = 0;  // 1-based
  double timestamp = 0.0;
  bool accepted = false;
  std::string status;  // "accepted", "gate_rejected", "not_converged" or an error code
  std::string message;
  bool has_estimate = false;
  std::size_t num_correspondences = 0;
  std::size_t num_iterations = 0;
  double residual_mean = 0.0;
  double residual_std = 0.0;
  ExtrinsicParams params;
  std::array<double, 6> sigmas{};
  Mat6 covariance = Mat6::Zero();  // SI units; zero without an estimate
};

struct CalibrationState {
  PairId pair_id;
  ParamPrior current;
  std::size_t site_counter = 0;
  std::vector<SiteRecord> history;
  bool done = false;
};

inline bool stop_criterion_met(const ParamPrior& p, const SessionConfig& cfg) {
  for (std::size_t i = 0; i < 6; ++i) {
    if (!p.estimate_mask[i]) {
      continue;
    }
    const double limit = is_angle_index(i) ? cfg.stop_sigma_angles : cfg.stop_sigma_translation;
    if (!(p.sigmas[i] < limit)) {
      return false;
    }
  }
  return true;
}

inline CalibrationState make_initial_state(PairId pair, const ParamPrior& prior,
                                           const SessionConfig& cfg) {
  prior.validate();
  CalibrationState s;
  s.pair_id = std::move(pair);
  s.current = prior;
  s.done = stop_criterion_met(prior, cfg);
  return s;
}

/// Accepts a site only if every estimated sigma is finite and at most
/// update_gate_factor times the current one.
inline bool passes_update_gate(const ParamPrior& current, const std::array<double, 6>& sigmas,
                               const SessionConfig& cfg) {
  for (std::size_t i = 0; i < 6; ++i) {
    if (!current.estimate_mask[i]) {
      continue;
    }
    if (!std::isfinite(sigmas[i]) || !(sigmas[i] <= cfg.update_gate_factor * current.sigmas[i])) {
      return false;
    }
  }
  return true;
}

/// Calibrates one site. Pipeline failures are recorded in the history and
/// leave state.current untouched.
inline CalibrationState run_site(CalibrationState state, const PointCloud& ref_cloud,
                                 const PointCloud& mov_cloud, const PipelineConfig& pipeline,
                                 const SessionConfig& cfg, double timestamp = 0.0) {
  if (state.done) {
    throw CalibError(ErrorCode::kPreconditionViolation,
                     "run_site: calibration of " + state.pair_id.movable + " is already done");
  }
  ++state.site_counter;
  SiteRecord rec;
  rec.site = state.site_counter;
  rec.timestamp = timestamp;
  rec.params = state.current.values;
  rec.sigmas = state.current.sigmas;
  try {
    const AdjustmentResult r = calibrate_pair(ref_cloud, mov_cloud, state.current, pipeline);
    rec.has_estimate = true;
    rec.num_correspondences = r.num_correspondences;
    rec.num_iterations = r.num_iterations;
    rec.residual_mean = r.residual_mean;
    rec.residual_std = r.residual_std;
    rec.params = r.params;
    rec.sigmas = r.sigmas();
    rec.covariance = r.covariance;
    for (std::size_t i = 0; i < 6; ++i) {
      if (!state.current.estimate_mask[i]) {
        rec.sigmas[i] = state.current.sigmas[i];
      }
    }
    if (!r.converged) {
      rec.status = "not_converged";
      rec.message = "ICP did not converge within " + std::to_string(r.num_iterations) +
                    " iterations";
    } else if (!passes_update_gate(state.current, rec.sigmas, cfg)) {
      rec.status = "gate_rejected";
      rec.message = "estimated precision does not improve on the current calibration";
    } else {
      rec.status = "accepted";
      rec.accepted = true;
      state.current.values = r.params;
      for (std::size_t i = 0; i < 6; ++i) {
        if (state.current.estimate_mask[i]) {
          state.current.sigmas[i] = std::max(rec.sigmas[i], std::numeric_limits<double>::min());
        }
      }
      state.done = stop_criterion_met(state.current, cfg);
    }
  } catch (const CalibError& e) {
    rec.status = std::string(to_string(e.code()));
    rec.message = e.what();
  }
  state.history.push_back(std::move(rec));
  return state;
}

struct SessionOutcome {
  CalibrationState state;
  std::size_t static_intervals = 0;  // windows that triggered a calibration
};

/// Replays a recorded drive for one sensor pair. The k-th completed
/// accumulation window consumes scenario.sites[k].
inline SessionOutcome run_session(const Scenario& scenario, const PairId& pair,
                                  const PipelineConfig& pipeline, const SessionConfig& cfg,
                                  const ParamPrior& initial_prior) {
  cfg.validate();
  pipeline.validate();
  SessionOutcome out;
  out.state = make_initial_state(pair, initial_prior, cfg);
  const std::vector<SiteWindow> windows = site_windows(scenario.twist, cfg);
  for (std::size_t k = 0; k < windows.size() && k < scenario.sites.size(); ++k) {
    if (out.state.done) {
      break;
    }
    ++out.static_intervals;
    const SiteData& site = scenario.sites[k];
    auto messages_of = [&](const std::string& id) -> std::span<const CloudMessage> {
      auto it = site.messages.find(id);
      if (it == site.messages.end()) {
        return {};
      }
      return it->second;
    };
    const PointCloud ref = accumulate(messages_of(pair.reference), cfg.accumulation_duration,
                                      pair.reference);
    const PointCloud mov =
        accumulate(messages_of(pair.movable), cfg.accumulation_duration, pair.movable);
    out.state = run_site(std::move(out.state), ref, mov, pipeline, cfg, windows[k].end);
  }
  return out;
}

}  // namespace calibkit

#endif  // CALIBKIT_SESSION_HPP
