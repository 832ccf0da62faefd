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

// Synthetic planar worlds with known ground truth.

#ifndef CALIBKIT_SYNTH_HPP
#define CALIBKIT_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "calibkit/core/transform.hpp"
#include "calibkit/core/types.hpp"
#include "calibkit/scenario.hpp"

namespace calibkit {

/// Seeded generator with platform-independent uniform and normal draws
/// (std:: distributions are implementation defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }  // [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer; derives independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct PlaneSpec {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  std::array<double, 2> extent = {1.0, 1.0};  // side lengths along the in-plane basis
  double density = 100.0;                     // points per m^2
};

struct SceneSpec {
  std::vector<PlaneSpec> planes;
  double clutter_fraction = 0.0;  // share of clutter points in the whole scene
  std::uint64_t seed = 0;

  void validate() const {
    if (planes.empty()) {
      throw CalibError(ErrorCode::kInvalidArgument, "scene: at least one plane required");
    }
    for (const PlaneSpec& p : planes) {
      if (!(p.density > 0.0) || !(p.extent[0] > 0.0) || !(p.extent[1] > 0.0) ||
          !(p.normal.norm() > 0.0)) {
        throw CalibError(ErrorCode::kInvalidArgument,
                         "scene: plane density, extents and normal must be positive");
      }
    }
    if (!(clutter_fraction >= 0.0 && clutter_fraction < 1.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "scene: clutter_fraction must lie in [0,1)");
    }
  }
};

/// Orthonormal in-plane basis (u, v) with u x v = n.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& normal) {
  const Vec3 n = normal.normalized();
  const Vec3 helper = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 u = n.cross(helper).normalized();
  return {u, n.cross(u)};
}

inline std::size_t plane_point_count(const PlaneSpec& p) {
  return static_cast<std::size_t>(std::llround(p.density * p.extent[0] * p.extent[1]));
}

/// Uniform samples on every plane rectangle, followed by clutter drawn
/// uniformly in the planes' bounding box grown by 1 m. Points carry no
/// attributes.
inline PointCloud generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  PointCloud cloud;
  cloud.frame_id = "world";
  Aabb box;
  for (const PlaneSpec& plane : spec.planes) {
    const auto [u, v] = plane_basis(plane.normal);
    const std::size_t n = plane_point_count(plane);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = rng.uniform(-0.5, 0.5) * plane.extent[0];
      const double b = rng.uniform(-0.5, 0.5) * plane.extent[1];
      Point p;
      p.position = plane.center + a * u + b * v;
      box.extend(p.position);
      cloud.points.push_back(p);
    }
  }
  const double f = spec.clutter_fraction;
  const auto clutter = static_cast<std::size_t>(
      std::llround(static_cast<double>(cloud.size()) * f / (1.0 - f)));
  const Aabb grown = box.expanded(1.0);
  for (std::size_t i = 0; i < clutter; ++i) {
    Point p;
    for (int k = 0; k < 3; ++k) {
      p.position[k] = rng.uniform(grown.min[k], grown.max[k]);
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

/// World points within max_range of the sensor, expressed in the sensor
/// frame (sensor_pose maps sensor coordinates to world coordinates), with
/// isotropic Gaussian noise added per axis.
inline PointCloud render_view(const PointCloud& world, const ExtrinsicParams& sensor_pose,
                              double noise_sigma, double max_range, std::uint64_t seed,
                              const std::string& frame_id = "sensor") {
  if (!(noise_sigma >= 0.0)) {
    throw CalibError(ErrorCode::kInvalidArgument, "render_view: noise_sigma must be >= 0");
  }
  Rng rng(seed);
  const Mat3 rt = rotation_of(sensor_pose).transpose();
  const Vec3 origin = sensor_pose.translation();
  PointCloud view;
  view.frame_id = frame_id;
  view.acquired_at_site = world.acquired_at_site;
  for (const Point& w : world.points) {
    const Vec3 rel = w.position - origin;
    if (rel.norm() > max_range) {
      continue;
    }
    Point p = w;
    p.position = rt * rel;
    if (p.normal) {
      p.normal = (rt * *p.normal).normalized();
    }
    if (noise_sigma > 0.0) {
      p.position += noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    }
    view.points.push_back(p);
  }
  return view;
}

inline ExtrinsicParams perturb(const ExtrinsicParams& params, double angle_mag, double trans_mag,
                               std::uint64_t seed) {
  if (!(angle_mag >= 0.0) || !(trans_mag >= 0.0)) {
    throw CalibError(ErrorCode::kInvalidArgument, "perturb: magnitudes must be >= 0");
  }
  Rng rng(seed);
  Vec6 v = params.to_vector();
  for (Eigen::Index i = 0; i < 3; ++i) {
    v[i] += rng.uniform(-angle_mag, angle_mag);
  }
  for (Eigen::Index i = 3; i < 6; ++i) {
    v[i] += rng.uniform(-trans_mag, trans_mag);
  }
  return ExtrinsicParams::from_vector(v);
}

// ---------------------------------------------------------------------------
// Whole-drive simulation

struct SensorSpec {
  std::string id;
  ExtrinsicParams pose;  // sensor -> vehicle
  double noise_sigma = 0.0;
  double max_range = 60.0;
};

/// Twist profile: every site is reached after a drive and followed by a stop.
struct MotionSpec {
  double sample_rate = 10.0;  // Hz
  double drive_duration = 10.0;
  double static_duration = 6.0;
  double linear_speed = 5.0;
  double angular_speed = 0.1;
  std::vector<std::size_t> short_stops;  // sites preceded by a stop too short to trigger
  double short_stop_duration = 1.5;
};

struct SimulationSpec {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  std::vector<SensorSpec> sensors;  // the first sensor is the reference
  std::vector<SceneSpec> sites;     // scenes in the vehicle frame
  MotionSpec motion;

  void validate() const {
    if (sensors.size() < 2) {
      throw CalibError(ErrorCode::kInvalidArgument, "simulation: at least two sensors required");
    }
    if (sites.empty()) {
      throw CalibError(ErrorCode::kInvalidArgument, "simulation: at least one site required");
    }
    for (const SceneSpec& s : sites) {
      s.validate();
    }
    if (!(motion.sample_rate > 0.0) || !(motion.drive_duration > 0.0) ||
        !(motion.static_duration > 0.0)) {
      throw CalibError(ErrorCode::kInvalidArgument, "simulation: motion durations must be positive");
    }
  }
};

struct Simulation {
  Scenario scenario;
  std::string reference;
  std::map<std::string, ExtrinsicParams> ground_truth;  // movable -> reference extrinsics
};

inline std::vector<TwistSample> simulate_twist(const MotionSpec& m, std::size_t num_sites) {
  std::vector<TwistSample> out;
  const double dt = 1.0 / m.sample_rate;
  std::size_t tick = 0;
  auto emit = [&](double duration, double lin, double ang) {
    const auto n = static_cast<std::size_t>(std::llround(duration * m.sample_rate));
    for (std::size_t i = 0; i < n; ++i, ++tick) {
      out.push_back({static_cast<double>(tick) * dt, lin, ang});
    }
  };
  for (std::size_t s = 0; s < num_sites; ++s) {
    const bool short_stop =
        std::find(m.short_stops.begin(), m.short_stops.end(), s) != m.short_stops.end();
    if (short_stop) {
      emit(m.drive_duration / 2.0, m.linear_speed, m.angular_speed);
      emit(m.short_stop_duration, 0.0, 0.0);
      emit(m.drive_duration / 2.0, m.linear_speed, m.angular_speed);
    } else {
      emit(m.drive_duration, m.linear_speed, m.angular_speed);
    }
    emit(m.static_duration, 0.0, 0.0);
  }
  emit(m.drive_duration, m.linear_speed, m.angular_speed);
  return out;
}

/// Renders every site for every sensor. Each sensor samples the site's
/// planes independently, so no two sensors share exact points.
inline Simulation simulate(const SimulationSpec& spec) {
  spec.validate();
  Simulation sim;
  sim.reference = spec.sensors.front().id;
  const ExtrinsicParams ref_inv = invert_params(spec.sensors.front().pose);
  for (std::size_t k = 1; k < spec.sensors.size(); ++k) {
    sim.ground_truth[spec.sensors[k].id] = compose_params(ref_inv, spec.sensors[k].pose);
  }
  sim.scenario.twist = simulate_twist(spec.motion, spec.sites.size());
  for (std::size_t s = 0; s < spec.sites.size(); ++s) {
    SiteData site;
    for (std::size_t k = 0; k < spec.sensors.size(); ++k) {
      const SensorSpec& sensor = spec.sensors[k];
      SceneSpec scene = spec.sites[s];
      scene.seed = mix_seed(spec.seed, 1000 * s + 2 * k);
      PointCloud world = generate_scene(scene);
      PointCloud view = render_view(world, sensor.pose, sensor.noise_sigma, sensor.max_range,
                                    mix_seed(spec.seed, 1000 * s + 2 * k + 1), sensor.id);
      view.acquired_at_site = s;
      site.messages[sensor.id].push_back({0.0, std::move(view)});
    }
    sim.scenario.sites.push_back(std::move(site));
  }
  return sim;
}

}  // namespace calibkit

#endif  // CALIBKIT_SYNTH_HPP
