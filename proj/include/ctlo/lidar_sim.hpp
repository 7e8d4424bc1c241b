// Copyright 2026, The ctlo Authors
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

/**
 * \file lidar_sim.hpp
 * \brief Deterministic spinning LiDAR over analytic worlds with exact ground truth.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctlo/geometry.hpp"
#include "ctlo/io.hpp"
#include "ctlo/odometry.hpp"
#include "ctlo/scan.hpp"

namespace ctlo::sim {

/// Infinite plane n . x = offset with unit normal n.
struct Plane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

/// Box centered on pose.translation, axes given by pose.rotation.
struct Box {
  Pose pose;
  Vec3 half_extents = Vec3::Constant(0.5);
};

class World {
 public:
  void add_plane(const Plane& plane) { planes_.push_back(plane); }
  void add_box(const Box& box) { boxes_.push_back(box); }

  const std::vector<Plane>& planes() const { return planes_; }
  const std::vector<Box>& boxes() const { return boxes_; }

  /// Range of the nearest positive hit along a unit direction, if below max_range.
  std::optional<double> intersect(const Vec3& origin, const Vec3& direction,
                                  double max_range) const;

  /// Distance from p to the closest primitive surface.
  double distance(const Vec3& p) const;

  /// World restricted to primitives that may be hit within radius of center.
  World crop(const Vec3& center, double radius) const;

 private:
  std::vector<Plane> planes_;
  std::vector<Box> boxes_;
};

/// Planar motion with constant tangential acceleration and turn rate.
struct MotionSegment {
  double duration = 1.0;
  double acceleration = 0.0;
  double turn_rate = 0.0;
};

/// Constant body angular velocity applied on top of the heading.
struct RotationSegment {
  double duration = 1.0;
  Vec3 angular_velocity = Vec3::Zero();
};

/// Sinusoidal roll/pitch/yaw offsets (radians, hertz).
struct Oscillation {
  Vec3 amplitude = Vec3::Zero();
  Vec3 frequency = Vec3::Zero();
  /// Seconds over which the amplitude fades in with a smoothstep envelope.
  double ramp = 0.0;
};

/**
 * \brief Continuous sensor trajectory.
 *
 * Position integrates speed along the heading in closed form. Orientation is
 * Rz(heading) * R_osc(t) * R_offset(t) where R_offset follows the rotation
 * segments. After the last segment the motion continues at constant speed.
 */
class GroundTruthTrajectory {
 public:
  GroundTruthTrajectory() = default;
  GroundTruthTrajectory(const Vec3& start, double heading, double speed,
                        std::vector<MotionSegment> motion,
                        std::vector<RotationSegment> rotation = {}, Oscillation oscillation = {});

  Pose pose(double t) const;
  double speed(double t) const;
  double duration() const;

 private:
  struct MotionState {
    double t0;
    double x, y;
    double heading;
    double speed;
  };
  struct RotationState {
    double t0;
    Quat q;
  };

  double z_ = 0.0;
  std::vector<MotionSegment> motion_;
  std::vector<MotionState> motion_states_;
  std::vector<RotationSegment> rotation_;
  std::vector<RotationState> rotation_states_;
  Oscillation oscillation_;
};

struct SensorSpec {
  int beams = 32;
  double min_elevation_deg = -20.0;
  double max_elevation_deg = 10.0;
  double azimuth_step_deg = 0.4;
  /// Heading of the first firing; the sweep seam sits behind the vehicle.
  double start_azimuth_deg = 180.0;
  double max_range = 80.0;
  double noise_sigma = 0.01;
  double period = 0.1;

  int azimuth_steps() const;
};

struct SimulatedScan {
  Scan scan;
  /// Exact sensor poses at the first and last firing.
  TrajectoryFrame truth;
};

/**
 * \brief Casts every beam from the sensor pose at its firing time.
 *
 * Azimuth step k fires at alpha = k / (steps - 1). Noise is drawn from a
 * generator seeded with (seed, scan_index).
 */
SimulatedScan simulate_scan(const World& world, const GroundTruthTrajectory& trajectory,
                            double t_begin, double t_end, const SensorSpec& sensor,
                            uint64_t seed = 0, int64_t scan_index = 0);

struct Scenario {
  std::string name;
  World world;
  GroundTruthTrajectory trajectory;
  SensorSpec sensor;
  size_t num_scans = 0;
  Profile profile = Profile::kDriving;
};

/// straight_corridor, curved_town_loop, shaky_handheld or yaw_jump.
Scenario make_scenario(const std::string& name);
std::vector<std::string> scenario_names();

/// Ground-truth frame of scan index under the scenario timing.
TrajectoryFrame truth_frame(const Scenario& scenario, int64_t index);

class SimulatedScanSource : public io::ScanSource {
 public:
  SimulatedScanSource(Scenario scenario, uint64_t seed, size_t max_scans = 0);

  std::optional<Scan> next() override;
  std::optional<size_t> size() const override { return num_scans_; }

  const Scenario& scenario() const { return scenario_; }
  /// Ground truth of the scans produced so far.
  const std::vector<TrajectoryFrame>& truth() const { return truth_; }

 private:
  Scenario scenario_;
  uint64_t seed_;
  size_t num_scans_;
  size_t cursor_ = 0;
  std::vector<TrajectoryFrame> truth_;
};

}  // namespace ctlo::sim
