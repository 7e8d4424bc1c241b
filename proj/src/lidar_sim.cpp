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

#include "ctlo/lidar_sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include "ctlo/errors.hpp"

namespace ctlo::sim {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<double> intersect_plane(const Plane& pl, const Vec3& o, const Vec3& d) {
  const double denom = pl.normal.dot(d);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (pl.offset - pl.normal.dot(o)) / denom;
  if (t <= 0.0) return std::nullopt;
  return t;
}

std::optional<double> intersect_box(const Box& box, const Vec3& o, const Vec3& d) {
  const Mat3 Rt = box.pose.rotation_matrix().transpose();
  const Vec3 lo = Rt * (o - box.pose.translation);
  const Vec3 ld = Rt * d;
  double t_near = -kInf, t_far = kInf;
  for (int i = 0; i < 3; ++i) {
    const double h = box.half_extents(i);
    if (std::abs(ld(i)) < 1e-15) {
      if (lo(i) < -h || lo(i) > h) return std::nullopt;
      continue;
    }
    double t1 = (-h - lo(i)) / ld(i);
    double t2 = (h - lo(i)) / ld(i);
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > 0.0) return t_near;
  if (t_far > 0.0) return t_far;
  return std::nullopt;
}

double box_surface_distance(const Box& box, const Vec3& p) {
  const Vec3 local = box.pose.rotation.conjugate() * (p - box.pose.translation);
  const Vec3 q = local.cwiseAbs() - box.half_extents;
  const double outside = q.cwiseMax(0.0).norm();
  if (outside > 0.0) return outside;
  return -q.maxCoeff();
}

// Integral of (v0 + a s) exp(i w s) ds over [0, t].
std::complex<double> planar_displacement(double v0, double a, double w, double t) {
  using C = std::complex<double>;
  const double wt = w * t;
  if (std::abs(wt) < 1e-3) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const C i(0.0, 1.0);
    return C(v0 * t + 0.5 * a * t2, 0.0) + i * w * (v0 * t2 / 2.0 + a * t3 / 3.0) -
           w * w * 0.5 * (v0 * t3 / 3.0 + a * t4 / 4.0) -
           i * w * w * w / 6.0 * (v0 * t4 / 4.0 + a * t4 * t / 5.0);
  }
  const C iw(0.0, w);
  const C e = std::exp(C(0.0, wt));
  return (v0 + a * t) * e / iw - v0 / iw - a * (e - 1.0) / (iw * iw);
}

struct Layout {
  std::mt19937_64 rng;
  explicit Layout(uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
};

Box axis_box(const Vec3& center, const Vec3& half) { return Box{Pose(Quat::Identity(), center), half}; }

// Buildings on both sides of a straight road segment from p along unit direction d.
void line_street(World& world, Layout& layout, const Vec3& p, const Vec3& d, double u_begin,
                 double u_end, double setback_min, double setback_max, bool left, bool right,
                 double post_offset) {
  const Vec3 n(-d.y(), d.x(), 0.0);
  const double yaw = std::atan2(d.y(), d.x());
  const Quat q = rot_z(yaw);
  for (int side : {1, -1}) {
    if ((side > 0 && !left) || (side < 0 && !right)) continue;
    double u = u_begin;
    while (u < u_end) {
      const double width = layout.uniform(6.0, 14.0);
      const double depth = layout.uniform(5.0, 10.0);
      const double height = layout.uniform(4.0, 15.0);
      const double setback = layout.uniform(setback_min, setback_max);
      const double w = std::min(width, u_end - u);
      const Vec3 center = p + d * (u + w / 2.0) + n * side * (setback + depth / 2.0) +
                          Vec3(0, 0, height / 2.0);
      world.add_box(Box{Pose(q, center), Vec3(w / 2.0, depth / 2.0, height / 2.0)});
      u += w + layout.uniform(1.0, 5.0);
    }
    if (post_offset > 0.0) {
      double v = u_begin + layout.uniform(0.0, 8.0);
      while (v < u_end) {
        const Vec3 center = p + d * v + n * side * post_offset + Vec3(0, 0, 2.5);
        world.add_box(Box{Pose(q, center), Vec3(0.2, 0.2, 2.5)});
        v += layout.uniform(8.0, 16.0);
      }
    }
  }
}

// Small randomly oriented objects between the road and the facades.
void street_clutter(World& world, Layout& layout, const Vec3& p, const Vec3& d, double u_begin,
                    double u_end) {
  const Vec3 n(-d.y(), d.x(), 0.0);
  for (int side : {1, -1}) {
    double u = u_begin + layout.uniform(0.0, 6.0);
    while (u < u_end) {
      const Vec3 half(layout.uniform(0.5, 2.0), layout.uniform(0.4, 1.2), layout.uniform(0.5, 1.5));
      const Vec3 center = p + d * u + n * side * layout.uniform(3.5, 6.0) + Vec3(0, 0, half.z());
      world.add_box(Box{Pose(rot_z(layout.uniform(-M_PI, M_PI)), center), half});
      u += layout.uniform(6.0, 15.0);
    }
  }
}

Scenario straight_corridor() {
  Scenario s;
  s.name = "straight_corridor";
  s.world.add_plane({Vec3::UnitZ(), 0.0});
  Layout layout(11);
  line_street(s.world, layout, Vec3::Zero(), Vec3::UnitX(), -40.0, 360.0, 7.0, 11.0, true, true,
              5.5);
  // start from rest, then hold 10 m/s
  s.trajectory = GroundTruthTrajectory(Vec3(0, 0, 1.8), 0.0, 0.0,
                                       {{2.0, 5.0, 0.0}, {60.0, 0.0, 0.0}});
  s.num_scans = 300;
  s.profile = Profile::kDriving;
  return s;
}

Scenario curved_town_loop() {
  Scenario s;
  s.name = "curved_town_loop";
  s.world.add_plane({Vec3::UnitZ(), 0.0});
  const double r = 15.0;
  const double L = (400.0 - 2.0 * M_PI * r) / 4.0;
  Layout layout(23);
  const Vec3 starts[4] = {Vec3(0, 0, 0), Vec3(L + r, r, 0), Vec3(L, L + 2 * r, 0),
                          Vec3(-r, L + r, 0)};
  const Vec3 dirs[4] = {Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitX(), -Vec3::UnitY()};
  for (int k = 0; k < 4; ++k) {
    line_street(s.world, layout, starts[k], dirs[k], 5.0, L - 5.0, 7.0, 11.0, true, false, 5.5);
    line_street(s.world, layout, starts[k], dirs[k], -12.0, L + 12.0, 7.0, 11.0, false, true,
                5.5);
    street_clutter(s.world, layout, starts[k], dirs[k], 2.0, L - 2.0);
  }
  const double v = 5.0;
  const double ramp = 2.0;
  const double ramp_distance = 0.5 * v * ramp;
  std::vector<MotionSegment> motion{{ramp, v / ramp, 0.0}, {(L - ramp_distance) / v, 0.0, 0.0}};
  for (int k = 0; k < 4; ++k) {
    motion.push_back({0.5 * M_PI * r / v, 0.0, v / r});
    if (k < 3) motion.push_back({L / v, 0.0, 0.0});
  }
  // past the start and down the first street again
  motion.push_back({(ramp_distance + 0.9 * L) / v, 0.0, 0.0});
  s.trajectory = GroundTruthTrajectory(Vec3(0, 0, 1.8), 0.0, 0.0, motion);
  s.num_scans = 940;
  s.profile = Profile::kDriving;
  return s;
}

Scenario shaky_handheld() {
  Scenario s;
  s.name = "shaky_handheld";
  s.world.add_plane({Vec3::UnitZ(), 0.0});
  Layout layout(37);
  line_street(s.world, layout, Vec3::Zero(), Vec3::UnitX(), -30.0, 170.0, 4.0, 7.0, true, true,
              3.0);
  Oscillation osc;
  osc.amplitude = Vec3(2.0, 3.0, 10.0) * kDegToRad;
  osc.frequency = Vec3(0.9, 1.3, 2.0);
  osc.ramp = 2.0;
  s.trajectory =
      GroundTruthTrajectory(Vec3(0, 0, 1.5), 0.0, 0.0, {{1.0, 3.0, 0.0}, {30.0, 0.0, 0.0}}, {},
                            osc);
  s.sensor.period = 0.05;
  s.num_scans = 200;
  s.profile = Profile::kHighFrequency;
  return s;
}

Scenario yaw_jump() {
  Scenario s;
  s.name = "yaw_jump";
  s.world.add_plane({Vec3::UnitZ(), 0.0});
  Layout layout(53);
  line_street(s.world, layout, Vec3(-20, 0, 0), Vec3::UnitX(), 0.0, 60.0, 4.0, 6.0, true, true,
              2.5);
  for (int i = 0; i < 25; ++i) {
    const double x = layout.uniform(-15.0, 35.0);
    const double y = layout.uniform(8.0, 25.0) * (i % 2 == 0 ? 1.0 : -1.0);
    const Vec3 half(layout.uniform(0.5, 2.0), layout.uniform(0.5, 2.0), layout.uniform(1.0, 4.0));
    s.world.add_box(axis_box(Vec3(x, y, half.z()), half));
  }
  std::vector<RotationSegment> rotation;
  const double step_deg = 7.0;
  for (int k = 0; k < 9; ++k) {
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    const double rate = sign * step_deg * kDegToRad / 0.1;
    rotation.push_back({k == 0 ? 1.0 : 0.6, Vec3::Zero()});
    rotation.push_back({0.1, Vec3(0, 0, 0.5 * rate)});
    rotation.push_back({0.2, Vec3(0, 0, rate)});
    rotation.push_back({0.1, Vec3(0, 0, 0.5 * rate)});
  }
  s.trajectory = GroundTruthTrajectory(Vec3(0, 0, 1.8), 0.0, 0.0,
                                       {{1.0, 1.5, 0.0}, {30.0, 0.0, 0.0}}, rotation);
  s.num_scans = 100;
  s.profile = Profile::kDriving;
  return s;
}

}  // namespace

std::optional<double> World::intersect(const Vec3& origin, const Vec3& direction,
                                       double max_range) const {
  double best = max_range;
  bool hit = false;
  for (const Plane& pl : planes_) {
    if (auto t = intersect_plane(pl, origin, direction); t && *t < best) {
      best = *t;
      hit = true;
    }
  }
  for (const Box& box : boxes_) {
    const Vec3 v = box.pose.translation - origin;
    const double radius = box.half_extents.norm();
    const double tc = v.dot(direction);
    if (tc < -radius || tc - radius > best) continue;
    if (v.squaredNorm() - tc * tc > radius * radius) continue;
    if (auto t = intersect_box(box, origin, direction); t && *t < best) {
      best = *t;
      hit = true;
    }
  }
  if (!hit) return std::nullopt;
  return best;
}

double World::distance(const Vec3& p) const {
  double best = kInf;
  for (const Plane& pl : planes_) best = std::min(best, std::abs(pl.normal.dot(p) - pl.offset));
  for (const Box& box : boxes_) best = std::min(best, box_surface_distance(box, p));
  return best;
}

World World::crop(const Vec3& center, double radius) const {
  World out;
  out.planes_ = planes_;
  for (const Box& box : boxes_)
    if ((box.pose.translation - center).norm() <= radius + box.half_extents.norm())
      out.boxes_.push_back(box);
  return out;
}

GroundTruthTrajectory::GroundTruthTrajectory(const Vec3& start, double heading, double speed,
                                             std::vector<MotionSegment> motion,
                                             std::vector<RotationSegment> rotation,
                                             Oscillation oscillation)
    : z_(start.z()),
      motion_(std::move(motion)),
      rotation_(std::move(rotation)),
      oscillation_(oscillation) {
  MotionState state{0.0, start.x(), start.y(), heading, speed};
  for (const MotionSegment& seg : motion_) {
    motion_states_.push_back(state);
    const std::complex<double> d =
        std::exp(std::complex<double>(0.0, state.heading)) *
        planar_displacement(state.speed, seg.acceleration, seg.turn_rate, seg.duration);
    state = MotionState{state.t0 + seg.duration, state.x + d.real(), state.y + d.imag(),
                        state.heading + seg.turn_rate * seg.duration,
                        state.speed + seg.acceleration * seg.duration};
  }
  motion_states_.push_back(state);
  motion_.push_back({kInf, 0.0, 0.0});

  RotationState rs{0.0, Quat::Identity()};
  for (const RotationSegment& seg : rotation_) {
    rotation_states_.push_back(rs);
    rs = RotationState{rs.t0 + seg.duration,
                       (rs.q * exp_quat(seg.angular_velocity * seg.duration)).normalized()};
  }
  rotation_states_.push_back(rs);
  rotation_.push_back({kInf, Vec3::Zero()});
}

double GroundTruthTrajectory::duration() const { return motion_states_.back().t0; }

double GroundTruthTrajectory::speed(double t) const {
  t = std::max(t, 0.0);
  size_t k = 0;
  while (k + 1 < motion_states_.size() && t >= motion_states_[k + 1].t0) ++k;
  return motion_states_[k].speed + motion_[k].acceleration * (t - motion_states_[k].t0);
}

Pose GroundTruthTrajectory::pose(double t) const {
  t = std::max(t, 0.0);
  size_t k = 0;
  while (k + 1 < motion_states_.size() && t >= motion_states_[k + 1].t0) ++k;
  const MotionState& s = motion_states_[k];
  const MotionSegment& seg = motion_[k];
  const double dt = t - s.t0;
  const std::complex<double> d = std::exp(std::complex<double>(0.0, s.heading)) *
                                 planar_displacement(s.speed, seg.acceleration, seg.turn_rate, dt);
  const double heading = s.heading + seg.turn_rate * dt;

  size_t j = 0;
  while (j + 1 < rotation_states_.size() && t >= rotation_states_[j + 1].t0) ++j;
  const Quat offset =
      rotation_states_[j].q * exp_quat(rotation_[j].angular_velocity * (t - rotation_states_[j].t0));

  double envelope = 1.0;
  if (oscillation_.ramp > 0.0 && t < oscillation_.ramp) {
    const double u = std::max(t, 0.0) / oscillation_.ramp;
    envelope = u * u * (3.0 - 2.0 * u);
  }
  const Vec3 osc = envelope * Vec3(
      oscillation_.amplitude.x() * std::sin(2.0 * M_PI * oscillation_.frequency.x() * t),
      oscillation_.amplitude.y() * std::sin(2.0 * M_PI * oscillation_.frequency.y() * t),
      oscillation_.amplitude.z() * std::sin(2.0 * M_PI * oscillation_.frequency.z() * t));
  const Quat q_osc = Quat(Eigen::AngleAxisd(osc.z(), Vec3::UnitZ())) *
                     Quat(Eigen::AngleAxisd(osc.y(), Vec3::UnitY())) *
                     Quat(Eigen::AngleAxisd(osc.x(), Vec3::UnitX()));
  return Pose(rot_z(heading) * q_osc * offset, Vec3(s.x + d.real(), s.y + d.imag(), z_));
}

int SensorSpec::azimuth_steps() const {
  if (!(azimuth_step_deg > 0.0)) return 0;
  return static_cast<int>(std::lround(360.0 / azimuth_step_deg));
}

SimulatedScan simulate_scan(const World& world, const GroundTruthTrajectory& trajectory,
                            double t_begin, double t_end, const SensorSpec& sensor, uint64_t seed,
                            int64_t scan_index) {
  SimulatedScan out;
  out.truth.begin = trajectory.pose(t_begin);
  out.truth.end = trajectory.pose(t_end);
  out.truth.scan_index = scan_index;
  out.truth.tau_begin = t_begin;
  out.truth.tau_end = t_end;
  Scan& scan = out.scan;
  scan.index = scan_index;
  scan.tau_begin = t_begin;
  scan.tau_end = t_end;
  scan.has_timestamps = true;
  scan.has_alpha = true;

  const int steps = sensor.azimuth_steps();
  if (sensor.beams <= 0 || steps <= 0) return out;

  std::seed_seq seq{seed, static_cast<uint64_t>(scan_index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 1.0);

  const double reach =
      sensor.max_range + (out.truth.end.translation - out.truth.begin.translation).norm();
  const World local = world.crop(out.truth.begin.translation, reach);

  std::vector<double> elevations(sensor.beams);
  for (int b = 0; b < sensor.beams; ++b) {
    const double f = sensor.beams == 1 ? 0.0 : double(b) / double(sensor.beams - 1);
    elevations[b] =
        (sensor.min_elevation_deg + f * (sensor.max_elevation_deg - sensor.min_elevation_deg)) *
        kDegToRad;
  }

  scan.points.reserve(static_cast<size_t>(steps) * sensor.beams);
  for (int k = 0; k < steps; ++k) {
    const double alpha = steps == 1 ? 0.0 : double(k) / double(steps - 1);
    const double t = t_begin + alpha * (t_end - t_begin);
    const Pose pose = trajectory.pose(t);
    const Mat3 R = pose.rotation_matrix();
    const double az = sensor.start_azimuth_deg * kDegToRad + k * sensor.azimuth_step_deg * kDegToRad;
    for (int b = 0; b < sensor.beams; ++b) {
      const Vec3 dir(std::cos(elevations[b]) * std::cos(az),
                     std::cos(elevations[b]) * std::sin(az), std::sin(elevations[b]));
      const auto range = local.intersect(pose.translation, R * dir, sensor.max_range);
      if (!range) continue;
      double r = *range;
      if (sensor.noise_sigma > 0.0) r += sensor.noise_sigma * noise(rng);
      if (r <= 0.0) continue;
      scan.points.push_back({dir * r, alpha, t});
    }
  }
  return out;
}

Scenario make_scenario(const std::string& name) {
  if (name == "straight_corridor") return straight_corridor();
  if (name == "curved_town_loop") return curved_town_loop();
  if (name == "shaky_handheld") return shaky_handheld();
  if (name == "yaw_jump") return yaw_jump();
  throw Error(ErrorCode::kUnknownScenario, "unknown scenario '" + name + "'");
}

std::vector<std::string> scenario_names() {
  return {"straight_corridor", "curved_town_loop", "shaky_handheld", "yaw_jump"};
}

TrajectoryFrame truth_frame(const Scenario& scenario, int64_t index) {
  TrajectoryFrame f;
  f.scan_index = index;
  f.tau_begin = index * scenario.sensor.period;
  f.tau_end = f.tau_begin + scenario.sensor.period;
  f.begin = scenario.trajectory.pose(f.tau_begin);
  f.end = scenario.trajectory.pose(f.tau_end);
  return f;
}

SimulatedScanSource::SimulatedScanSource(Scenario scenario, uint64_t seed, size_t max_scans)
    : scenario_(std::move(scenario)),
      seed_(seed),
      num_scans_(max_scans > 0 ? std::min(max_scans, scenario_.num_scans) : scenario_.num_scans) {}

std::optional<Scan> SimulatedScanSource::next() {
  if (cursor_ >= num_scans_) return std::nullopt;
  const int64_t index = static_cast<int64_t>(cursor_++);
  const double t_begin = index * scenario_.sensor.period;
  SimulatedScan sim = simulate_scan(scenario_.world, scenario_.trajectory, t_begin,
                                    t_begin + scenario_.sensor.period, scenario_.sensor, seed_,
                                    index);
  truth_.push_back(sim.truth);
  return std::move(sim.scan);
}

}  // namespace ctlo::sim
