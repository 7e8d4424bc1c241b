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

#include "ctlo/odometry.hpp"

#include <chrono>
#include <cmath>

#include <spdlog/spdlog.h>

#include "ctlo/errors.hpp"

namespace ctlo {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

std::vector<Vec3> to_world(std::span<const ScanPoint> points, const TrajectoryFrame& frame) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const ScanPoint& p : points) out.push_back(interpolate_pose(frame, p.alpha) * p.position);
  return out;
}

}  // namespace

const char* to_string(Profile profile) {
  return profile == Profile::kDriving ? "driving" : "high-frequency";
}

Profile profile_from_string(const std::string& name) {
  if (name == "driving") return Profile::kDriving;
  if (name == "high-frequency" || name == "high_frequency") return Profile::kHighFrequency;
  throw Error(ErrorCode::kInvalidArgument, "unknown profile '" + name + "'");
}

const char* to_string(Prediction prediction) {
  return prediction == Prediction::kStatic ? "static" : "constant-velocity";
}

Prediction prediction_from_string(const std::string& name) {
  if (name == "constant-velocity") return Prediction::kConstantVelocity;
  if (name == "static") return Prediction::kStatic;
  throw Error(ErrorCode::kInvalidArgument, "unknown prediction '" + name + "'");
}

PipelineConfig PipelineConfig::ForProfile(Profile profile) {
  PipelineConfig cfg;
  cfg.profile = profile;
  if (profile == Profile::kHighFrequency) {
    cfg.map.voxel_size = 0.8;
    cfg.keypoint_cell = 0.5;
    cfg.map_sample_cell = 0.3;
    cfg.eviction_radius = 60.0;
    cfg.solver.robust_scale = 0.1;
    cfg.solver.max_iterations = 15;
  }
  return cfg;
}

TrajectoryFrame predict_initial_frame(const std::vector<TrajectoryFrame>& previous,
                                      Prediction prediction) {
  if (prediction == Prediction::kConstantVelocity) return predict_initial_frame(previous);
  TrajectoryFrame f;
  f.scan_index = static_cast<int64_t>(previous.size());
  if (previous.empty()) return f;
  f.begin = previous.back().end;
  f.end = f.begin;
  return f;
}

TrajectoryFrame predict_initial_frame(const std::vector<TrajectoryFrame>& previous) {
  TrajectoryFrame f;
  f.scan_index = static_cast<int64_t>(previous.size());
  if (previous.empty()) return f;
  const Pose& last = previous.back().end;
  f.begin = last;
  if (previous.size() == 1) {
    f.end = last;
    return f;
  }
  const Pose& before = previous[previous.size() - 2].end;
  f.end = last * (before.inverse() * last);
  return f;
}

Odometry::Odometry(const PipelineConfig& config) : config_(config), map_(config.map) {}

Odometry::Attempt Odometry::attempt(const std::vector<ScanPoint>& keypoints,
                                    const TrajectoryFrame& init, const TrajectoryFrame& prev,
                                    const SolverConfig& solver) const {
  Attempt a;
  try {
    a.result = solve(map_, keypoints, init, prev, solver);
  } catch (const Error& e) {
    a.failure = e.what();
    return a;
  }
  const TrajectoryFrame& f = a.result.frame;
  a.gap = (f.begin.translation - prev.end.translation).norm();
  size_t empty = 0;
  for (const Vec3& p : to_world(keypoints, f))
    if (!map_.is_occupied(p)) ++empty;
  a.empty_fraction = keypoints.empty() ? 1.0 : double(empty) / double(keypoints.size());
  // single-pose modes do not estimate an independent begin pose
  if (solver.mode == MotionMode::kElastic && a.gap > config_.max_location_gap) {
    a.failure = "location gap " + std::to_string(a.gap) + " m";
  } else if (a.empty_fraction > config_.max_empty_voxel_fraction) {
    a.failure = "empty-voxel fraction " + std::to_string(a.empty_fraction);
  } else {
    a.ok = true;
  }
  return a;
}

ScanReport Odometry::register_scan(const Scan& raw) {
  const auto t_start = std::chrono::steady_clock::now();
  ScanReport report;
  report.index = static_cast<int64_t>(frames_.size());
  report.num_points = raw.size();

  TrajectoryFrame frame = predict_initial_frame(frames_, config_.prediction);
  frame.tau_begin = raw.tau_begin;
  frame.tau_end = raw.tau_end;

  Scan scan;
  bool usable = true;
  try {
    scan = clip_by_range(raw, config_.min_range, config_.max_range);
  } catch (const Error& e) {
    usable = false;
    report.failed = true;
    report.failure = e.what();
  }

  if (usable) {
    std::vector<ScanPoint> keypoints = grid_sample_keypoints(scan, config_.keypoint_cell);
    report.num_keypoints = keypoints.size();
    if (!frames_.empty() && !map_.empty()) {
      const TrajectoryFrame& prev = frames_.back();
      Attempt a = attempt(keypoints, frame, prev, config_.solver);
      if (!a.ok && config_.retry_enabled) {
        spdlog::debug("scan {}: {}; retrying", report.index, a.failure);
        report.retried = true;
        SolverConfig conservative = config_.solver;
        conservative.neighborhood_ring = config_.retry_neighborhood_ring;
        conservative.max_iterations = config_.retry_max_iterations;
        keypoints = grid_sample_keypoints(scan, config_.keypoint_cell * config_.retry_cell_factor);
        a = attempt(keypoints, frame, prev, conservative);
      }
      report.location_gap = a.gap;
      report.empty_voxel_fraction = a.empty_fraction;
      report.iterations = a.result.report.iterations;
      report.converged = a.result.report.converged;
      report.residuals = a.result.report.residual_count;
      if (a.ok) {
        frame.begin = a.result.frame.begin;
        frame.end = a.result.frame.end;
      } else {
        report.failed = true;
        report.failure = a.failure;
        spdlog::warn("scan {}: registration failed ({}); keeping the prediction", report.index,
                     a.failure);
      }
      report.rotation_change_deg =
          kRadToDeg * angular_distance(prev.end.rotation, frame.end.rotation);
      report.orientation_skip = report.rotation_change_deg >= config_.max_insert_rotation_deg;
    }
    if (!report.failed && !report.orientation_skip) {
      const auto thinned = grid_sample_keypoints(scan, config_.map_sample_cell);
      const auto world = to_world(thinned, frame);
      map_.insert_scan(world);
      report.inserted = true;
    }
    map_.evict_far_voxels(frame.end.translation, config_.eviction_radius);
  }

  frames_.push_back(frame);
  report.map_points = map_.num_points();
  report.map_voxels = map_.num_voxels();
  report.time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  reports_.push_back(report);
  return report;
}

std::vector<Pose> Odometry::reported_poses() const {
  std::vector<Pose> poses;
  poses.reserve(frames_.size());
  for (const auto& f : frames_) poses.push_back(interpolate_pose(f, config_.report_alpha));
  return poses;
}

OdometryResult run_odometry(io::ScanSource& source, const PipelineConfig& config,
                            const ScanCallback& callback) {
  Odometry odometry(config);
  while (auto scan = source.next()) {
    const ScanReport report = odometry.register_scan(*scan);
    spdlog::debug("scan {}: {} keypoints, {} iterations, {:.1f} ms{}", report.index,
                  report.num_keypoints, report.iterations, report.time_ms,
                  report.inserted ? "" : " (not inserted)");
    if (callback) callback(*scan, odometry.frames().back(), report);
  }
  if (odometry.frames().empty()) throw Error(ErrorCode::kEmptyScan, "the scan source is empty");
  return {odometry.frames(), odometry.reports(), odometry.reported_poses()};
}

}  // namespace ctlo
