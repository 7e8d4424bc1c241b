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

#include "ctlo/slam.hpp"

#include <deque>
#include <random>

#include <spdlog/spdlog.h>

#include "ctlo/errors.hpp"

namespace ctlo {

DriftInjector::DriftInjector(const DriftParams& params) : params_(params) {}

TrajectoryFrame DriftInjector::apply(const TrajectoryFrame& frame, double node_alpha) {
  if (!params_.enabled) return frame;
  const Pose clean = interpolate_pose(frame, node_alpha);
  Pose drifted = clean;
  if (has_prev_) {
    std::seed_seq seq{params_.seed, count_};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double yaw =
        (params_.yaw_bias_deg + params_.yaw_sigma_deg * normal(rng)) * M_PI / 180.0;
    Vec3 dt;
    for (int k = 0; k < 3; ++k) dt(k) = params_.translation_sigma * normal(rng);
    drifted = prev_drifted_ * (prev_clean_.inverse() * clean) * Pose(rot_z(yaw), dt);
  }
  ++count_;
  has_prev_ = true;
  prev_clean_ = clean;
  prev_drifted_ = drifted;
  const Pose correction = drifted * clean.inverse();
  TrajectoryFrame out = frame;
  out.begin = correction * frame.begin;
  out.end = correction * frame.end;
  return out;
}

namespace {

std::vector<Pose> mid_poses(const std::vector<TrajectoryFrame>& frames, double alpha) {
  std::vector<Pose> poses;
  poses.reserve(frames.size());
  for (const auto& f : frames) poses.push_back(interpolate_pose(f, alpha));
  return poses;
}

}  // namespace

SlamResult run_slam(io::ScanSource& source, const PipelineConfig& odometry_config,
                    const LoopClosureParams& loop, const DriftParams& drift,
                    const ScanCallback& callback) {
  if (loop.window < 2 || loop.overlap < 0 || loop.overlap >= loop.window)
    throw Error(ErrorCode::kInvalidArgument, "grid window must exceed the overlap");
  Odometry odometry(odometry_config);
  DriftInjector injector(drift);
  SlamResult result;
  std::deque<std::vector<ScanPoint>> window_points;
  Pose tail_correction;
  const int64_t stride = loop.window - loop.overlap;
  const double alpha = loop.graph.node_alpha;

  while (auto scan = source.next()) {
    const ScanReport report = odometry.register_scan(*scan);
    const TrajectoryFrame& frame = odometry.frames().back();
    if (callback) callback(*scan, frame, report);

    const TrajectoryFrame drifted = injector.apply(frame, alpha);
    result.frames_before.push_back(drifted);
    TrajectoryFrame corrected = drifted;
    if (result.optimizations > 0) {
      corrected.begin = tail_correction * drifted.begin;
      corrected.end = tail_correction * drifted.end;
    }
    result.frames_after.push_back(corrected);

    if (!loop.enabled) continue;
    try {
      Scan clipped = clip_by_range(*scan, odometry_config.min_range, odometry_config.max_range);
      window_points.push_back(grid_sample_keypoints(clipped, loop.point_cell));
    } catch (const Error&) {
      window_points.emplace_back();
    }
    if (window_points.size() > static_cast<size_t>(loop.window)) window_points.pop_front();

    const auto count = static_cast<int64_t>(result.frames_after.size());
    if (count < loop.window || (count - loop.window) % stride != 0) continue;
    const int64_t start = count - loop.window;
    std::vector<TrajectoryFrame> frames(result.frames_after.begin() + start,
                                        result.frames_after.end());
    std::vector<std::vector<ScanPoint>> points(window_points.begin(), window_points.end());
    try {
      result.grids.push_back(build_elevation_grid(frames, points, start, loop.grid));
    } catch (const Error& e) {
      spdlog::warn("grid over scans {}..{} skipped: {}", start, count - 1, e.what());
      continue;
    }
    auto found = detect_loops_for_last(result.grids, loop.detection);
    spdlog::info("grid {} (scans {}..{}): {} loop(s)", result.grids.size() - 1, start, count - 1,
                 found.size());
    if (found.empty()) continue;
    result.loops.insert(result.loops.end(), found.begin(), found.end());

    const PoseGraph graph = build_graph(result.frames_after, result.loops, loop.graph);
    OptimizeReport opt;
    const std::vector<Pose> nodes = optimize(graph, loop.max_graph_iterations, &opt);
    spdlog::info("pose graph: {} nodes, {} loop edges, cost {:.4g} -> {:.4g} in {} iterations",
                 graph.nodes.size(), graph.num_loop_edges(), opt.initial_cost, opt.final_cost,
                 opt.iterations);
    result.frames_after = apply_corrections(result.frames_after, graph.nodes, nodes);
    tail_correction = nodes.back() * graph.nodes.back().inverse() * tail_correction;
    ++result.optimizations;
  }
  if (result.frames_after.empty())
    throw Error(ErrorCode::kEmptyScan, "the scan source is empty");

  result.odometry = {odometry.frames(), odometry.reports(), odometry.reported_poses()};
  result.graph = build_graph(result.frames_after, result.loops, loop.graph);
  result.poses_before = mid_poses(result.frames_before, alpha);
  result.poses_after = mid_poses(result.frames_after, alpha);
  return result;
}

}  // namespace ctlo
