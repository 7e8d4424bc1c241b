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

#pragma once

#include <cstdint>
#include <vector>

#include "ctlo/io.hpp"
#include "ctlo/loop_closure.hpp"
#include "ctlo/odometry.hpp"
#include "ctlo/pose_graph.hpp"

namespace ctlo {

/**
 * \brief Synthetic odometry drift added to the trajectory handed to the back-end.
 *
 * Each relative motion between consecutive mid-scan poses is right-multiplied
 * by a small rotation about z (bias plus Gaussian noise) and a Gaussian
 * translation. The registration map itself is unaffected.
 */
struct DriftParams {
  bool enabled = false;
  double yaw_bias_deg = 0.0;
  double yaw_sigma_deg = 0.0;
  double translation_sigma = 0.0;
  uint64_t seed = 0;
};

struct LoopClosureParams {
  bool enabled = true;
  /// Scans aggregated per elevation grid.
  int window = 100;
  /// Scans shared with the previous grid.
  int overlap = 30;
  /// Cell of the per-scan thinning kept for grid building.
  double point_cell = 0.2;
  ElevationGridParams grid;
  LoopDetectionParams detection;
  PoseGraphParams graph;
  int max_graph_iterations = 20;
};

struct SlamResult {
  OdometryResult odometry;
  /// Frames after drift injection, before any loop correction.
  std::vector<TrajectoryFrame> frames_before;
  std::vector<TrajectoryFrame> frames_after;
  std::vector<Pose> poses_before;
  std::vector<Pose> poses_after;
  std::vector<ElevationGrid> grids;
  std::vector<LoopConstraint> loops;
  int optimizations = 0;
  PoseGraph graph;
};

/// Odometry with online elevation-grid loop detection and pose-graph correction.
SlamResult run_slam(io::ScanSource& source, const PipelineConfig& odometry,
                    const LoopClosureParams& loop, const DriftParams& drift = {},
                    const ScanCallback& callback = {});

/// Applies the drift model to a sequence of frames, in order.
class DriftInjector {
 public:
  explicit DriftInjector(const DriftParams& params);
  TrajectoryFrame apply(const TrajectoryFrame& frame, double node_alpha = 0.5);

 private:
  DriftParams params_;
  uint64_t count_ = 0;
  bool has_prev_ = false;
  Pose prev_clean_;
  Pose prev_drifted_;
};

}  // namespace ctlo
