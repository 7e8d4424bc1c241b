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
 * \file odometry.hpp
 * \brief Frame-to-map odometry loop: prediction, registration, robust checks, map update.
 */
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctlo/ct_icp.hpp"
#include "ctlo/io.hpp"
#include "ctlo/scan.hpp"
#include "ctlo/voxel_map.hpp"

namespace ctlo {

enum class Profile { kDriving, kHighFrequency };

/// Initial guess for a new scan.
enum class Prediction {
  /// Extrapolates the relative motion between the last two end poses.
  kConstantVelocity,
  /// Starts both poses at the previous end pose.
  kStatic,
};

const char* to_string(Prediction prediction);
Prediction prediction_from_string(const std::string& name);

const char* to_string(Profile profile);
Profile profile_from_string(const std::string& name);

struct PipelineConfig {
  Profile profile = Profile::kDriving;
  VoxelMapParams map;
  double keypoint_cell = 1.5;
  /// Grid cell used to thin a registered scan before map insertion.
  double map_sample_cell = 0.5;
  double min_range = 1.0;
  double max_range = 100.0;
  double eviction_radius = 150.0;
  SolverConfig solver;
  Prediction prediction = Prediction::kConstantVelocity;

  /// Registration is flagged when |t_b - t_e'| exceeds this gap (meters).
  double max_location_gap = 0.3;
  /// Registration is flagged when more keypoints than this fall in empty voxels.
  double max_empty_voxel_fraction = 0.2;
  /// Scans rotating at least this much from the previous end pose are not inserted.
  double max_insert_rotation_deg = 5.0;

  bool retry_enabled = true;
  double retry_cell_factor = 0.5;
  int retry_neighborhood_ring = 2;
  int retry_max_iterations = 10;

  /// Interpolation parameter of the pose reported for each scan.
  double report_alpha = 0.5;

  static PipelineConfig ForProfile(Profile profile);
};

struct ScanReport {
  int64_t index = 0;
  size_t num_points = 0;
  size_t num_keypoints = 0;
  int iterations = 0;
  bool converged = false;
  size_t residuals = 0;
  bool retried = false;
  /// Both attempts failed; the frame is the motion prediction.
  bool failed = false;
  bool inserted = false;
  /// Not inserted because of the orientation rule.
  bool orientation_skip = false;
  double rotation_change_deg = 0.0;
  double location_gap = 0.0;
  double empty_voxel_fraction = 0.0;
  size_t map_points = 0;
  size_t map_voxels = 0;
  double time_ms = 0.0;
  std::string failure;
};

/// Constant-velocity prior from the frames registered so far.
TrajectoryFrame predict_initial_frame(const std::vector<TrajectoryFrame>& previous);

/// Initial guess under the given prediction model.
TrajectoryFrame predict_initial_frame(const std::vector<TrajectoryFrame>& previous,
                                      Prediction prediction);

/** \brief Stateful odometry over a sequence of scans. */
class Odometry {
 public:
  explicit Odometry(const PipelineConfig& config);

  /// Registers the next scan and updates the map.
  ScanReport register_scan(const Scan& scan);

  const PipelineConfig& config() const { return config_; }
  const VoxelMap& map() const { return map_; }
  const std::vector<TrajectoryFrame>& frames() const { return frames_; }
  const std::vector<ScanReport>& reports() const { return reports_; }
  /// Per-scan poses at config().report_alpha.
  std::vector<Pose> reported_poses() const;

 private:
  struct Attempt {
    SolveResult result;
    bool ok = false;
    std::string failure;
    double gap = 0.0;
    double empty_fraction = 0.0;
  };

  Attempt attempt(const std::vector<ScanPoint>& keypoints, const TrajectoryFrame& init,
                  const TrajectoryFrame& prev, const SolverConfig& solver) const;

  PipelineConfig config_;
  VoxelMap map_;
  std::vector<TrajectoryFrame> frames_;
  std::vector<ScanReport> reports_;
};

struct OdometryResult {
  std::vector<TrajectoryFrame> frames;
  std::vector<ScanReport> reports;
  std::vector<Pose> poses;
};

/// Called after each scan with the input scan and its registered frame.
using ScanCallback =
    std::function<void(const Scan& scan, const TrajectoryFrame& frame, const ScanReport& report)>;

/// Registers every scan of the source. Throws kEmptyScan on an empty source.
OdometryResult run_odometry(io::ScanSource& source, const PipelineConfig& config,
                            const ScanCallback& callback = {});

}  // namespace ctlo
