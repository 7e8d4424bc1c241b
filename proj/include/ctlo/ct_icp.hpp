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
 * \file ct_icp.hpp
 * \brief Elastic scan-to-map registration of one scan.
 *
 * The scan trajectory is parameterized by a begin and an end pose; each
 * keypoint is moved to the world with the pose interpolated at its
 * normalized timestamp. The cost is the mean robust point-to-plane error
 * plus two soft priors tying the begin location to the previous end and
 * the scan displacement to the previous one:
 *
 *   F = 1/N sum rho(r_i^2) + beta_loc |t_b - t_e'|^2
 *       + beta_vel |(t_e - t_b) - (t_e' - t_b')|^2
 *
 * with r_i = a_i (p_i^W - q_i) . n_i.
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctlo/geometry.hpp"
#include "ctlo/scan.hpp"
#include "ctlo/voxel_map.hpp"

namespace ctlo {

enum class MotionMode {
  /// Two poses, keypoints interpolated at every iteration.
  kElastic,
  /// Keypoints distorted once with the initial frame, single end pose optimized.
  kConstantVelocityRigid,
  /// No distortion, single pose.
  kNone,
};

const char* to_string(MotionMode mode);
MotionMode motion_mode_from_string(const std::string& name);

struct SolverConfig {
  double beta_loc = 0.001;
  double beta_vel = 0.001;
  /// Weight of an optional |Log(R_e'^T R_b)|^2 term. Off by default.
  double beta_rot_gap = 0.0;
  int max_iterations = 5;
  /// Convergence thresholds on the step of both poses.
  double trans_tol = 0.001;
  double rot_tol_deg = 0.01;
  /// Cauchy loss scale (meters).
  double robust_scale = 0.3;
  MotionMode mode = MotionMode::kElastic;
  /// Maximum absolute point-to-plane distance of a residual.
  double outlier_gate = 0.5;
  int num_neighbors = 20;
  /// 1 searches 27 voxels, 2 searches 125.
  int neighborhood_ring = 1;
  size_t min_residuals = 20;
  double damping = 1e-6;
  bool line_search = true;
  int max_halvings = 4;
};

struct Residual {
  ScanPoint keypoint;
  Vec3 closest = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double weight = 1.0;
};

/// Jacobian row ordered (dtheta_b, dt_b, dtheta_e, dt_e), right perturbations.
struct Linearization {
  Eigen::Matrix<double, 1, 12> jacobian;
  double value = 0.0;
};

struct ResidualBuildStats {
  size_t keypoints = 0;
  size_t empty = 0;
  size_t degenerate = 0;
  size_t gated = 0;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  size_t residual_count = 0;
  double step_translation = 0.0;
  double step_rotation_deg = 0.0;
  /// Objective before and after every accepted step (fixed correspondences).
  std::vector<std::pair<double, double>> accepted_steps;
};

struct SolveResult {
  TrajectoryFrame frame;
  SolveReport report;
};

/// Cauchy loss rho(s) = c^2 log(1 + s / c^2) evaluated on a squared residual.
double cauchy_loss(double squared_residual, double scale);
/// d rho / d s.
double cauchy_weight(double squared_residual, double scale);

/// Right-multiplicative update of both poses.
TrajectoryFrame apply_increment(const TrajectoryFrame& frame,
                                const Eigen::Matrix<double, 12, 1>& delta);

double residual_value(const Residual& residual, const TrajectoryFrame& frame);
Linearization linearize(const Residual& residual, const TrajectoryFrame& frame, double alpha);
inline Linearization linearize(const Residual& residual, const TrajectoryFrame& frame) {
  return linearize(residual, frame, residual.keypoint.alpha);
}

/**
 * \brief Point-to-plane residuals of keypoints placed with frame_guess.
 *
 * Keypoints without a neighborhood of at least 5 points or farther than the
 * outlier gate from their tangent plane are dropped. Throws
 * ErrorCode::kTooFewResiduals below cfg.min_residuals.
 */
std::vector<Residual> build_residuals(const VoxelMap& map, const TrajectoryFrame& frame_guess,
                                      std::span<const ScanPoint> keypoints,
                                      const SolverConfig& cfg = {},
                                      ResidualBuildStats* stats = nullptr);

double objective(std::span<const Residual> residuals, const TrajectoryFrame& frame,
                 const TrajectoryFrame& prev_frame, const SolverConfig& cfg);

/**
 * \brief Gauss-Newton registration of one scan against the map.
 *
 * Residuals are rebuilt at every iteration. Throws ErrorCode::kSolverFailure
 * on a non-finite step and propagates ErrorCode::kTooFewResiduals.
 */
SolveResult solve(const VoxelMap& map, std::span<const ScanPoint> keypoints,
                  const TrajectoryFrame& frame_init, const TrajectoryFrame& prev_frame,
                  const SolverConfig& cfg);

}  // namespace ctlo
