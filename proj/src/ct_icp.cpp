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

#include "ctlo/ct_icp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "ctlo/errors.hpp"

namespace ctlo {

namespace {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kRadToDeg = 180.0 / M_PI;

double constraint_cost(const TrajectoryFrame& frame, const TrajectoryFrame& prev,
                       const SolverConfig& cfg) {
  double cost = 0.0;
  if (cfg.beta_loc > 0.0)
    cost += cfg.beta_loc * (frame.begin.translation - prev.end.translation).squaredNorm();
  if (cfg.beta_vel > 0.0) {
    const Vec3 v = frame.end.translation - frame.begin.translation;
    const Vec3 v_prev = prev.end.translation - prev.begin.translation;
    cost += cfg.beta_vel * (v - v_prev).squaredNorm();
  }
  if (cfg.beta_rot_gap > 0.0)
    cost += cfg.beta_rot_gap *
            log_quat(prev.end.rotation.conjugate() * frame.begin.rotation).squaredNorm();
  return cost;
}

double icp_cost(std::span<const Residual> residuals, const TrajectoryFrame& frame,
                double scale) {
  if (residuals.empty()) return 0.0;
  double sum = 0.0;
  for (const Residual& r : residuals) {
    const double v = residual_value(r, frame);
    sum += cauchy_loss(v * v, scale);
  }
  return sum / static_cast<double>(residuals.size());
}

// Adds the normal-equation contributions of the soft priors (12-dof case).
void add_constraints(const TrajectoryFrame& frame, const TrajectoryFrame& prev,
                     const SolverConfig& cfg, Mat12& H, Vec12& g) {
  if (cfg.beta_loc > 0.0) {
    const Vec3 e = frame.begin.translation - prev.end.translation;
    H.block<3, 3>(3, 3) += cfg.beta_loc * Mat3::Identity();
    g.segment<3>(3) += cfg.beta_loc * e;
  }
  if (cfg.beta_vel > 0.0) {
    const Vec3 e = (frame.end.translation - frame.begin.translation) -
                   (prev.end.translation - prev.begin.translation);
    // de/dt_b = -I, de/dt_e = I
    H.block<3, 3>(3, 3) += cfg.beta_vel * Mat3::Identity();
    H.block<3, 3>(9, 9) += cfg.beta_vel * Mat3::Identity();
    H.block<3, 3>(3, 9) -= cfg.beta_vel * Mat3::Identity();
    H.block<3, 3>(9, 3) -= cfg.beta_vel * Mat3::Identity();
    g.segment<3>(3) -= cfg.beta_vel * e;
    g.segment<3>(9) += cfg.beta_vel * e;
  }
  if (cfg.beta_rot_gap > 0.0) {
    const Vec3 e = log_quat(prev.end.rotation.conjugate() * frame.begin.rotation);
    const Mat3 J = right_jacobian_inverse(e);
    H.block<3, 3>(0, 0) += cfg.beta_rot_gap * J.transpose() * J;
    g.segment<3>(0) += cfg.beta_rot_gap * J.transpose() * e;
  }
}

// Pre-distorts keypoints into the end-pose frame of `frame` and sets alpha = 1.
std::vector<ScanPoint> rigidify(std::span<const ScanPoint> keypoints, const TrajectoryFrame& frame,
                                bool distort) {
  std::vector<ScanPoint> out(keypoints.begin(), keypoints.end());
  const Pose end_inv = frame.end.inverse();
  for (ScanPoint& p : out) {
    if (distort) p.position = end_inv * (interpolate_pose(frame, p.alpha) * p.position);
    p.alpha = 1.0;
  }
  return out;
}

}  // namespace

const char* to_string(MotionMode mode) {
  switch (mode) {
    case MotionMode::kElastic: return "elastic";
    case MotionMode::kConstantVelocityRigid: return "constant-velocity";
    case MotionMode::kNone: return "none";
  }
  return "elastic";
}

MotionMode motion_mode_from_string(const std::string& name) {
  if (name == "elastic") return MotionMode::kElastic;
  if (name == "constant-velocity" || name == "cv") return MotionMode::kConstantVelocityRigid;
  if (name == "none") return MotionMode::kNone;
  throw Error(ErrorCode::kInvalidArgument, "unknown motion mode '" + name + "'");
}

double cauchy_loss(double squared_residual, double scale) {
  const double c2 = scale * scale;
  return c2 * std::log1p(squared_residual / c2);
}

double cauchy_weight(double squared_residual, double scale) {
  return 1.0 / (1.0 + squared_residual / (scale * scale));
}

TrajectoryFrame apply_increment(const TrajectoryFrame& frame, const Vec12& delta) {
  TrajectoryFrame out = frame;
  out.begin.rotation = (frame.begin.rotation * exp_quat(delta.segment<3>(0))).normalized();
  out.begin.translation = frame.begin.translation + delta.segment<3>(3);
  out.end.rotation = (frame.end.rotation * exp_quat(delta.segment<3>(6))).normalized();
  out.end.translation = frame.end.translation + delta.segment<3>(9);
  return out;
}

double residual_value(const Residual& r, const TrajectoryFrame& frame) {
  const Vec3 pw = interpolate_pose(frame, r.keypoint.alpha) * r.keypoint.position;
  return r.weight * (pw - r.closest).dot(r.normal);
}

Linearization linearize(const Residual& r, const TrajectoryFrame& frame, double alpha) {
  alpha = std::clamp(alpha, 0.0, 1.0);
  Linearization lin;
  const Quat qb = frame.begin.rotation.normalized();
  const Quat qe = frame.end.rotation.normalized();

  // R_alpha = R_b Exp(alpha phi), phi = Log(R_b^T R_e). A body-frame
  // perturbation w of R_alpha relates to the pose perturbations by
  //   w = A_b dtheta_b + A_e dtheta_e
  //   A_b = Exp(alpha phi)^T - alpha Jr(alpha phi) Jl^-1(phi)
  //   A_e = alpha Jr(alpha phi) Jr^-1(phi)
  const Vec3 phi = log_quat(qb.conjugate() * qe);
  Mat3 A_b, A_e;
  Quat q_alpha;
  if (alpha <= 0.0) {
    A_b.setIdentity();
    A_e.setZero();
    q_alpha = qb;
  } else if (alpha >= 1.0) {
    A_b.setZero();
    A_e.setIdentity();
    q_alpha = qe;
  } else {
    const Vec3 a_phi = alpha * phi;
    const Mat3 jr_a = right_jacobian(a_phi);
    A_b = exp_so3(a_phi).transpose() - alpha * jr_a * right_jacobian_inverse(-phi);
    A_e = alpha * jr_a * right_jacobian_inverse(phi);
    q_alpha = (qb * exp_quat(a_phi)).normalized();
  }

  const Mat3 R_alpha = q_alpha.toRotationMatrix();
  const Vec3 t_alpha = (1.0 - alpha) * frame.begin.translation + alpha * frame.end.translation;
  const Vec3& p = r.keypoint.position;
  const Vec3 pw = R_alpha * p + t_alpha;
  lin.value = r.weight * (pw - r.closest).dot(r.normal);

  // d pw / d w = -R_alpha [p]x
  const Eigen::RowVector3d dr_dw = -r.weight * r.normal.transpose() * R_alpha * skew(p);
  lin.jacobian.segment<3>(0) = dr_dw * A_b;
  lin.jacobian.segment<3>(3) = r.weight * (1.0 - alpha) * r.normal.transpose();
  lin.jacobian.segment<3>(6) = dr_dw * A_e;
  lin.jacobian.segment<3>(9) = r.weight * alpha * r.normal.transpose();
  return lin;
}

std::vector<Residual> build_residuals(const VoxelMap& map, const TrajectoryFrame& frame_guess,
                                      std::span<const ScanPoint> keypoints,
                                      const SolverConfig& cfg, ResidualBuildStats* stats) {
  std::vector<Residual> residuals;
  residuals.reserve(keypoints.size());
  ResidualBuildStats local;
  local.keypoints = keypoints.size();
  NeighborhoodStats hood;
  for (const ScanPoint& kp : keypoints) {
    const Pose pose = interpolate_pose(frame_guess, kp.alpha);
    const Vec3 pw = pose * kp.position;
    const NeighborhoodStatus status =
        map.query(pw, cfg.num_neighbors, cfg.neighborhood_ring, pose.translation, hood);
    if (status == NeighborhoodStatus::kEmpty) {
      ++local.empty;
      continue;
    }
    if (status == NeighborhoodStatus::kDegenerate) {
      ++local.degenerate;
      continue;
    }
    const Vec3& q = hood.neighbors.front();
    const double distance = (pw - q).dot(hood.normal);
    if (std::abs(distance) > cfg.outlier_gate) {
      ++local.gated;
      continue;
    }
    residuals.push_back({kp, q, hood.normal, hood.a2d});
  }
  if (stats) *stats = local;
  if (residuals.size() < cfg.min_residuals)
    throw Error(ErrorCode::kTooFewResiduals, std::to_string(residuals.size()) +
                                                 " residuals out of " +
                                                 std::to_string(keypoints.size()) + " keypoints");
  return residuals;
}

double objective(std::span<const Residual> residuals, const TrajectoryFrame& frame,
                 const TrajectoryFrame& prev_frame, const SolverConfig& cfg) {
  return icp_cost(residuals, frame, cfg.robust_scale) + constraint_cost(frame, prev_frame, cfg);
}

SolveResult solve(const VoxelMap& map, std::span<const ScanPoint> keypoints,
                  const TrajectoryFrame& frame_init, const TrajectoryFrame& prev_frame,
                  const SolverConfig& cfg) {
  const bool elastic = cfg.mode == MotionMode::kElastic;
  std::vector<ScanPoint> rigid_keypoints;
  if (!elastic)
    rigid_keypoints =
        rigidify(keypoints, frame_init, cfg.mode == MotionMode::kConstantVelocityRigid);
  const std::span<const ScanPoint> points =
      elastic ? keypoints : std::span<const ScanPoint>(rigid_keypoints);

  // Single-pose modes optimize the end pose only; the priors do not apply.
  SolverConfig eval_cfg = cfg;
  if (!elastic) eval_cfg.beta_loc = eval_cfg.beta_vel = eval_cfg.beta_rot_gap = 0.0;

  TrajectoryFrame frame = frame_init;
  if (!elastic) frame.begin = frame.end;

  SolveResult result;
  SolveReport& report = result.report;
  std::vector<Residual> residuals;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    residuals = build_residuals(map, frame, points, eval_cfg);
    const double inv_n = 1.0 / static_cast<double>(residuals.size());
    const double current = objective(residuals, frame, prev_frame, eval_cfg);
    if (iter == 0) report.initial_objective = current;

    Mat12 H = Mat12::Zero();
    Vec12 g = Vec12::Zero();
    for (const Residual& r : residuals) {
      const Linearization lin = linearize(r, frame);
      const double w = cauchy_weight(lin.value * lin.value, cfg.robust_scale) * inv_n;
      H.noalias() += w * lin.jacobian.transpose() * lin.jacobian;
      g.noalias() += w * lin.value * lin.jacobian.transpose();
    }

    Vec12 delta = Vec12::Zero();
    if (elastic) {
      add_constraints(frame, prev_frame, eval_cfg, H, g);
      H.diagonal().array() += cfg.damping;
      Eigen::LDLT<Mat12> ldlt(H);
      if (ldlt.info() != Eigen::Success)
        throw Error(ErrorCode::kSolverFailure, "normal equations could not be factorized");
      delta = -ldlt.solve(g);
    } else {
      Mat6 H6 = H.bottomRightCorner<6, 6>();
      H6.diagonal().array() += cfg.damping;
      Eigen::LDLT<Mat6> ldlt(H6);
      if (ldlt.info() != Eigen::Success)
        throw Error(ErrorCode::kSolverFailure, "normal equations could not be factorized");
      delta.tail<6>() = -ldlt.solve(Vec6(g.tail<6>()));
    }
    if (!delta.allFinite())
      throw Error(ErrorCode::kSolverFailure, "non-finite Gauss-Newton step");

    double scale = 1.0;
    TrajectoryFrame candidate = apply_increment(frame, delta);
    if (!elastic) candidate.begin = candidate.end;
    double candidate_cost = objective(residuals, candidate, prev_frame, eval_cfg);
    if (cfg.line_search) {
      for (int h = 0; h < cfg.max_halvings && candidate_cost > current; ++h) {
        scale *= 0.5;
        candidate = apply_increment(frame, scale * delta);
        if (!elastic) candidate.begin = candidate.end;
        candidate_cost = objective(residuals, candidate, prev_frame, eval_cfg);
      }
    }
    frame = candidate;
    report.accepted_steps.emplace_back(current, candidate_cost);
    report.iterations = iter + 1;

    const Vec12 step = scale * delta;
    report.step_translation = std::max(step.segment<3>(3).norm(), step.segment<3>(9).norm());
    report.step_rotation_deg =
        kRadToDeg * std::max(step.segment<3>(0).norm(), step.segment<3>(6).norm());
    if (report.step_translation < cfg.trans_tol && report.step_rotation_deg < cfg.rot_tol_deg) {
      report.converged = true;
      break;
    }
  }

  report.residual_count = residuals.size();
  report.final_objective = objective(residuals, frame, prev_frame, eval_cfg);

  if (cfg.mode == MotionMode::kConstantVelocityRigid) {
    // keep the relative motion of the prior inside the scan
    frame.begin = frame.end * (frame_init.end.inverse() * frame_init.begin);
  }
  frame.scan_index = frame_init.scan_index;
  frame.tau_begin = frame_init.tau_begin;
  frame.tau_end = frame_init.tau_end;
  result.frame = frame;
  return result;
}

}  // namespace ctlo
