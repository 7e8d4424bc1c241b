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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ctlo/ct_icp.hpp"
#include "ctlo/errors.hpp"

namespace ctlo {
namespace {

using Vec12 = Eigen::Matrix<double, 12, 1>;

Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat(n(rng), n(rng), n(rng), n(rng)).normalized();
}

/// Point-to-plane value computed from scratch with Eigen's own slerp.
double direct_residual(const Residual& r, const TrajectoryFrame& f) {
  const double a = r.keypoint.alpha;
  const Quat q = f.begin.rotation.slerp(a, f.end.rotation);
  const Vec3 t = (1 - a) * f.begin.translation + a * f.end.translation;
  return r.weight * ((q * r.keypoint.position + t) - r.closest).dot(r.normal);
}

TEST(CtIcp, ResidualValueMatchesDirectFormula) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    Residual r;
    r.keypoint.position = Vec3(u(rng), u(rng), u(rng)) * 20;
    r.keypoint.alpha = 0.5 * (u(rng) + 1);
    r.closest = Vec3(u(rng), u(rng), u(rng)) * 20;
    r.normal = Vec3(u(rng), u(rng), u(rng)).normalized();
    r.weight = 0.5 * (u(rng) + 1);
    TrajectoryFrame f;
    f.begin = Pose(random_quat(rng), Vec3(u(rng), u(rng), u(rng)));
    f.end = Pose(f.begin.rotation * exp_quat(Vec3(u(rng), u(rng), u(rng)) * 0.5),
                 Vec3(u(rng), u(rng), u(rng)));
    EXPECT_NEAR(residual_value(r, f), direct_residual(r, f), 1e-10);
    EXPECT_NEAR(linearize(r, f).value, direct_residual(r, f), 1e-10);
  }
}

TEST(CtIcp, JacobianMatchesCentralDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    Residual r;
    r.keypoint.position = Vec3(u(rng), u(rng), u(rng)) * 30;
    r.keypoint.alpha = i == 0 ? 0.0 : (i == 1 ? 1.0 : 0.5 * (u(rng) + 1));
    r.closest = Vec3(u(rng), u(rng), u(rng)) * 30;
    r.normal = Vec3(u(rng), u(rng), u(rng)).normalized();
    r.weight = 0.2 + 0.4 * (u(rng) + 1);
    TrajectoryFrame f;
    f.begin = Pose(random_quat(rng), Vec3(u(rng), u(rng), u(rng)) * 10);
    f.end = Pose(f.begin.rotation * exp_quat(Vec3(u(rng), u(rng), u(rng)) * 0.3),
                 Vec3(u(rng), u(rng), u(rng)) * 10);
    const auto analytic = linearize(r, f).jacobian;
    for (int k = 0; k < 12; ++k) {
      Vec12 d = Vec12::Zero();
      d(k) = h;
      const double numeric = (direct_residual(r, apply_increment(f, d)) -
                              direct_residual(r, apply_increment(f, -d))) /
                             (2 * h);
      EXPECT_NEAR(analytic(k), numeric, 1e-4 * std::max(1.0, std::abs(numeric)))
          << "config " << i << " component " << k;
    }
  }
}

TEST(CtIcp, CauchyLossAndWeight) {
  const double c = 0.3;
  for (double s : {0.0, 0.01, 0.09, 1.0, 4.0}) {
    EXPECT_NEAR(cauchy_loss(s, c), c * c * std::log1p(s / (c * c)), 1e-15);
    // weight is the derivative of the loss with respect to the squared residual
    const double h = 1e-7;
    const double numeric = (cauchy_loss(s + h, c) - cauchy_loss(std::max(0.0, s - h), c)) /
                           (s + h - std::max(0.0, s - h));
    EXPECT_NEAR(cauchy_weight(s, c), numeric, 1e-5);
  }
}

/// Points sampled on the six walls of an axis-aligned room plus a tilted ramp.
std::vector<Vec3> room_points(double spacing) {
  std::vector<Vec3> pts;
  for (double a = -6; a <= 6; a += spacing) {
    for (double b = 0; b <= 4; b += spacing) {
      pts.push_back(Vec3(a, 6, b));
      pts.push_back(Vec3(a, -6, b));
      pts.push_back(Vec3(6, a, b));
      pts.push_back(Vec3(-6, a, b));
    }
    for (double b = -6; b <= 6; b += spacing) {
      pts.push_back(Vec3(a, b, 0));
      pts.push_back(Vec3(a, b, 4));
    }
  }
  for (double a = 1; a <= 4; a += spacing)
    for (double b = -3; b <= 0; b += spacing) pts.push_back(Vec3(a, b, 0.5 * (a - 1)));
  return pts;
}

/// Drops the ramp and anything within 1.2 m of a second room face, where
/// neighborhoods straddle two planes.
std::vector<Vec3> face_interiors(const std::vector<Vec3>& pts) {
  std::vector<Vec3> out;
  for (const Vec3& p : pts) {
    const double d[] = {6 - p.x(), p.x() + 6, 6 - p.y(), p.y() + 6, p.z(), 4 - p.z()};
    int near = 0;
    for (double v : d) near += std::abs(v) < 1.2;
    if (near == 1 && std::min({d[0], d[1], d[2], d[3], d[4], d[5]}) < 1e-9) out.push_back(p);
  }
  return out;
}

TEST(CtIcp, SolveRecoversRigidOffset) {
  VoxelMap map(VoxelMapParams{1.0, 20, 0.1, 5});
  map.insert_scan(room_points(0.1));

  const Pose truth(exp_quat(Vec3(0.01, -0.02, 0.05)), Vec3(0.15, -0.1, 1.05));
  std::vector<ScanPoint> keypoints;
  const auto world = face_interiors(room_points(0.37));
  for (size_t i = 0; i < world.size(); ++i) {
    ScanPoint p;
    p.position = truth.inverse() * world[i];
    p.alpha = static_cast<double>((i * 7919) % world.size()) / world.size();
    keypoints.push_back(p);
  }
  TrajectoryFrame init;
  init.begin = init.end = Pose(Quat::Identity(), Vec3(0, 0, 1));
  SolverConfig cfg;
  cfg.max_iterations = 30;
  cfg.beta_loc = cfg.beta_vel = 0.0;
  cfg.trans_tol = 1e-5;
  cfg.rot_tol_deg = 1e-4;
  const SolveResult res = solve(map, keypoints, init, init, cfg);
  EXPECT_LT((res.frame.end.translation - truth.translation).norm(), 5e-3);
  EXPECT_LT((res.frame.begin.translation - truth.translation).norm(), 5e-3);
  EXPECT_LT(angular_distance(res.frame.end.rotation, truth.rotation), 1e-3);
  EXPECT_LT(res.report.final_objective, res.report.initial_objective);
  for (const auto& [before, after] : res.report.accepted_steps) EXPECT_LE(after, before + 1e-15);
}

TEST(CtIcp, SolveRecoversIntraScanMotion) {
  VoxelMap map(VoxelMapParams{1.0, 20, 0.1, 5});
  map.insert_scan(room_points(0.1));

  TrajectoryFrame truth;
  truth.begin = Pose(Quat::Identity(), Vec3(0, 0, 1));
  truth.end = Pose(exp_quat(Vec3(0, 0, 0.08)), Vec3(0.3, 0.05, 1));
  const auto world = face_interiors(room_points(0.37));
  std::vector<ScanPoint> keypoints;
  for (size_t i = 0; i < world.size(); ++i) {
    ScanPoint p;
    p.alpha = static_cast<double>((i * 7919) % world.size()) / world.size();
    p.position = interpolate_pose(truth, p.alpha).inverse() * world[i];
    keypoints.push_back(p);
  }
  TrajectoryFrame init;
  init.begin = init.end = truth.begin;
  SolverConfig cfg;
  cfg.max_iterations = 30;
  cfg.beta_loc = cfg.beta_vel = 0.0;
  cfg.trans_tol = 1e-5;
  cfg.rot_tol_deg = 1e-4;
  const SolveResult res = solve(map, keypoints, init, init, cfg);
  EXPECT_LT((res.frame.end.translation - truth.end.translation).norm(), 5e-3);
  EXPECT_LT((res.frame.begin.translation - truth.begin.translation).norm(), 5e-3);
  EXPECT_LT(angular_distance(res.frame.end.rotation, truth.end.rotation), 1e-3);
}

TEST(CtIcp, TooFewResidualsThrows) {
  VoxelMap map(1.0);
  map.insert_scan(room_points(0.2));
  std::vector<ScanPoint> far(5);
  for (auto& p : far) p.position = Vec3(100, 100, 100);
  TrajectoryFrame f;
  try {
    solve(map, far, f, f, SolverConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewResiduals);
  }
}

TEST(CtIcp, ModeNames) {
  for (MotionMode m : {MotionMode::kElastic, MotionMode::kConstantVelocityRigid, MotionMode::kNone})
    EXPECT_EQ(motion_mode_from_string(to_string(m)), m);
  EXPECT_THROW(motion_mode_from_string("bogus"), Error);
}

}  // namespace
}  // namespace ctlo
