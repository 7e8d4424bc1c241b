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

#include <gtest/gtest.h>

#include "ctlo/errors.hpp"
#include "ctlo/lidar_sim.hpp"

namespace ctlo::sim {
namespace {

TEST(World, PlaneIntersectionIsAnalytic) {
  World w;
  w.add_plane({Vec3::UnitZ(), -2.0});  // z = -2
  const Vec3 dir = Vec3(1, 0, -1).normalized();
  const auto hit = w.intersect(Vec3::Zero(), dir, 100.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(*hit, 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_FALSE(w.intersect(Vec3::Zero(), Vec3::UnitZ(), 100.0).has_value());
  EXPECT_FALSE(w.intersect(Vec3::Zero(), -Vec3::UnitZ(), 1.5).has_value());
  EXPECT_NEAR(w.distance(Vec3(3, 4, 1)), 3.0, 1e-12);
}

TEST(World, RotatedBoxIntersection) {
  World w;
  w.add_box({Pose(rot_z(M_PI / 4), Vec3(10, 0, 0)), Vec3(1, 1, 1)});
  // the near corner of the rotated box sits at x = 10 - sqrt(2)
  const auto hit = w.intersect(Vec3::Zero(), Vec3::UnitX(), 100.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(*hit, 10.0 - std::sqrt(2.0), 1e-9);
  EXPECT_FALSE(w.intersect(Vec3::Zero(), Vec3::UnitY(), 100.0).has_value());
  EXPECT_NEAR(w.distance(Vec3(10, 0, 3)), 2.0, 1e-9);
}

TEST(Trajectory, ConstantTurnFollowsCircle) {
  // speed 2 m/s, turn rate 0.2 rad/s: circle of radius 10
  GroundTruthTrajectory traj(Vec3(0, 0, 1), 0.0, 2.0, {{10.0, 0.0, 0.2}});
  for (double t : {0.0, 1.0, 3.7, 9.9}) {
    const Pose p = traj.pose(t);
    const double theta = 0.2 * t;
    EXPECT_NEAR(p.translation.x(), 10 * std::sin(theta), 1e-9);
    EXPECT_NEAR(p.translation.y(), 10 * (1 - std::cos(theta)), 1e-9);
    EXPECT_NEAR(p.translation.z(), 1.0, 1e-12);
    EXPECT_NEAR(yaw_of(p.rotation), theta, 1e-9);
  }
  EXPECT_NEAR(traj.speed(5.0), 2.0, 1e-12);
}

TEST(Trajectory, AccelerationIntegratesInClosedForm) {
  GroundTruthTrajectory traj(Vec3::Zero(), M_PI / 2, 1.0, {{4.0, 0.5, 0.0}});
  const Pose p = traj.pose(2.0);
  EXPECT_NEAR(p.translation.x(), 0.0, 1e-9);
  EXPECT_NEAR(p.translation.y(), 1.0 * 2 + 0.5 * 0.5 * 4, 1e-9);
  EXPECT_NEAR(traj.speed(2.0), 2.0, 1e-12);
}

TEST(Simulator, ScanRecoversWorldUnderExactUndistortion) {
  World w;
  w.add_plane({Vec3::UnitZ(), 0.0});
  w.add_plane({Vec3::UnitY(), 6.0});
  w.add_plane({-Vec3::UnitY(), 6.0});
  w.add_plane({Vec3::UnitX(), 15.0});
  // 10 m/s: the sensor moves 1 m during the sweep
  GroundTruthTrajectory traj(Vec3(0, 0, 1.8), 0.0, 10.0, {{5.0, 0.0, 0.0}});
  SensorSpec sensor;
  sensor.noise_sigma = 0.0;
  const SimulatedScan s = simulate_scan(w, traj, 0.0, 0.1, sensor, 0, 0);
  ASSERT_GT(s.scan.size(), 1000u);
  EXPECT_TRUE(s.scan.has_alpha);
  EXPECT_NEAR((s.truth.end.translation - s.truth.begin.translation).norm(), 1.0, 1e-9);
  double worst = 0.0, worst_rigid = 0.0;
  for (const auto& p : s.scan.points) {
    worst = std::max(worst, w.distance(interpolate_pose(s.truth, p.alpha) * p.position));
    worst_rigid = std::max(worst_rigid, w.distance(s.truth.begin * p.position));
  }
  EXPECT_LT(worst, 1e-6);
  // without undistortion the points on the side walls smear by up to 1 m
  EXPECT_GT(worst_rigid, 0.1);
}

TEST(Simulator, NoiseIsSeededAndDeterministic) {
  const Scenario sc = make_scenario("straight_corridor");
  const auto a = simulate_scan(sc.world, sc.trajectory, 0.0, 0.1, sc.sensor, 7, 3);
  const auto b = simulate_scan(sc.world, sc.trajectory, 0.0, 0.1, sc.sensor, 7, 3);
  const auto c = simulate_scan(sc.world, sc.trajectory, 0.0, 0.1, sc.sensor, 8, 3);
  ASSERT_EQ(a.scan.size(), b.scan.size());
  bool differs = false;
  for (size_t i = 0; i < a.scan.size(); ++i) {
    EXPECT_EQ(a.scan.points[i].position, b.scan.points[i].position);
    if (i < c.scan.size() && a.scan.points[i].position != c.scan.points[i].position) differs = true;
  }
  EXPECT_TRUE(differs);
}

TEST(Scenarios, ConstructedProperties) {
  EXPECT_EQ(scenario_names().size(), 4u);
  EXPECT_THROW(make_scenario("nowhere"), Error);

  const Scenario corridor = make_scenario("straight_corridor");
  const Pose start = corridor.trajectory.pose(0.0);
  EXPECT_LT(angular_distance(start.rotation, Quat::Identity()), 1e-12);

  const Scenario town = make_scenario("curved_town_loop");
  const double t_end = town.num_scans * town.sensor.period;
  // the circuit closes after 400 m, then the drive repeats part of the first street
  double closest = 1e9;
  for (double t = 60.0; t < t_end; t += 0.01)
    closest = std::min(closest, (town.trajectory.pose(t).translation -
                                 town.trajectory.pose(0).translation).norm());
  EXPECT_LT(closest, 0.1);
  const Pose last = town.trajectory.pose(t_end);
  EXPECT_NEAR(last.translation.y(), 0.0, 1e-6);
  EXPECT_GT(last.translation.x(), 30.0);

  const Scenario shaky = make_scenario("shaky_handheld");
  double max_step = 0.0;
  for (size_t n = 1; n < shaky.num_scans; ++n) {
    const TrajectoryFrame a = truth_frame(shaky, static_cast<int64_t>(n) - 1);
    const TrajectoryFrame b = truth_frame(shaky, static_cast<int64_t>(n));
    max_step = std::max(max_step, angular_distance(a.end.rotation, b.end.rotation));
  }
  EXPECT_GE(max_step * 180.0 / M_PI, 5.0);
  EXPECT_EQ(shaky.profile, Profile::kHighFrequency);

  const Scenario jump = make_scenario("yaw_jump");
  int big = 0;
  for (size_t n = 1; n < jump.num_scans; ++n) {
    const TrajectoryFrame a = truth_frame(jump, static_cast<int64_t>(n) - 1);
    const TrajectoryFrame b = truth_frame(jump, static_cast<int64_t>(n));
    big += angular_distance(a.end.rotation, b.end.rotation) >= 5.0 * M_PI / 180.0;
  }
  EXPECT_EQ(big, 18);  // two full-rate scans per turn
}

TEST(Scenarios, SourceTracksTruth) {
  SimulatedScanSource src(make_scenario("straight_corridor"), 1, 3);
  EXPECT_EQ(src.size().value(), 3u);
  int count = 0;
  while (auto scan = src.next()) {
    EXPECT_EQ(scan->index, count);
    ++count;
  }
  EXPECT_EQ(count, 3);
  ASSERT_EQ(src.truth().size(), 3u);
  const TrajectoryFrame f = truth_frame(src.scenario(), 2);
  EXPECT_TRUE(src.truth()[2].end.matrix().isApprox(f.end.matrix(), 1e-12));
}

}  // namespace
}  // namespace ctlo::sim
