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

#include <cmath>

#include <gtest/gtest.h>

#include "ctlo/errors.hpp"
#include "ctlo/lidar_sim.hpp"
#include "ctlo/slam.hpp"

namespace ctlo {
namespace {

std::vector<TrajectoryFrame> straight_frames(int n) {
  std::vector<TrajectoryFrame> frames(n);
  for (int k = 0; k < n; ++k) {
    frames[k].begin = Pose(Quat::Identity(), Vec3(k, 0, 0));
    frames[k].end = Pose(Quat::Identity(), Vec3(k + 1, 0, 0));
  }
  return frames;
}

TEST(Drift, DisabledIsIdentity) {
  DriftInjector d(DriftParams{});
  for (const auto& f : straight_frames(5)) {
    const TrajectoryFrame out = d.apply(f);
    EXPECT_TRUE(out.begin.matrix().isApprox(f.begin.matrix(), 0.0));
    EXPECT_TRUE(out.end.matrix().isApprox(f.end.matrix(), 0.0));
  }
}

TEST(Drift, BiasAccumulatesYaw) {
  DriftParams p;
  p.enabled = true;
  p.yaw_bias_deg = 1.0;
  DriftInjector d(p);
  const auto frames = straight_frames(10);
  std::vector<TrajectoryFrame> out;
  for (const auto& f : frames) out.push_back(d.apply(f));
  for (int k = 0; k < 10; ++k) {
    const Pose mid = interpolate_pose(out[k], 0.5);
    EXPECT_NEAR(yaw_of(mid.rotation), k * M_PI / 180.0, 1e-9);
    // the frame keeps its internal motion
    const Pose rel = out[k].begin.inverse() * out[k].end;
    EXPECT_TRUE(rel.translation.isApprox(Vec3(1, 0, 0), 1e-9));
  }
  // the path bends: the tenth node leaves the x axis
  EXPECT_GT(std::abs(interpolate_pose(out[9], 0.5).translation.y()), 0.3);
}

TEST(Drift, SeededNoiseIsReproducible) {
  DriftParams p;
  p.enabled = true;
  p.yaw_sigma_deg = 0.5;
  p.translation_sigma = 0.05;
  p.seed = 11;
  DriftInjector a(p), b(p);
  p.seed = 12;
  DriftInjector c(p);
  bool differs = false;
  for (const auto& f : straight_frames(8)) {
    const auto fa = a.apply(f), fb = b.apply(f), fc = c.apply(f);
    EXPECT_EQ(fa.end.matrix(), fb.end.matrix());
    differs |= !fa.end.matrix().isApprox(fc.end.matrix(), 1e-12);
  }
  EXPECT_TRUE(differs);
}

TEST(Slam, WithoutLoopsMatchesOdometry) {
  const auto sc = sim::make_scenario("straight_corridor");
  const auto cfg = PipelineConfig::ForProfile(sc.profile);
  sim::SimulatedScanSource s1(sc, 2, 25), s2(sc, 2, 25);
  const OdometryResult odo = run_odometry(s1, cfg);
  LoopClosureParams loop;
  loop.window = 10;
  loop.overlap = 3;
  const SlamResult slam = run_slam(s2, cfg, loop);
  ASSERT_EQ(slam.frames_after.size(), odo.frames.size());
  EXPECT_EQ(slam.loops.size(), 0u);
  EXPECT_EQ(slam.optimizations, 0);
  // grids start once a window is full and repeat every window - overlap scans
  EXPECT_EQ(slam.grids.size(), 3u);
  for (size_t n = 0; n < odo.frames.size(); ++n) {
    EXPECT_EQ(slam.frames_before[n].end.matrix(), odo.frames[n].end.matrix());
    EXPECT_EQ(slam.frames_after[n].end.matrix(), odo.frames[n].end.matrix());
  }
  EXPECT_EQ(slam.graph.nodes.size(), odo.frames.size());
}

TEST(Slam, RejectsBadWindow) {
  const auto sc = sim::make_scenario("straight_corridor");
  sim::SimulatedScanSource src(sc, 2, 3);
  LoopClosureParams loop;
  loop.window = 10;
  loop.overlap = 10;
  EXPECT_THROW(run_slam(src, PipelineConfig{}, loop), Error);
}

}  // namespace
}  // namespace ctlo
