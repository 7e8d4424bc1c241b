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
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "ctlo/errors.hpp"
#include "ctlo/loop_closure.hpp"

namespace ctlo {
namespace {

struct Block {
  double x, y, half_x, half_y, height;
};

std::vector<Block> random_blocks(uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-30, 30), half(0.8, 3.0), h(1.0, 8.0);
  std::vector<Block> blocks;
  for (int i = 0; i < count; ++i) blocks.push_back({pos(rng), pos(rng), half(rng), half(rng), h(rng)});
  return blocks;
}

/// Heightfield surface sampled on a regular lattice: ground plus flat-topped blocks.
std::vector<Vec3> terrain(const std::vector<Block>& blocks, double spacing) {
  std::vector<Vec3> pts;
  for (double x = -45; x <= 45; x += spacing) {
    for (double y = -45; y <= 45; y += spacing) {
      double z = 0.0;
      for (const auto& b : blocks)
        if (std::abs(x - b.x) <= b.half_x && std::abs(y - b.y) <= b.half_y) z = std::max(z, b.height);
      pts.emplace_back(x, y, z);
    }
  }
  return pts;
}

std::vector<Vec3> in_frame(const std::vector<Vec3>& world, const Pose& frame) {
  std::vector<Vec3> out;
  out.reserve(world.size());
  const Pose inv = frame.inverse();
  for (const auto& p : world) out.push_back(inv * p);
  return out;
}

Pose planar(double yaw, double x, double y) { return Pose(rot_z(yaw), Vec3(x, y, 0)); }

TEST(ElevationGrid, RasterKeepsCellMaximum) {
  const std::vector<Vec3> pts = {{0.1, 0.1, 1.0}, {0.4, 0.2, 2.0}, {0.6, 0.1, 0.5},
                                 {-0.2, 0.9, 3.0}, {0.1, 0.1, 50.0}, {100, 0, 1}};
  const ElevationGrid g = rasterize_points(pts, 0.5, 0.0, 10.0, 40.0);
  // cells span x in [-0.5, 1.0) and y in [0, 1.0)
  EXPECT_EQ(g.width, 3);
  EXPECT_EQ(g.height, 2);
  EXPECT_DOUBLE_EQ(g.origin_x, -0.5);
  EXPECT_DOUBLE_EQ(g.origin_y, 0.0);
  EXPECT_FLOAT_EQ(g.at(1, 0), 2.0f);  // 50 m is above the band
  EXPECT_FLOAT_EQ(g.at(2, 0), 0.5f);
  EXPECT_FLOAT_EQ(g.at(0, 1), 3.0f);
  EXPECT_FALSE(g.valid(0, 0));
  EXPECT_EQ(g.valid_count(), 3u);
}

TEST(ElevationGrid, BuildFromFramesUsesGroundBand) {
  // two stationary scans over flat ground at z = -1.8 with a 3 m block
  std::vector<TrajectoryFrame> frames(2);
  std::vector<std::vector<ScanPoint>> scans(2);
  for (double x = -10; x <= 10; x += 0.25) {
    for (double y = -10; y <= 10; y += 0.25) {
      const bool block = std::abs(x - 4) < 1 && std::abs(y) < 1;
      scans[0].push_back({Vec3(x, y, block ? 1.2 : -1.8)});
    }
  }
  scans[1] = scans[0];
  ElevationGridParams params;
  const ElevationGrid g = build_elevation_grid(frames, scans, 40, params);
  EXPECT_EQ(g.n_start, 40);
  EXPECT_EQ(g.n_end, 41);
  EXPECT_EQ(g.anchor_scan, 41);
  EXPECT_NEAR(g.ground_z, -1.8, 1e-9);
  EXPECT_NEAR(g.z_min, -2.3, 1e-9);
  const int ix = static_cast<int>(std::floor((4.1 - g.origin_x) / g.cell_size));
  const int iy = static_cast<int>(std::floor((0.1 - g.origin_y) / g.cell_size));
  EXPECT_FLOAT_EQ(g.at(ix, iy), 1.2f);
}

TEST(ElevationGrid, SparseGridIsRejected) {
  std::vector<TrajectoryFrame> frames(1);
  std::vector<std::vector<ScanPoint>> scans(1);
  scans[0] = {{Vec3(0, 0, -1.8)}, {Vec3(20, 20, -1.8)}};
  try {
    build_elevation_grid(frames, scans, 0, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGrid);
  }
}

TEST(MatchGrids, RecoversPlanarOffset) {
  const auto world = terrain(random_blocks(21, 45), 0.2);
  const Pose frame_a = planar(0.0, 0.0, 0.0);
  const Pose frame_b = planar(32.0 * M_PI / 180.0, 3.3, -1.6);
  const ElevationGrid a = rasterize_points(in_frame(world, frame_a), 0.5, -0.5, 9.5, 40.0);
  const ElevationGrid b = rasterize_points(in_frame(world, frame_b), 0.5, -0.5, 9.5, 40.0);
  const auto m = match_grids(a, b);
  ASSERT_TRUE(m.has_value());
  const Pose expected = frame_a.inverse() * frame_b;
  EXPECT_NEAR(m->yaw, 32.0 * M_PI / 180.0, 0.5 * M_PI / 180.0);
  EXPECT_NEAR(m->x, expected.translation.x(), 0.25);
  EXPECT_NEAR(m->y, expected.translation.y(), 0.25);
  EXPECT_GT(m->score, 0.9);
  EXPECT_LT((m->relative.translation - expected.translation).norm(), 0.3);
  EXPECT_LT(angular_distance(m->relative.rotation, expected.rotation), M_PI / 180.0);
}

TEST(MatchGrids, RejectsDifferentPlaces) {
  const auto a_pts = terrain(random_blocks(1, 45), 0.25);
  const auto b_pts = terrain(random_blocks(2, 45), 0.25);
  const ElevationGrid a = rasterize_points(a_pts, 0.5, -0.5, 9.5, 40.0);
  const ElevationGrid b = rasterize_points(b_pts, 0.5, -0.5, 9.5, 40.0);
  MatchParams params;
  params.yaw_step_deg = 5.0;
  EXPECT_FALSE(match_grids(a, b, params).has_value());
}

TEST(LoopDetection, RespectsSeparationAndRadius) {
  const auto world = terrain(random_blocks(5, 40), 0.25);
  std::vector<ElevationGrid> grids;
  const Pose frames[] = {planar(0, 0, 0), planar(0.1, 200, 0), planar(0.2, 400, 0),
                         planar(0.3, 1.0, 0.5)};
  for (int k = 0; k < 4; ++k) {
    // grids 1 and 2 are far away and never compared with grid 3
    ElevationGrid g = rasterize_points(in_frame(world, frames[k]), 0.5, -0.5, 9.5, 40.0);
    g.anchor = g.gravity_anchor = frames[k];
    g.anchor_scan = 100 * k;
    grids.push_back(g);
  }
  LoopDetectionParams params;
  params.match.yaw_step_deg = 2.0;
  auto loops = detect_loops_for_last(grids, params);
  ASSERT_EQ(loops.size(), 1u);
  EXPECT_EQ(loops[0].grid_a, 0);
  EXPECT_EQ(loops[0].grid_b, 3);
  EXPECT_EQ(loops[0].scan_b, 300);
  params.min_separation = 4;
  EXPECT_TRUE(detect_loops_for_last(grids, params).empty());
}

TEST(LoopDetection, RejectsCorrectionsInconsistentWithOdometry) {
  const auto world = terrain(random_blocks(5, 40), 0.25);
  std::vector<ElevationGrid> grids;
  const Pose frames[] = {planar(0, 0, 0), planar(0.1, 200, 0), planar(0.2, 400, 0),
                         planar(0.3, 1.0, 0.5)};
  for (int k = 0; k < 4; ++k) {
    ElevationGrid g = rasterize_points(in_frame(world, frames[k]), 0.5, -0.5, 9.5, 40.0);
    g.anchor = g.gravity_anchor = frames[k];
    grids.push_back(g);
  }
  // odometry claims the last grid is 89 m away; the raster says 1 m, over a ~710 m path
  grids[3].anchor = grids[3].gravity_anchor = planar(0.3, 90.0, 0.5);
  LoopDetectionParams params;
  params.match.yaw_step_deg = 2.0;
  EXPECT_TRUE(detect_loops_for_last(grids, params).empty());
  params.max_correction_ratio = 0.0;
  EXPECT_EQ(detect_loops_for_last(grids, params).size(), 1u);
}

TEST(ElevationGrid, PgmExport) {
  const std::vector<Vec3> pts = {{0.1, 0.1, 0.0}, {0.6, 0.1, 10.0}};
  const ElevationGrid g = rasterize_points(pts, 0.5, 0.0, 10.0, 40.0);
  const auto path = std::filesystem::temp_directory_path() / "ctlo_grid.pgm";
  export_grid_pgm(g, path.string());
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w, h, m;
  in >> magic >> w >> h >> m;
  in.get();
  unsigned char px[2];
  in.read(reinterpret_cast<char*>(px), 2);
  EXPECT_EQ(px[0], 1);
  EXPECT_EQ(px[1], 255);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ctlo
