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
#include <sstream>

#include <gtest/gtest.h>

#include "ctlo/errors.hpp"
#include "ctlo/pose_graph.hpp"
#include "oracles.hpp"

namespace ctlo {
namespace {

/// Four corners of a unit square, turning left by 90 degrees at each.
std::vector<Pose> square_truth() {
  std::vector<Pose> p;
  const Vec3 corners[4] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  for (int k = 0; k < 4; ++k) p.emplace_back(rot_z(k * M_PI / 2), corners[k]);
  return p;
}

PoseGraph noisy_square() {
  const auto truth = square_truth();
  PoseGraph g;
  // biased odometry: every step rotates 3 degrees too much and runs 5% long
  const Pose bias(exp_quat(Vec3(0.01, -0.005, 3.0 * M_PI / 180)), Vec3(0.05, 0.01, -0.02));
  g.nodes.push_back(truth[0]);
  for (int k = 0; k < 3; ++k) {
    const Pose meas = truth[k].inverse() * truth[k + 1] * bias;
    g.edges.push_back({k, k + 1, meas, 1.0, false});
    g.nodes.push_back(g.nodes.back() * meas);
  }
  g.edges.push_back({3, 0, truth[3].inverse() * truth[0], 10.0, true});
  return g;
}

TEST(PoseGraph, EdgeErrorVanishesOnConsistentPoses) {
  const auto truth = square_truth();
  const PoseGraphEdge e{0, 1, truth[0].inverse() * truth[1], 1.0, false};
  EXPECT_LT(edge_error(e, truth[0], truth[1]).norm(), 1e-12);
  // error matches the oracle's definition
  const Pose moved(rot_z(0.1) * exp_quat(Vec3(0.02, 0, 0)), Vec3(1.1, 0.2, 0.05));
  oracle::GraphEdge oe{0, 1, e.measurement.rotation_matrix(), e.measurement.translation, 1.0};
  const auto ref = oracle::edge_residual(oe, {truth[0].rotation_matrix(), truth[0].translation},
                                         {moved.rotation_matrix(), moved.translation});
  EXPECT_TRUE(edge_error(e, truth[0], moved).isApprox(ref, 1e-10));
}

TEST(PoseGraph, SquareMatchesBruteForceMinimizer) {
  const PoseGraph g = noisy_square();
  OptimizeReport report;
  const auto opt = optimize(g, 50, &report, 1e-12);
  EXPECT_LT(report.final_cost, report.initial_cost);

  std::vector<oracle::Node> init;
  for (const auto& p : g.nodes) init.push_back({p.rotation_matrix(), p.translation});
  std::vector<oracle::GraphEdge> edges;
  for (const auto& e : g.edges)
    edges.push_back({static_cast<int>(e.from), static_cast<int>(e.to),
                     e.measurement.rotation_matrix(), e.measurement.translation, e.weight});
  const auto ref = oracle::minimize_pose_graph(init, edges);
  for (size_t k = 0; k < opt.size(); ++k) {
    EXPECT_LT((opt[k].translation - ref[k].t).norm(), 1e-5) << "node " << k;
    EXPECT_LT(oracle::matrix_to_rotvec(opt[k].rotation_matrix().transpose() * ref[k].R).norm(),
              1e-5)
        << "node " << k;
  }
  // gauge node does not move
  EXPECT_TRUE(opt[0].matrix().isApprox(g.nodes[0].matrix(), 0.0));
}

TEST(PoseGraph, ConsistentGraphIsAFixedPoint) {
  const auto truth = square_truth();
  PoseGraph g;
  g.nodes = truth;
  for (int k = 0; k < 3; ++k)
    g.edges.push_back({k, k + 1, truth[k].inverse() * truth[k + 1], 1.0, false});
  g.edges.push_back({3, 0, truth[3].inverse() * truth[0], 5.0, true});
  const auto opt = optimize(g);
  for (size_t k = 0; k < truth.size(); ++k)
    EXPECT_TRUE(opt[k].matrix().isApprox(truth[k].matrix(), 1e-9));
}

TEST(PoseGraph, BuildGraphFromFrames) {
  std::vector<TrajectoryFrame> frames(3);
  for (int k = 0; k < 3; ++k) {
    frames[k].begin = Pose(Quat::Identity(), Vec3(k, 0, 0));
    frames[k].end = Pose(Quat::Identity(), Vec3(k + 1, 0, 0));
  }
  LoopConstraint loop;
  loop.scan_a = 0;
  loop.scan_b = 2;
  loop.score = 0.8;
  const PoseGraph g = build_graph(frames, {loop});
  ASSERT_EQ(g.nodes.size(), 3u);
  EXPECT_NEAR(g.nodes[1].translation.x(), 1.5, 1e-12);
  ASSERT_EQ(g.edges.size(), 3u);
  EXPECT_EQ(g.num_loop_edges(), 1u);
  EXPECT_NEAR(g.edges[2].weight, 8.0, 1e-12);
  loop.scan_b = 7;
  EXPECT_THROW(build_graph(frames, {loop}), Error);
}

TEST(PoseGraph, CorrectionsMoveBothFramePoses) {
  std::vector<TrajectoryFrame> frames(1);
  frames[0].begin = Pose(Quat::Identity(), Vec3(0, 0, 0));
  frames[0].end = Pose(Quat::Identity(), Vec3(2, 0, 0));
  const Pose before(Quat::Identity(), Vec3(1, 0, 0));
  const Pose after(rot_z(M_PI / 2), Vec3(1, 1, 0));
  const auto out = apply_corrections(frames, {before}, {after});
  // correction rotates about the node, then shifts it
  EXPECT_TRUE(out[0].begin.translation.isApprox(Vec3(1, 0, 0), 1e-12));
  EXPECT_TRUE(out[0].end.translation.isApprox(Vec3(1, 2, 0), 1e-12));
}

TEST(PoseGraph, G2oExport) {
  const PoseGraph g = noisy_square();
  const auto path = std::filesystem::temp_directory_path() / "ctlo_square.g2o";
  write_g2o(path.string(), g);
  std::ifstream in(path);
  std::string line;
  int vertices = 0, edges = 0, fixes = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    size_t fields = 0;
    for (std::string f; ss >> f;) ++fields;
    if (tag == "VERTEX_SE3:QUAT") {
      ++vertices;
      EXPECT_EQ(fields, 8u);
    } else if (tag == "EDGE_SE3:QUAT") {
      ++edges;
      EXPECT_EQ(fields, 2u + 7u + 21u);
    } else if (tag == "FIX") {
      ++fixes;
    }
  }
  EXPECT_EQ(vertices, 4);
  EXPECT_EQ(edges, 4);
  EXPECT_EQ(fixes, 1);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ctlo
