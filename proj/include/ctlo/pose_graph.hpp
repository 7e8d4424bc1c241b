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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctlo/geometry.hpp"
#include "ctlo/loop_closure.hpp"

namespace ctlo {

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Relative-pose constraint: node_from^-1 * node_to should equal measurement.
struct PoseGraphEdge {
  int64_t from = 0;
  int64_t to = 0;
  Pose measurement;
  double weight = 1.0;
  bool loop = false;
};

/** \brief Per-scan poses tied by odometry and loop edges. Node 0 is held fixed. */
struct PoseGraph {
  std::vector<Pose> nodes;
  std::vector<PoseGraphEdge> edges;

  size_t num_loop_edges() const;
};

struct PoseGraphParams {
  double odometry_weight = 1.0;
  /// Loop edges weigh score times this factor.
  double loop_weight_scale = 10.0;
  /// Interpolation parameter of the node pose inside each frame.
  double node_alpha = 0.5;
};

PoseGraph build_graph(const std::vector<TrajectoryFrame>& frames,
                      const std::vector<LoopConstraint>& loops,
                      const PoseGraphParams& params = {});

/// Error vector (Log of the rotation error, translation error) of one edge.
Vec6 edge_error(const PoseGraphEdge& edge, const Pose& from, const Pose& to);

/// Sum over edges of weight * |edge_error|^2.
double graph_cost(const PoseGraph& graph, const std::vector<Pose>& nodes);

struct OptimizeReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
};

/**
 * Gauss-Newton over all nodes but the first, using right rotation
 * perturbations and world-frame translation increments. Stops when the step
 * norm drops below step_tolerance or after max_iterations.
 */
std::vector<Pose> optimize(const PoseGraph& graph, int max_iterations = 20,
                           OptimizeReport* report = nullptr, double step_tolerance = 1e-6);

/// Moves both poses of each frame by the rigid correction of its node.
std::vector<TrajectoryFrame> apply_corrections(const std::vector<TrajectoryFrame>& frames,
                                               const std::vector<Pose>& before,
                                               const std::vector<Pose>& after);

/// VERTEX_SE3:QUAT / EDGE_SE3:QUAT text dump.
void write_g2o(const std::string& path, const PoseGraph& graph);

}  // namespace ctlo
