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

#include "ctlo/pose_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "ctlo/errors.hpp"

namespace ctlo {

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Node update: rotation on the right, translation in the world frame.
Pose retract(const Pose& p, const Vec6& delta) {
  return Pose(p.rotation * exp_quat(delta.head<3>()), p.translation + delta.tail<3>());
}

/// Central-difference Jacobians of the edge error w.r.t. both node increments.
void edge_jacobians(const PoseGraphEdge& e, const Pose& from, const Pose& to, Mat6& J_from,
                    Mat6& J_to) {
  constexpr double h = 1e-6;
  for (int k = 0; k < 6; ++k) {
    Vec6 d = Vec6::Zero();
    d(k) = h;
    J_from.col(k) = (edge_error(e, retract(from, d), to) - edge_error(e, retract(from, -d), to)) /
                    (2.0 * h);
    J_to.col(k) =
        (edge_error(e, from, retract(to, d)) - edge_error(e, from, retract(to, -d))) / (2.0 * h);
  }
}

}  // namespace

size_t PoseGraph::num_loop_edges() const {
  return static_cast<size_t>(
      std::count_if(edges.begin(), edges.end(), [](const PoseGraphEdge& e) { return e.loop; }));
}

PoseGraph build_graph(const std::vector<TrajectoryFrame>& frames,
                      const std::vector<LoopConstraint>& loops, const PoseGraphParams& params) {
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "pose graph needs frames");
  PoseGraph graph;
  graph.nodes.reserve(frames.size());
  for (const auto& f : frames) graph.nodes.push_back(interpolate_pose(f, params.node_alpha));
  for (size_t n = 0; n + 1 < graph.nodes.size(); ++n) {
    graph.edges.push_back({static_cast<int64_t>(n), static_cast<int64_t>(n + 1),
                           graph.nodes[n].inverse() * graph.nodes[n + 1], params.odometry_weight,
                           false});
  }
  const auto count = static_cast<int64_t>(graph.nodes.size());
  for (const LoopConstraint& l : loops) {
    if (l.scan_a < 0 || l.scan_b < 0 || l.scan_a >= count || l.scan_b >= count)
      throw Error(ErrorCode::kInvalidArgument, "loop constraint refers to a missing scan");
    graph.edges.push_back(
        {l.scan_a, l.scan_b, l.relative, l.score * params.loop_weight_scale, true});
  }
  return graph;
}

Vec6 edge_error(const PoseGraphEdge& edge, const Pose& from, const Pose& to) {
  const Pose err = edge.measurement.inverse() * (from.inverse() * to);
  Vec6 e;
  e.head<3>() = log_quat(err.rotation);
  e.tail<3>() = err.translation;
  return e;
}

double graph_cost(const PoseGraph& graph, const std::vector<Pose>& nodes) {
  double cost = 0.0;
  for (const auto& e : graph.edges)
    cost += e.weight * edge_error(e, nodes[e.from], nodes[e.to]).squaredNorm();
  return cost;
}

std::vector<Pose> optimize(const PoseGraph& graph, int max_iterations, OptimizeReport* report,
                           double step_tolerance) {
  std::vector<Pose> nodes = graph.nodes;
  OptimizeReport local;
  local.initial_cost = graph_cost(graph, nodes);
  local.final_cost = local.initial_cost;
  const auto n = static_cast<int64_t>(nodes.size());
  if (n < 2 || graph.edges.empty()) {
    local.converged = true;
    if (report) *report = local;
    return nodes;
  }
  const int64_t dim = 6 * (n - 1);  // node 0 is the gauge

  for (int it = 0; it < max_iterations; ++it) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges.size() * 4 * 36);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    for (const auto& e : graph.edges) {
      Mat6 Ji, Jj;
      edge_jacobians(e, nodes[e.from], nodes[e.to], Ji, Jj);
      const Vec6 r = edge_error(e, nodes[e.from], nodes[e.to]);
      const int64_t ids[2] = {e.from, e.to};
      const Mat6* Js[2] = {&Ji, &Jj};
      for (int u = 0; u < 2; ++u) {
        if (ids[u] == 0) continue;
        const int64_t ru = 6 * (ids[u] - 1);
        b.segment<6>(ru) -= e.weight * Js[u]->transpose() * r;
        for (int v = 0; v < 2; ++v) {
          if (ids[v] == 0) continue;
          const int64_t rv = 6 * (ids[v] - 1);
          const Mat6 block = e.weight * Js[u]->transpose() * *Js[v];
          for (int p = 0; p < 6; ++p)
            for (int q = 0; q < 6; ++q) triplets.emplace_back(ru + p, rv + q, block(p, q));
        }
      }
    }
    for (int64_t k = 0; k < dim; ++k) triplets.emplace_back(k, k, 1e-9);
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(H);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorCode::kSolverFailure, "pose-graph normal equations are singular");
    const Eigen::VectorXd dx = solver.solve(b);
    if (solver.info() != Eigen::Success || !dx.allFinite())
      throw Error(ErrorCode::kSolverFailure, "pose-graph solve failed");

    // step halving keeps the cost monotone
    const double current = graph_cost(graph, nodes);
    std::vector<Pose> trial(nodes.size());
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 4; ++halving, scale *= 0.5) {
      trial[0] = nodes[0];
      for (int64_t k = 1; k < n; ++k)
        trial[k] = retract(nodes[k], scale * dx.segment<6>(6 * (k - 1)));
      if (graph_cost(graph, trial) <= current) {
        accepted = true;
        break;
      }
    }
    local.iterations = it + 1;
    if (!accepted) {
      local.converged = true;
      break;
    }
    nodes.swap(trial);
    if (scale * dx.norm() < step_tolerance) {
      local.converged = true;
      break;
    }
  }
  local.final_cost = graph_cost(graph, nodes);
  if (report) *report = local;
  return nodes;
}

std::vector<TrajectoryFrame> apply_corrections(const std::vector<TrajectoryFrame>& frames,
                                               const std::vector<Pose>& before,
                                               const std::vector<Pose>& after) {
  if (frames.size() != before.size() || frames.size() != after.size())
    throw Error(ErrorCode::kInvalidArgument, "correction needs one node per frame");
  std::vector<TrajectoryFrame> out = frames;
  for (size_t k = 0; k < frames.size(); ++k) {
    const Pose c = after[k] * before[k].inverse();
    out[k].begin = c * frames[k].begin;
    out[k].end = c * frames[k].end;
  }
  return out;
}

void write_g2o(const std::string& path, const PoseGraph& graph) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  auto pose_fields = [](const Pose& p) {
    const Quat& q = p.rotation;
    return fmt::format("{} {} {} {} {} {} {}", p.translation.x(), p.translation.y(),
                       p.translation.z(), q.x(), q.y(), q.z(), q.w());
  };
  for (size_t k = 0; k < graph.nodes.size(); ++k)
    out << fmt::format("VERTEX_SE3:QUAT {} {}\n", k, pose_fields(graph.nodes[k]));
  out << "FIX 0\n";
  for (const auto& e : graph.edges) {
    // upper triangle of the 6x6 information matrix (translation first)
    std::string info;
    for (int r = 0; r < 6; ++r)
      for (int c = r; c < 6; ++c) info += fmt::format(" {}", r == c ? e.weight : 0.0);
    out << fmt::format("EDGE_SE3:QUAT {} {} {}{}\n", e.from, e.to, pose_fields(e.measurement),
                       info);
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

}  // namespace ctlo
