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
 * \file evaluation.hpp
 * \brief Trajectory error metrics.
 */
#pragma once

#include <span>
#include <vector>

#include "ctlo/geometry.hpp"

namespace ctlo {

struct RteOptions {
  std::vector<double> lengths = {100, 200, 300, 400, 500, 600, 700, 800};
  /// Stride between segment start indices.
  size_t stride = 1;
};

/**
 * \brief KITTI relative translation error in percent.
 *
 * For each start index and length L, the segment ends at the first pose whose
 * ground-truth path distance exceeds start + L. The error of a segment is the
 * translation of (gt_i^-1 gt_j)^-1 (est_i^-1 est_j) divided by L. Throws
 * kNoSegments when no segment fits and kDegenerateInput on size mismatch.
 */
double relative_translation_error(std::span<const Pose> estimate,
                                  std::span<const Pose> ground_truth,
                                  const RteOptions& options = {});

/// Cumulative path length of the positions.
std::vector<double> path_distances(std::span<const Pose> poses);

/// Mean position error after rigidly aligning the estimate onto the ground truth.
double absolute_trajectory_error(std::span<const Pose> estimate,
                                 std::span<const Pose> ground_truth);

}  // namespace ctlo
