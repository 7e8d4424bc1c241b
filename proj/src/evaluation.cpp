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

#include "ctlo/evaluation.hpp"

#include <string>

#include "ctlo/errors.hpp"

namespace ctlo {

std::vector<double> path_distances(std::span<const Pose> poses) {
  std::vector<double> dist(poses.size(), 0.0);
  for (size_t i = 1; i < poses.size(); ++i)
    dist[i] = dist[i - 1] + (poses[i].translation - poses[i - 1].translation).norm();
  return dist;
}

double relative_translation_error(std::span<const Pose> estimate,
                                  std::span<const Pose> ground_truth,
                                  const RteOptions& options) {
  if (estimate.size() != ground_truth.size() || estimate.size() < 2)
    throw Error(ErrorCode::kDegenerateInput,
                "trajectories need equal sizes >= 2 (" + std::to_string(estimate.size()) + " vs " +
                    std::to_string(ground_truth.size()) + ")");
  const std::vector<double> dist = path_distances(ground_truth);
  const size_t stride = std::max<size_t>(options.stride, 1);
  double sum = 0.0;
  size_t count = 0;
  for (size_t first = 0; first < ground_truth.size(); first += stride) {
    for (double length : options.lengths) {
      size_t last = first;
      while (last < dist.size() && dist[last] <= dist[first] + length) ++last;
      if (last >= dist.size()) continue;
      const Pose gt_delta = ground_truth[first].inverse() * ground_truth[last];
      const Pose est_delta = estimate[first].inverse() * estimate[last];
      const Pose error = gt_delta.inverse() * est_delta;
      sum += error.translation.norm() / length;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kNoSegments, "trajectory shorter than every segment");
  return 100.0 * sum / static_cast<double>(count);
}

double absolute_trajectory_error(std::span<const Pose> estimate,
                                 std::span<const Pose> ground_truth) {
  if (estimate.size() != ground_truth.size())
    throw Error(ErrorCode::kDegenerateInput, "trajectories have different sizes");
  std::vector<Vec3> src, dst;
  src.reserve(estimate.size());
  dst.reserve(estimate.size());
  for (size_t i = 0; i < estimate.size(); ++i) {
    src.push_back(estimate[i].translation);
    dst.push_back(ground_truth[i].translation);
  }
  const Pose align = fit_rigid_transform(src, dst);
  double sum = 0.0;
  for (size_t i = 0; i < src.size(); ++i) sum += (align * src[i] - dst[i]).norm();
  return sum / static_cast<double>(src.size());
}

}  // namespace ctlo
