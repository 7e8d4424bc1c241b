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

#include "ctlo/scan.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ctlo/errors.hpp"
#include "ctlo/voxel_map.hpp"

namespace ctlo {

void normalize_timestamps(Scan& scan) {
  if (!scan.has_timestamps || scan.points.empty()) return;
  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : scan.points) {
    t_min = std::min(t_min, p.timestamp);
    t_max = std::max(t_max, p.timestamp);
  }
  scan.tau_begin = t_min;
  scan.tau_end = t_max;
  const double span = t_max - t_min;
  for (auto& p : scan.points)
    p.alpha = span > 0.0 ? std::clamp((p.timestamp - t_min) / span, 0.0, 1.0) : 0.0;
  scan.has_alpha = true;
}

std::vector<ScanPoint> grid_sample_keypoints(const std::vector<ScanPoint>& points,
                                             double cell_size) {
  if (!(cell_size > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cell_size must be > 0");

  struct Best {
    size_t index;
    double dist2;
  };
  std::unordered_map<VoxelKey, Best, VoxelKeyHash> cells;
  cells.reserve(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i].position;
    const VoxelKey key = VoxelKey::Of(p, cell_size);
    const Vec3 center = (Vec3(key.i, key.j, key.k) + Vec3::Constant(0.5)) * cell_size;
    const double d2 = (p - center).squaredNorm();
    auto [it, inserted] = cells.try_emplace(key, Best{i, d2});
    // strict comparison keeps the lowest index on ties
    if (!inserted && d2 < it->second.dist2) it->second = Best{i, d2};
  }

  std::vector<size_t> kept;
  kept.reserve(cells.size());
  for (const auto& [key, best] : cells) kept.push_back(best.index);
  std::sort(kept.begin(), kept.end());

  std::vector<ScanPoint> out;
  out.reserve(kept.size());
  for (size_t i : kept) out.push_back(points[i]);
  return out;
}

std::vector<ScanPoint> grid_sample_keypoints(const Scan& scan, double cell_size) {
  return grid_sample_keypoints(scan.points, cell_size);
}

Scan clip_by_range(const Scan& scan, double r_min, double r_max) {
  if (!(r_min >= 0.0) || !(r_min < r_max))
    throw Error(ErrorCode::kInvalidArgument, "range gate requires 0 <= r_min < r_max");
  Scan out;
  out.index = scan.index;
  out.tau_begin = scan.tau_begin;
  out.tau_end = scan.tau_end;
  out.has_timestamps = scan.has_timestamps;
  out.has_alpha = scan.has_alpha;
  out.points.reserve(scan.points.size());
  for (const auto& p : scan.points) {
    const double r = p.position.norm();
    if (r >= r_min && r <= r_max) out.points.push_back(p);
  }
  if (out.points.empty())
    throw Error(ErrorCode::kEmptyScan, "no point left inside the range gate");
  return out;
}

}  // namespace ctlo
