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
#include <limits>
#include <vector>

#include "ctlo/geometry.hpp"

namespace ctlo {

/** \brief One LiDAR return in the sensor frame at its acquisition time. */
struct ScanPoint {
  Vec3 position = Vec3::Zero();
  /// Normalized timestamp in [0, 1] within the scan.
  double alpha = 0.0;
  /// Raw acquisition time in seconds; meaningful when Scan::has_timestamps.
  double timestamp = 0.0;
};

/** \brief Points of one sensor revolution. */
struct Scan {
  std::vector<ScanPoint> points;
  int64_t index = 0;
  double tau_begin = 0.0;
  double tau_end = 0.0;
  bool has_timestamps = false;
  bool has_alpha = false;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Recomputes tau_begin/tau_end from raw timestamps and sets every alpha.
void normalize_timestamps(Scan& scan);

/**
 * \brief Keeps at most one point per cubic cell of side cell_size.
 *
 * The survivor of a cell is the point closest to the cell center, the lowest
 * input index winning ties. Output is sorted by input index.
 */
std::vector<ScanPoint> grid_sample_keypoints(const Scan& scan, double cell_size);
std::vector<ScanPoint> grid_sample_keypoints(const std::vector<ScanPoint>& points,
                                             double cell_size);

/// Keeps points with r_min <= |p| <= r_max. Throws kEmptyScan if none survive.
Scan clip_by_range(const Scan& scan, double r_min,
                   double r_max = std::numeric_limits<double>::infinity());

}  // namespace ctlo
