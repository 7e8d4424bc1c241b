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
#include <optional>
#include <string>
#include <vector>

#include "ctlo/geometry.hpp"
#include "ctlo/scan.hpp"

namespace ctlo {

struct ElevationGridParams {
  double cell_size = 0.5;
  /// Height of the retained band above z_min.
  double z_band = 10.0;
  /// z_min sits this far below the estimated ground height.
  double ground_margin = 0.5;
  /// Horizontal radius around the anchor that is rasterized.
  double max_radius = 40.0;
  /// Radius used to estimate the ground height under the anchor.
  double ground_radius = 8.0;
  /// Fraction of valid cells below which the grid is rejected.
  double min_valid_fraction = 0.10;
  /// Rotation applied to anchor-frame points so that +z points up.
  Quat gravity_alignment = Quat::Identity();
};

/**
 * \brief Max-height raster of an aggregated local map.
 *
 * Cell (ix, iy) covers [origin_x + ix * cell, origin_x + (ix + 1) * cell) and
 * the analogous y range, both in the gravity-aligned anchor frame. Invalid
 * cells hold NaN.
 */
struct ElevationGrid {
  int64_t n_start = 0;
  int64_t n_end = 0;
  int64_t anchor_scan = 0;
  /// Pose of the anchor scan (mid-scan pose).
  Pose anchor;
  /// Anchor position with the heading only; the raster frame.
  Pose gravity_anchor;
  double cell_size = 0.5;
  double origin_x = 0.0;
  double origin_y = 0.0;
  int width = 0;
  int height = 0;
  double ground_z = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  std::vector<float> cells;

  bool valid(int ix, int iy) const;
  float at(int ix, int iy) const { return cells[static_cast<size_t>(iy) * width + ix]; }
  size_t valid_count() const;
};

/**
 * Builds the grid of scans [n_start, n_start + frames.size()) given their
 * registered frames and (sensor-frame) points. Throws kDegenerateGrid when
 * too few cells are filled and kInvalidArgument on mismatched inputs.
 */
ElevationGrid build_elevation_grid(const std::vector<TrajectoryFrame>& frames,
                                   const std::vector<std::vector<ScanPoint>>& scans,
                                   int64_t n_start, const ElevationGridParams& params);

/// Rasterizes gravity-frame points directly. Used by the grid builder and by tests.
ElevationGrid rasterize_points(const std::vector<Vec3>& points, double cell_size, double z_min,
                               double z_max, double max_radius);

struct MatchParams {
  double yaw_step_deg = 1.0;
  double min_score = 0.7;
  /// Overlap as a fraction of the smaller grid's valid cells.
  double min_overlap = 0.30;
  bool refine = true;
};

struct LoopConstraint {
  int64_t grid_a = 0;
  int64_t grid_b = 0;
  int64_t scan_a = 0;
  int64_t scan_b = 0;
  /// Maps grid b's raster frame into grid a's: p_a = T * p_b.
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  /// Relative pose between the two anchor scans, anchor_a^-1 * anchor_b.
  Pose relative;
  double score = 0.0;
  double overlap = 0.0;
};

/// Exhaustive yaw sweep with masked normalized cross-correlation over translations.
std::optional<LoopConstraint> match_grids(const ElevationGrid& a, const ElevationGrid& b,
                                          const MatchParams& params = {});

struct LoopDetectionParams {
  double search_radius = 100.0;
  int min_separation = 3;
  /// A match may move grid b, relative to grid a, by at most this fraction of
  /// the anchor-to-anchor path. 0 disables the check.
  double max_correction_ratio = 0.1;
  MatchParams match;
};

/**
 * Matches the last grid against every earlier grid that is close enough and
 * far enough apart in sequence. Grid indices are positions in the list.
 */
std::vector<LoopConstraint> detect_loops_for_last(const std::vector<ElevationGrid>& grids,
                                                  const LoopDetectionParams& params);

/// Runs detect_loops_for_last over every prefix of the list.
std::vector<LoopConstraint> detect_loops(const std::vector<ElevationGrid>& grids,
                                         const LoopDetectionParams& params);

/// Writes the raster as an 8-bit PGM, heights scaled to 1..255 and invalid cells to 0.
void export_grid_pgm(const ElevationGrid& grid, const std::string& path);

}  // namespace ctlo
