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
 * \file io.hpp
 * \brief Scan, trajectory and raster file formats.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctlo/geometry.hpp"
#include "ctlo/scan.hpp"

namespace ctlo::io {

/// KITTI velodyne file: little-endian float32 (x, y, z, reflectance) records.
Scan read_kitti_bin(const std::filesystem::path& path);
void write_kitti_bin(const std::filesystem::path& path, const Scan& scan);

/**
 * \brief Sets alpha from the azimuth progress relative to the first point.
 *
 * alpha = ((az - az_0) mod 360) / 360, so one revolution maps onto [0, 1).
 * Set clockwise for sensors whose azimuth decreases while spinning.
 */
Scan estimate_timestamps_from_azimuth(const Scan& scan, bool clockwise = false);

/// Raises the elevation of every point by angle_deg, preserving its range.
Scan apply_intrinsic_vertical_correction(const Scan& scan, double angle_deg = 0.205);

/**
 * \brief PLY reader accepting ascii and binary little-endian encodings.
 *
 * The vertex element must provide x, y and z. A "timestamp" (or "time", "t")
 * property sets raw timestamps and an "alpha" property sets alpha directly.
 */
Scan read_ply(const std::filesystem::path& path);
/// Binary little-endian PLY with float64 fields, lossless for read_ply.
void write_ply(const std::filesystem::path& path, const Scan& scan);

/// One line per frame: index, t_b(3), q_b(x y z w), t_e(3), q_e(x y z w).
void write_trajectory(const std::filesystem::path& path,
                      const std::vector<TrajectoryFrame>& frames);
std::vector<TrajectoryFrame> read_trajectory(const std::filesystem::path& path);

/// KITTI pose file: 12 numbers per line, the row-major 3x4 matrix.
void write_kitti_poses(const std::filesystem::path& path, const std::vector<Pose>& poses);
std::vector<Pose> read_kitti_poses(const std::filesystem::path& path);

/// Reads either trajectory format, choosing by the column count of the first line.
std::vector<Pose> read_poses(const std::filesystem::path& path, double alpha = 0.5);

/// Binary 8-bit PGM (P5).
void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<uint8_t>& pixels);

void write_xy_csv(const std::filesystem::path& path, const std::vector<Pose>& poses);

/** \brief Sequential producer of scans. */
class ScanSource {
 public:
  virtual ~ScanSource() = default;
  /// Next scan, or nullopt once the source is exhausted.
  virtual std::optional<Scan> next() = 0;
  /// Number of scans if known.
  virtual std::optional<size_t> size() const { return std::nullopt; }
};

enum class ScanFormat { kPly, kKittiBin };

ScanFormat scan_format_from_string(const std::string& name);

struct DirectorySourceOptions {
  ScanFormat format = ScanFormat::kPly;
  /// Scan period used to build raw timestamps when a file has none.
  double scan_period = 0.1;
  /// Recover alpha from azimuth when a file carries no timing.
  bool azimuth_timestamps = true;
  bool clockwise = false;
  /// Apply the KITTI vertical angle correction.
  bool vertical_correction = false;
  double vertical_correction_deg = 0.205;
  /// Read at most this many scans (0 = all).
  size_t max_scans = 0;
};

/**
 * \brief Reads the scan files of a directory in lexicographic order.
 *
 * Throws ErrorCode::kIoError when the directory does not exist.
 */
class DirectoryScanSource : public ScanSource {
 public:
  DirectoryScanSource(const std::filesystem::path& dir, const DirectorySourceOptions& options);

  std::optional<Scan> next() override;
  std::optional<size_t> size() const override { return files_.size(); }

 private:
  DirectorySourceOptions options_;
  std::vector<std::filesystem::path> files_;
  size_t cursor_ = 0;
};

}  // namespace ctlo::io
