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
 * \file voxel_map.hpp
 * \brief Sparse voxel hash holding the dense local map in the world frame.
 *
 * Each voxel keeps up to kCapacity points with a minimum pairwise spacing.
 * A full voxel never changes again. Neighborhoods are gathered from the
 * (2 * ring + 1)^3 voxels around the query voxel.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctlo/geometry.hpp"

namespace ctlo {

struct VoxelKey {
  int32_t i = 0;
  int32_t j = 0;
  int32_t k = 0;

  /// floor(p / size) componentwise.
  static VoxelKey Of(const Vec3& p, double size) {
    return {static_cast<int32_t>(std::floor(p.x() / size)),
            static_cast<int32_t>(std::floor(p.y() / size)),
            static_cast<int32_t>(std::floor(p.z() / size))};
  }

  bool operator==(const VoxelKey& o) const { return i == o.i && j == o.j && k == o.k; }
  bool operator<(const VoxelKey& o) const {
    if (i != o.i) return i < o.i;
    if (j != o.j) return j < o.j;
    return k < o.k;
  }
};

struct VoxelKeyHash {
  size_t operator()(const VoxelKey& key) const noexcept {
    uint64_t h = static_cast<uint32_t>(key.i);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<uint32_t>(key.j);
    h = h * 0xBF58476D1CE4E5B9ull ^ static_cast<uint32_t>(key.k);
    h ^= h >> 31;
    h *= 0x94D049BB133111EBull;
    h ^= h >> 29;
    return static_cast<size_t>(h);
  }
};

struct Voxel {
  std::vector<Vec3> points;
};

struct InsertReport {
  size_t inserted = 0;
  size_t rejected = 0;
};

/** \brief k nearest map points around a query plus their local geometry. */
struct NeighborhoodStats {
  /// Sorted by increasing distance to the query.
  std::vector<Vec3> neighbors;
  /// Eigenvector of the smallest covariance eigenvalue, oriented to the viewpoint.
  Vec3 normal = Vec3::UnitZ();
  /// (sigma2 - sigma3) / sigma1 with sigma the square roots of the eigenvalues.
  double a2d = 0.0;
  /// sigma1 >= sigma2 >= sigma3.
  Vec3 sigmas = Vec3::Zero();
};

enum class NeighborhoodStatus { kOk, kEmpty, kDegenerate };

struct VoxelMapParams {
  double voxel_size = 1.0;
  int max_points_per_voxel = 20;
  double min_point_distance = 0.10;
  /// Neighborhoods with fewer points are rejected as degenerate.
  int min_neighbors = 5;
};

class VoxelMap {
 public:
  static constexpr int kDefaultNeighbors = 20;

  explicit VoxelMap(double voxel_size = 1.0);
  explicit VoxelMap(const VoxelMapParams& params);

  const VoxelMapParams& params() const { return params_; }
  double voxel_size() const { return params_.voxel_size; }

  /// Inserts points in input order, honoring capacity and minimum spacing.
  InsertReport insert_scan(std::span<const Vec3> points);

  /**
   * \brief Gathers the k nearest points among the neighbor voxels of query.
   *
   * Throws ErrorCode::kEmptyNeighborhood when no candidate exists and
   * ErrorCode::kDegenerateNeighborhood below params().min_neighbors points.
   * The normal is oriented toward `viewpoint`.
   */
  NeighborhoodStats nearest_neighbors(const Vec3& query, int k = kDefaultNeighbors,
                                      int ring = 1, const Vec3& viewpoint = Vec3::Zero()) const;

  /// Non-throwing variant used in the registration hot loop.
  NeighborhoodStatus query(const Vec3& query, int k, int ring, const Vec3& viewpoint,
                           NeighborhoodStats& out) const;

  /// All points stored in the (2 * ring + 1)^3 voxels around the query voxel.
  std::vector<Vec3> candidates(const Vec3& query, int ring = 1) const;

  /// Removes every voxel whose center lies farther than radius from center.
  size_t evict_far_voxels(const Vec3& center, double radius);

  Vec3 voxel_center(const VoxelKey& key) const;
  bool contains(const VoxelKey& key) const { return voxels_.count(key) > 0; }
  bool is_occupied(const Vec3& p) const { return contains(VoxelKey::Of(p, voxel_size())); }

  size_t num_voxels() const { return voxels_.size(); }
  size_t num_points() const { return num_points_; }
  bool empty() const { return voxels_.empty(); }
  void clear();

  /// Points ordered by voxel key then insertion order.
  std::vector<Vec3> points() const;
  const std::unordered_map<VoxelKey, Voxel, VoxelKeyHash>& voxels() const { return voxels_; }

  /// Writes every map point to a binary PLY file.
  void export_ply(const std::string& path) const;

 private:
  VoxelMapParams params_;
  std::unordered_map<VoxelKey, Voxel, VoxelKeyHash> voxels_;
  size_t num_points_ = 0;
};

/// Covariance analysis of a point set: normal, planarity and sigmas.
void compute_neighborhood_geometry(std::span<const Vec3> points, const Vec3& viewpoint,
                                   NeighborhoodStats& stats);

}  // namespace ctlo
