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

#include "ctlo/voxel_map.hpp"

#include <algorithm>
#include <map>

#include <Eigen/Eigenvalues>

#include "ctlo/errors.hpp"
#include "ctlo/io.hpp"

namespace ctlo {

namespace {

struct Candidate {
  double dist2;
  Vec3 point;
};

bool closer(const Candidate& a, const Candidate& b) {
  if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
  if (a.point.x() != b.point.x()) return a.point.x() < b.point.x();
  if (a.point.y() != b.point.y()) return a.point.y() < b.point.y();
  return a.point.z() < b.point.z();
}

}  // namespace

VoxelMap::VoxelMap(double voxel_size) : VoxelMap(VoxelMapParams{voxel_size}) {}

VoxelMap::VoxelMap(const VoxelMapParams& params) : params_(params) {
  if (!(params_.voxel_size > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "voxel size must be > 0");
}

InsertReport VoxelMap::insert_scan(std::span<const Vec3> points) {
  InsertReport report;
  const double min_d2 = params_.min_point_distance * params_.min_point_distance;
  const size_t capacity = static_cast<size_t>(params_.max_points_per_voxel);
  for (const Vec3& p : points) {
    Voxel& voxel = voxels_[VoxelKey::Of(p, params_.voxel_size)];
    if (voxel.points.size() >= capacity) {
      ++report.rejected;
      continue;
    }
    bool too_close = false;
    for (const Vec3& q : voxel.points) {
      if ((q - p).squaredNorm() < min_d2) {
        too_close = true;
        break;
      }
    }
    if (too_close) {
      ++report.rejected;
      continue;
    }
    if (voxel.points.empty()) voxel.points.reserve(capacity);
    voxel.points.push_back(p);
    ++report.inserted;
    ++num_points_;
  }
  return report;
}

std::vector<Vec3> VoxelMap::candidates(const Vec3& query, int ring) const {
  std::vector<Vec3> out;
  const VoxelKey c = VoxelKey::Of(query, params_.voxel_size);
  for (int di = -ring; di <= ring; ++di)
    for (int dj = -ring; dj <= ring; ++dj)
      for (int dk = -ring; dk <= ring; ++dk) {
        auto it = voxels_.find({c.i + di, c.j + dj, c.k + dk});
        if (it == voxels_.end()) continue;
        out.insert(out.end(), it->second.points.begin(), it->second.points.end());
      }
  return out;
}

void compute_neighborhood_geometry(std::span<const Vec3> points, const Vec3& viewpoint,
                                   NeighborhoodStats& stats) {
  const double n = static_cast<double>(points.size());
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= n;
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= n;

  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  // eigenvalues ascending
  const Vec3 lambda = es.eigenvalues().cwiseMax(0.0);
  const double s1 = std::sqrt(lambda(2));
  const double s2 = std::sqrt(lambda(1));
  const double s3 = std::sqrt(lambda(0));
  stats.sigmas = Vec3(s1, s2, s3);
  stats.a2d = s1 > 0.0 ? std::clamp((s2 - s3) / s1, 0.0, 1.0) : 0.0;

  Vec3 normal = es.eigenvectors().col(0).normalized();
  if (normal.dot(viewpoint - mean) < 0.0) normal = -normal;
  stats.normal = normal;
}

NeighborhoodStatus VoxelMap::query(const Vec3& query, int k, int ring, const Vec3& viewpoint,
                                   NeighborhoodStats& out) const {
  thread_local std::vector<Candidate> scratch;
  scratch.clear();
  const VoxelKey c = VoxelKey::Of(query, params_.voxel_size);
  for (int di = -ring; di <= ring; ++di)
    for (int dj = -ring; dj <= ring; ++dj)
      for (int dk = -ring; dk <= ring; ++dk) {
        auto it = voxels_.find({c.i + di, c.j + dj, c.k + dk});
        if (it == voxels_.end()) continue;
        for (const Vec3& p : it->second.points)
          scratch.push_back({(p - query).squaredNorm(), p});
      }

  out.neighbors.clear();
  if (scratch.empty()) return NeighborhoodStatus::kEmpty;

  const size_t kk = std::min<size_t>(static_cast<size_t>(std::max(k, 1)), scratch.size());
  if (kk < scratch.size())
    std::nth_element(scratch.begin(), scratch.begin() + kk, scratch.end(), closer);
  std::sort(scratch.begin(), scratch.begin() + kk, closer);
  out.neighbors.reserve(kk);
  for (size_t i = 0; i < kk; ++i) out.neighbors.push_back(scratch[i].point);

  if (static_cast<int>(kk) < params_.min_neighbors) return NeighborhoodStatus::kDegenerate;
  compute_neighborhood_geometry(out.neighbors, viewpoint, out);
  return NeighborhoodStatus::kOk;
}

NeighborhoodStats VoxelMap::nearest_neighbors(const Vec3& query, int k, int ring,
                                              const Vec3& viewpoint) const {
  NeighborhoodStats stats;
  switch (this->query(query, k, ring, viewpoint, stats)) {
    case NeighborhoodStatus::kEmpty:
      throw Error(ErrorCode::kEmptyNeighborhood, "no map point near the query");
    case NeighborhoodStatus::kDegenerate:
      throw Error(ErrorCode::kDegenerateNeighborhood,
                  "only " + std::to_string(stats.neighbors.size()) + " neighbors");
    case NeighborhoodStatus::kOk:
      break;
  }
  return stats;
}

Vec3 VoxelMap::voxel_center(const VoxelKey& key) const {
  return (Vec3(key.i, key.j, key.k) + Vec3::Constant(0.5)) * params_.voxel_size;
}

size_t VoxelMap::evict_far_voxels(const Vec3& center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radius must be > 0");
  const double r2 = radius * radius;
  size_t evicted = 0;
  for (auto it = voxels_.begin(); it != voxels_.end();) {
    if ((voxel_center(it->first) - center).squaredNorm() > r2) {
      num_points_ -= it->second.points.size();
      it = voxels_.erase(it);
      ++evicted;
    } else {
      ++it;
    }
  }
  return evicted;
}

void VoxelMap::clear() {
  voxels_.clear();
  num_points_ = 0;
}

std::vector<Vec3> VoxelMap::points() const {
  std::map<VoxelKey, const Voxel*> ordered;
  for (const auto& [key, voxel] : voxels_) ordered.emplace(key, &voxel);
  std::vector<Vec3> out;
  out.reserve(num_points_);
  for (const auto& [key, voxel] : ordered)
    out.insert(out.end(), voxel->points.begin(), voxel->points.end());
  return out;
}

void VoxelMap::export_ply(const std::string& path) const {
  Scan scan;
  for (const Vec3& p : points()) scan.points.push_back({p, 0.0, 0.0});
  io::write_ply(path, scan);
}

}  // namespace ctlo
