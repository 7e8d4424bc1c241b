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

#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include <gtest/gtest.h>

#include "ctlo/errors.hpp"
#include "ctlo/scan.hpp"

namespace ctlo {
namespace {

Scan random_scan(size_t n, uint64_t seed, double extent = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  Scan scan;
  for (size_t i = 0; i < n; ++i) {
    ScanPoint p;
    p.position = Vec3(u(rng), u(rng), u(rng));
    p.alpha = static_cast<double>(i) / n;
    scan.points.push_back(p);
  }
  scan.has_alpha = true;
  return scan;
}

TEST(GridSample, MatchesIndependentCellSelection) {
  const Scan scan = random_scan(5000, 11);
  const double cell = 1.3;
  // reference: per cell, the closest point to the center, lowest index on ties
  std::map<std::tuple<long, long, long>, size_t> best;
  for (size_t i = 0; i < scan.points.size(); ++i) {
    const Vec3& p = scan.points[i].position;
    const auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / cell)),
                                     static_cast<long>(std::floor(p.y() / cell)),
                                     static_cast<long>(std::floor(p.z() / cell)));
    const Vec3 center = (Vec3(std::get<0>(key), std::get<1>(key), std::get<2>(key)) +
                         Vec3::Constant(0.5)) * cell;
    auto it = best.find(key);
    if (it == best.end()) {
      best[key] = i;
    } else if ((p - center).squaredNorm() <
               (scan.points[it->second].position - center).squaredNorm()) {
      it->second = i;
    }
  }
  std::vector<size_t> expected;
  for (const auto& [key, index] : best) expected.push_back(index);
  std::sort(expected.begin(), expected.end());

  const auto kept = grid_sample_keypoints(scan, cell);
  ASSERT_EQ(kept.size(), expected.size());
  for (size_t k = 0; k < kept.size(); ++k)
    EXPECT_EQ(kept[k].position, scan.points[expected[k]].position);
}

TEST(GridSample, RejectsNonPositiveCell) {
  const Scan scan = random_scan(10, 1);
  EXPECT_THROW(grid_sample_keypoints(scan, 0.0), Error);
  EXPECT_THROW(grid_sample_keypoints(scan, -1.0), Error);
}

TEST(ClipByRange, KeepsClosedInterval) {
  Scan scan;
  for (double r : {0.5, 1.0, 2.0, 50.0, 100.0, 100.5}) scan.points.push_back({Vec3(r, 0, 0)});
  const Scan clipped = clip_by_range(scan, 1.0, 100.0);
  ASSERT_EQ(clipped.size(), 4u);
  EXPECT_EQ(clipped.points.front().position.x(), 1.0);
  EXPECT_EQ(clipped.points.back().position.x(), 100.0);
}

TEST(ClipByRange, EmptyResultThrows) {
  Scan scan;
  scan.points.push_back({Vec3(0.2, 0, 0)});
  try {
    clip_by_range(scan, 1.0, 2.0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyScan);
  }
  EXPECT_THROW(clip_by_range(scan, 3.0, 2.0), Error);
}

TEST(NormalizeTimestamps, MapsToUnitInterval) {
  Scan scan;
  for (double t : {10.05, 10.0, 10.1, 10.025}) {
    ScanPoint p;
    p.timestamp = t;
    scan.points.push_back(p);
  }
  scan.has_timestamps = true;
  normalize_timestamps(scan);
  EXPECT_TRUE(scan.has_alpha);
  EXPECT_DOUBLE_EQ(scan.tau_begin, 10.0);
  EXPECT_DOUBLE_EQ(scan.tau_end, 10.1);
  EXPECT_NEAR(scan.points[0].alpha, 0.5, 1e-12);
  EXPECT_EQ(scan.points[1].alpha, 0.0);
  EXPECT_EQ(scan.points[2].alpha, 1.0);
  EXPECT_NEAR(scan.points[3].alpha, 0.25, 1e-12);
}

}  // namespace
}  // namespace ctlo
