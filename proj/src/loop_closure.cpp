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

#include "ctlo/loop_closure.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>

#include <spdlog/spdlog.h>

#include "ctlo/errors.hpp"
#include "ctlo/io.hpp"

namespace ctlo {

namespace {

constexpr float kInvalid = std::numeric_limits<float>::quiet_NaN();

/// Smallest m >= n whose only prime factors are 2, 3, 5 and 7.
int fft_friendly_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

using Spectrum = std::vector<std::complex<double>>;

/** \brief Zero-padded 2D real FFTs of a fixed size for cross-correlation. */
class Correlator {
 public:
  Correlator(int rows, int cols)
      : rows_(rows), cols_(cols), half_(cols / 2 + 1) {
    real_ = fftw_alloc_real(static_cast<size_t>(rows_) * cols_);
    complex_ = fftw_alloc_complex(static_cast<size_t>(rows_) * half_);
    forward_ = fftw_plan_dft_r2c_2d(rows_, cols_, real_, complex_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_2d(rows_, cols_, complex_, real_, FFTW_ESTIMATE);
  }
  ~Correlator() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(complex_);
  }
  Correlator(const Correlator&) = delete;
  Correlator& operator=(const Correlator&) = delete;

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  /// Transform of an image stored row-major in a rows x cols buffer.
  Spectrum forward(const std::vector<double>& image) {
    std::copy(image.begin(), image.end(), real_);
    fftw_execute(forward_);
    Spectrum out(static_cast<size_t>(rows_) * half_);
    std::copy_n(reinterpret_cast<std::complex<double>*>(complex_), out.size(), out.begin());
    return out;
  }

  /// out(k) = sum_i x(i + k) y(i), circularly.
  void correlate(const Spectrum& x, const Spectrum& y, std::vector<double>& out) {
    auto* c = reinterpret_cast<std::complex<double>*>(complex_);
    for (size_t i = 0; i < x.size(); ++i) c[i] = x[i] * std::conj(y[i]);
    fftw_execute(inverse_);
    const double scale = 1.0 / (static_cast<double>(rows_) * cols_);
    out.resize(static_cast<size_t>(rows_) * cols_);
    for (size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * scale;
  }

 private:
  int rows_;
  int cols_;
  int half_;
  double* real_ = nullptr;
  fftw_complex* complex_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

struct Images {
  std::vector<double> mask;
  std::vector<double> value;
  std::vector<double> square;
};

/// Places a w x h raster (NaN = invalid) in the corner of a padded image triple.
Images pad(const std::vector<float>& cells, int w, int h, int rows, int cols) {
  Images im;
  const size_t n = static_cast<size_t>(rows) * cols;
  im.mask.assign(n, 0.0);
  im.value.assign(n, 0.0);
  im.square.assign(n, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float z = cells[static_cast<size_t>(y) * w + x];
      if (std::isnan(z)) continue;
      const size_t k = static_cast<size_t>(y) * cols + x;
      im.mask[k] = 1.0;
      im.value[k] = z;
      im.square[k] = double(z) * z;
    }
  }
  return im;
}

/// Grid b resampled (nearest cell) onto grid a's lattice after rotating by yaw.
struct RotatedRaster {
  std::vector<float> cells;
  int width = 0;
  int height = 0;
  /// Lattice index (relative to a's origin) of local cell (0, 0).
  int kx = 0;
  int ky = 0;
};

RotatedRaster rotate_onto(const ElevationGrid& b, double yaw, double origin_x, double origin_y,
                          double cell) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double x0 = b.origin_x, x1 = b.origin_x + b.width * b.cell_size;
  const double y0 = b.origin_y, y1 = b.origin_y + b.height * b.cell_size;
  double min_x = std::numeric_limits<double>::max(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (double px : {x0, x1}) {
    for (double py : {y0, y1}) {
      const double rx = c * px - s * py, ry = s * px + c * py;
      min_x = std::min(min_x, rx);
      max_x = std::max(max_x, rx);
      min_y = std::min(min_y, ry);
      max_y = std::max(max_y, ry);
    }
  }
  RotatedRaster r;
  r.kx = static_cast<int>(std::floor((min_x - origin_x) / cell));
  r.ky = static_cast<int>(std::floor((min_y - origin_y) / cell));
  r.width = static_cast<int>(std::floor((max_x - origin_x) / cell)) - r.kx + 1;
  r.height = static_cast<int>(std::floor((max_y - origin_y) / cell)) - r.ky + 1;
  r.cells.assign(static_cast<size_t>(r.width) * r.height, kInvalid);
  for (int ly = 0; ly < r.height; ++ly) {
    const double py = origin_y + (ly + r.ky + 0.5) * cell;
    for (int lx = 0; lx < r.width; ++lx) {
      const double px = origin_x + (lx + r.kx + 0.5) * cell;
      // back-rotate into b's frame
      const double bx = c * px + s * py, by = -s * px + c * py;
      const int ix = static_cast<int>(std::floor((bx - b.origin_x) / b.cell_size));
      const int iy = static_cast<int>(std::floor((by - b.origin_y) / b.cell_size));
      if (ix < 0 || iy < 0 || ix >= b.width || iy >= b.height) continue;
      r.cells[static_cast<size_t>(ly) * r.width + lx] = b.at(ix, iy);
    }
  }
  return r;
}

/// Bilinear height of a at (x, y); false unless all four support cells are valid.
bool bilinear(const ElevationGrid& a, double x, double y, double& z, double& dzdx, double& dzdy) {
  const double u = (x - a.origin_x) / a.cell_size - 0.5;
  const double v = (y - a.origin_y) / a.cell_size - 0.5;
  const int ix = static_cast<int>(std::floor(u)), iy = static_cast<int>(std::floor(v));
  if (ix < 0 || iy < 0 || ix + 1 >= a.width || iy + 1 >= a.height) return false;
  if (!a.valid(ix, iy) || !a.valid(ix + 1, iy) || !a.valid(ix, iy + 1) || !a.valid(ix + 1, iy + 1))
    return false;
  const double fx = u - ix, fy = v - iy;
  const double z00 = a.at(ix, iy), z10 = a.at(ix + 1, iy);
  const double z01 = a.at(ix, iy + 1), z11 = a.at(ix + 1, iy + 1);
  z = (1 - fx) * (1 - fy) * z00 + fx * (1 - fy) * z10 + (1 - fx) * fy * z01 + fx * fy * z11;
  dzdx = ((1 - fy) * (z10 - z00) + fy * (z11 - z01)) / a.cell_size;
  dzdy = ((1 - fx) * (z01 - z00) + fx * (z11 - z10)) / a.cell_size;
  return true;
}

struct Planar {
  double yaw = 0.0;
  double x = 0.0;
  double y = 0.0;
  double dz = 0.0;
};

/// Robust point-to-raster cost of b's cells placed in a by the planar transform.
double raster_cost(const ElevationGrid& a, const ElevationGrid& b, const Planar& t, double scale,
                   Eigen::Matrix4d* H = nullptr, Eigen::Vector4d* g = nullptr) {
  const double c = std::cos(t.yaw), s = std::sin(t.yaw);
  const double c2 = scale * scale;
  double cost = 0.0;
  size_t used = 0;
  if (H) H->setZero();
  if (g) g->setZero();
  for (int iy = 0; iy < b.height; ++iy) {
    for (int ix = 0; ix < b.width; ++ix) {
      if (!b.valid(ix, iy)) continue;
      const double bx = b.origin_x + (ix + 0.5) * b.cell_size;
      const double by = b.origin_y + (iy + 0.5) * b.cell_size;
      const double px = c * bx - s * by + t.x, py = s * bx + c * by + t.y;
      double z, gx, gy;
      if (!bilinear(a, px, py, z, gx, gy)) continue;
      const double r = z - (b.at(ix, iy) + t.dz);
      cost += c2 * std::log1p(r * r / c2);
      ++used;
      if (H) {
        const double w = 1.0 / (1.0 + r * r / c2);
        Eigen::Vector4d J(gx * (-s * bx - c * by) + gy * (c * bx - s * by), gx, gy, -1.0);
        *H += w * J * J.transpose();
        *g += w * J * r;
      }
    }
  }
  return used == 0 ? std::numeric_limits<double>::infinity() : cost / double(used);
}

/// One damped Gauss-Newton step on (yaw, x, y, dz), kept only if the cost drops.
Planar refine(const ElevationGrid& a, const ElevationGrid& b, const Planar& start) {
  constexpr double kScale = 0.3;
  Eigen::Matrix4d H;
  Eigen::Vector4d g;
  const double cost0 = raster_cost(a, b, start, kScale, &H, &g);
  if (!std::isfinite(cost0)) return start;
  H.diagonal().array() += 1e-6;
  const Eigen::Vector4d step = -H.ldlt().solve(g);
  if (!step.allFinite()) return start;
  double lambda = 1.0;
  for (int k = 0; k < 5; ++k, lambda *= 0.5) {
    Planar trial{start.yaw + lambda * step(0), start.x + lambda * step(1),
                 start.y + lambda * step(2), start.dz + lambda * step(3)};
    if (raster_cost(a, b, trial, kScale) < cost0) return trial;
  }
  return start;
}

Pose planar_pose(double yaw, double x, double y, double z) {
  return Pose(rot_z(yaw), Vec3(x, y, z));
}

}  // namespace

bool ElevationGrid::valid(int ix, int iy) const {
  if (ix < 0 || iy < 0 || ix >= width || iy >= height) return false;
  return !std::isnan(at(ix, iy));
}

size_t ElevationGrid::valid_count() const {
  return static_cast<size_t>(
      std::count_if(cells.begin(), cells.end(), [](float z) { return !std::isnan(z); }));
}

ElevationGrid rasterize_points(const std::vector<Vec3>& points, double cell_size, double z_min,
                               double z_max, double max_radius) {
  if (cell_size <= 0.0) throw Error(ErrorCode::kInvalidArgument, "cell size must be positive");
  ElevationGrid grid;
  grid.cell_size = cell_size;
  grid.z_min = z_min;
  grid.z_max = z_max;
  const double r2 = max_radius * max_radius;
  int64_t lo_x = std::numeric_limits<int64_t>::max(), lo_y = lo_x;
  int64_t hi_x = std::numeric_limits<int64_t>::min(), hi_y = hi_x;
  std::vector<std::array<int64_t, 2>> keys;
  std::vector<float> heights;
  for (const Vec3& p : points) {
    if (p.z() < z_min || p.z() > z_max) continue;
    if (p.x() * p.x() + p.y() * p.y() > r2) continue;
    const int64_t kx = static_cast<int64_t>(std::floor(p.x() / cell_size));
    const int64_t ky = static_cast<int64_t>(std::floor(p.y() / cell_size));
    lo_x = std::min(lo_x, kx);
    hi_x = std::max(hi_x, kx);
    lo_y = std::min(lo_y, ky);
    hi_y = std::max(hi_y, ky);
    keys.push_back({kx, ky});
    heights.push_back(static_cast<float>(p.z()));
  }
  if (keys.empty()) return grid;
  grid.origin_x = double(lo_x) * cell_size;
  grid.origin_y = double(lo_y) * cell_size;
  grid.width = static_cast<int>(hi_x - lo_x + 1);
  grid.height = static_cast<int>(hi_y - lo_y + 1);
  grid.cells.assign(static_cast<size_t>(grid.width) * grid.height, kInvalid);
  for (size_t i = 0; i < keys.size(); ++i) {
    float& cell = grid.cells[static_cast<size_t>(keys[i][1] - lo_y) * grid.width +
                             static_cast<size_t>(keys[i][0] - lo_x)];
    if (std::isnan(cell) || heights[i] > cell) cell = heights[i];
  }
  return grid;
}

ElevationGrid build_elevation_grid(const std::vector<TrajectoryFrame>& frames,
                                   const std::vector<std::vector<ScanPoint>>& scans,
                                   int64_t n_start, const ElevationGridParams& params) {
  if (frames.empty() || frames.size() != scans.size())
    throw Error(ErrorCode::kInvalidArgument, "elevation grid needs one frame per scan");
  const size_t mid = frames.size() / 2;
  const Pose up(params.gravity_alignment, Vec3::Zero());
  const Pose anchor = interpolate_pose(frames[mid], 0.5);
  const Pose gravity = gravity_aligned(up * anchor);
  const Pose to_grid = gravity.inverse() * up;

  std::vector<Vec3> points;
  for (size_t n = 0; n < frames.size(); ++n) {
    for (const ScanPoint& p : scans[n]) {
      points.push_back(to_grid * (interpolate_pose(frames[n], p.alpha) * p.position));
    }
  }

  // ground: low percentile of the heights close to the anchor
  std::vector<double> near;
  const double gr2 = params.ground_radius * params.ground_radius;
  for (const Vec3& p : points)
    if (p.x() * p.x() + p.y() * p.y() <= gr2) near.push_back(p.z());
  if (near.empty()) throw Error(ErrorCode::kDegenerateGrid, "no points near the grid anchor");
  const size_t k = near.size() / 10;
  std::nth_element(near.begin(), near.begin() + k, near.end());
  const double ground = near[k];

  const double z_min = ground - params.ground_margin;
  ElevationGrid grid =
      rasterize_points(points, params.cell_size, z_min, z_min + params.z_band, params.max_radius);
  grid.n_start = n_start;
  grid.n_end = n_start + static_cast<int64_t>(frames.size()) - 1;
  grid.anchor_scan = n_start + static_cast<int64_t>(mid);
  grid.anchor = anchor;
  grid.gravity_anchor = gravity;
  grid.ground_z = ground;
  const size_t total = static_cast<size_t>(grid.width) * grid.height;
  if (total == 0 || double(grid.valid_count()) < params.min_valid_fraction * double(total)) {
    throw Error(ErrorCode::kDegenerateGrid,
                "only " + std::to_string(grid.valid_count()) + " of " + std::to_string(total) +
                    " cells are filled");
  }
  return grid;
}

std::optional<LoopConstraint> match_grids(const ElevationGrid& a, const ElevationGrid& b,
                                          const MatchParams& params) {
  if (std::abs(a.cell_size - b.cell_size) > 1e-9)
    throw Error(ErrorCode::kInvalidArgument, "grids must share the cell size");
  const size_t valid_a = a.valid_count(), valid_b = b.valid_count();
  if (valid_a == 0 || valid_b == 0) return std::nullopt;
  const double cell = a.cell_size;
  const double min_overlap = params.min_overlap * double(std::min(valid_a, valid_b));

  // every rotation of b fits in a diag x diag box
  const int diag = static_cast<int>(std::ceil(std::hypot(b.width, b.height))) + 2;
  Correlator fft(fft_friendly_size(a.height + diag), fft_friendly_size(a.width + diag));
  const int rows = fft.rows(), cols = fft.cols();

  const Images ia = pad(a.cells, a.width, a.height, rows, cols);
  const Spectrum fa_mask = fft.forward(ia.mask);
  const Spectrum fa_value = fft.forward(ia.value);
  const Spectrum fa_square = fft.forward(ia.square);

  struct Best {
    double score = -2.0;
    double yaw = 0.0;
    int sx = 0;
    int sy = 0;
    double overlap = 0.0;
    double dz = 0.0;
  } best;

  std::vector<double> n_ab, s_a, s_b, s_aa, s_bb, s_ab;
  const int steps = static_cast<int>(std::lround(360.0 / params.yaw_step_deg));
  for (int k = 0; k < steps; ++k) {
    const double yaw = k * params.yaw_step_deg * M_PI / 180.0;
    const RotatedRaster rb = rotate_onto(b, yaw, a.origin_x, a.origin_y, cell);
    if (rb.width > diag || rb.height > diag) continue;
    const Images ib = pad(rb.cells, rb.width, rb.height, rows, cols);
    const Spectrum fb_mask = fft.forward(ib.mask);
    const Spectrum fb_value = fft.forward(ib.value);
    const Spectrum fb_square = fft.forward(ib.square);
    fft.correlate(fa_mask, fb_mask, n_ab);
    fft.correlate(fa_value, fb_mask, s_a);
    fft.correlate(fa_mask, fb_value, s_b);
    fft.correlate(fa_square, fb_mask, s_aa);
    fft.correlate(fa_mask, fb_square, s_bb);
    fft.correlate(fa_value, fb_value, s_ab);
    for (size_t i = 0; i < n_ab.size(); ++i) {
      const double n = std::round(n_ab[i]);
      if (n < min_overlap || n < 3.0) continue;
      const double var_a = s_aa[i] - s_a[i] * s_a[i] / n;
      const double var_b = s_bb[i] - s_b[i] * s_b[i] / n;
      if (var_a <= 1e-9 * n || var_b <= 1e-9 * n) continue;
      const double score = (s_ab[i] - s_a[i] * s_b[i] / n) / std::sqrt(var_a * var_b);
      if (score > best.score) {
        const int ky = static_cast<int>(i) / cols, kx = static_cast<int>(i) % cols;
        best.score = score;
        best.yaw = yaw;
        best.sx = (kx >= cols - diag ? kx - cols : kx) - rb.kx;
        best.sy = (ky >= rows - diag ? ky - rows : ky) - rb.ky;
        best.overlap = n / double(std::min(valid_a, valid_b));
        best.dz = (s_a[i] - s_b[i]) / n;
      }
    }
  }
  if (best.score < params.min_score) return std::nullopt;

  Planar t{best.yaw, best.sx * cell, best.sy * cell, best.dz};
  if (params.refine) t = refine(a, b, t);
  t.yaw = std::remainder(t.yaw, 2.0 * M_PI);

  LoopConstraint loop;
  loop.scan_a = a.anchor_scan;
  loop.scan_b = b.anchor_scan;
  loop.x = t.x;
  loop.y = t.y;
  loop.yaw = t.yaw;
  loop.score = std::clamp(best.score, 0.0, 1.0);
  loop.overlap = best.overlap;
  // lift to the full anchor poses: anchor = gravity_anchor * tilt
  const Pose tilt_a = a.gravity_anchor.inverse() * a.anchor;
  const Pose tilt_b = b.gravity_anchor.inverse() * b.anchor;
  loop.relative = tilt_a.inverse() * planar_pose(t.yaw, t.x, t.y, t.dz) * tilt_b;
  return loop;
}

std::vector<LoopConstraint> detect_loops_for_last(const std::vector<ElevationGrid>& grids,
                                                  const LoopDetectionParams& params) {
  std::vector<LoopConstraint> loops;
  if (grids.size() < 2) return loops;
  const int64_t j = static_cast<int64_t>(grids.size()) - 1;
  for (int64_t i = 0; i + params.min_separation <= j; ++i) {
    const double d =
        (grids[i].anchor.translation - grids[j].anchor.translation).norm();
    if (d > params.search_radius) continue;
    auto m = match_grids(grids[i], grids[j], params.match);
    spdlog::debug("grids {} and {}: {}", i, j,
                  m ? "match, score " + std::to_string(m->score) : std::string("no match"));
    if (!m) continue;
    if (params.max_correction_ratio > 0.0) {
      double path = 0.0;
      for (int64_t k = i; k < j; ++k)
        path += (grids[k + 1].anchor.translation - grids[k].anchor.translation).norm();
      const Pose odometry = grids[i].anchor.inverse() * grids[j].anchor;
      const double correction = (m->relative.translation - odometry.translation).norm();
      if (correction > params.max_correction_ratio * path) {
        spdlog::debug("grids {} and {}: correction {:.1f} m over a {:.1f} m path, rejected", i,
                      j, correction, path);
        continue;
      }
    }
    m->grid_a = i;
    m->grid_b = j;
    loops.push_back(*m);
  }
  return loops;
}

std::vector<LoopConstraint> detect_loops(const std::vector<ElevationGrid>& grids,
                                         const LoopDetectionParams& params) {
  std::vector<LoopConstraint> all;
  std::vector<ElevationGrid> prefix;
  prefix.reserve(grids.size());
  for (const ElevationGrid& g : grids) {
    prefix.push_back(g);
    auto found = detect_loops_for_last(prefix, params);
    all.insert(all.end(), found.begin(), found.end());
  }
  return all;
}

void export_grid_pgm(const ElevationGrid& grid, const std::string& path) {
  std::vector<uint8_t> pixels(static_cast<size_t>(grid.width) * grid.height, 0);
  const double span = std::max(grid.z_max - grid.z_min, 1e-9);
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      if (!grid.valid(ix, iy)) continue;
      const double u = std::clamp((grid.at(ix, iy) - grid.z_min) / span, 0.0, 1.0);
      // north up: the last raster row is written first
      pixels[static_cast<size_t>(grid.height - 1 - iy) * grid.width + ix] =
          static_cast<uint8_t>(1 + std::lround(u * 254.0));
    }
  }
  io::write_pgm(path, grid.width, grid.height, pixels);
}

}  // namespace ctlo
