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

#include "ctlo/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "ctlo/errors.hpp"

namespace ctlo::io {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path, bool binary) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

// ---- PLY ------------------------------------------------------------------

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<PlyType> ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUInt8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUInt16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUInt32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUInt8: return 1;
    case PlyType::kInt16:
    case PlyType::kUInt16: return 2;
    case PlyType::kInt32:
    case PlyType::kUInt32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

template <typename T>
double load_as(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double ply_load(PlyType t, const char* p) {
  switch (t) {
    case PlyType::kInt8: return load_as<int8_t>(p);
    case PlyType::kUInt8: return load_as<uint8_t>(p);
    case PlyType::kInt16: return load_as<int16_t>(p);
    case PlyType::kUInt16: return load_as<uint16_t>(p);
    case PlyType::kInt32: return load_as<int32_t>(p);
    case PlyType::kUInt32: return load_as<uint32_t>(p);
    case PlyType::kFloat32: return load_as<float>(p);
    case PlyType::kFloat64: return load_as<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
  size_t stride() const {
    size_t s = 0;
    for (const auto& p : properties) s += ply_size(p.type);
    return s;
  }
};

[[noreturn]] void malformed(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::kMalformedFile, path.string() + ": " + what);
}

}  // namespace

Scan read_kitti_bin(const fs::path& path) {
  const std::string data = read_file(path);
  if (data.size() % 16 != 0)
    malformed(path, fmt::format("size {} is not a multiple of 16 bytes", data.size()));
  if (data.empty()) throw Error(ErrorCode::kEmptyScan, path.string() + " holds no point");
  Scan scan;
  const size_t n = data.size() / 16;
  scan.points.resize(n);
  for (size_t i = 0; i < n; ++i) {
    float xyz[3];
    std::memcpy(xyz, data.data() + 16 * i, sizeof(xyz));
    scan.points[i].position = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  return scan;
}

void write_kitti_bin(const fs::path& path, const Scan& scan) {
  std::ofstream out = open_out(path, true);
  for (const auto& p : scan.points) {
    const float rec[4] = {static_cast<float>(p.position.x()), static_cast<float>(p.position.y()),
                          static_cast<float>(p.position.z()), 0.0f};
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
}

Scan estimate_timestamps_from_azimuth(const Scan& scan, bool clockwise) {
  Scan out = scan;
  if (out.points.empty()) return out;
  const double two_pi = 2.0 * M_PI;
  const double az0 = std::atan2(out.points.front().position.y(), out.points.front().position.x());
  for (auto& p : out.points) {
    const double az = std::atan2(p.position.y(), p.position.x());
    double d = clockwise ? az0 - az : az - az0;
    d = std::fmod(d, two_pi);
    if (d < 0.0) d += two_pi;
    p.alpha = std::clamp(d / two_pi, 0.0, 1.0);
  }
  out.has_alpha = true;
  return out;
}

Scan apply_intrinsic_vertical_correction(const Scan& scan, double angle_deg) {
  Scan out = scan;
  if (angle_deg == 0.0) return out;
  const double angle = angle_deg * M_PI / 180.0;
  for (auto& p : out.points) {
    const double az = std::atan2(p.position.y(), p.position.x());
    // rotating about (sin az, -cos az, 0) tilts the point upward
    const Vec3 axis(std::sin(az), -std::cos(az), 0.0);
    p.position = Eigen::AngleAxisd(angle, axis) * p.position;
  }
  return out;
}

Scan read_ply(const fs::path& path) {
  const std::string data = read_file(path);
  size_t pos = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= data.size()) return false;
    size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    line = data.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "ply") malformed(path, "missing ply magic");
  enum class Encoding { kAscii, kBinaryLE } encoding = Encoding::kAscii;
  bool have_format = false;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (next_line(line)) {
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "format") {
      std::string fmt_name, version;
      ls >> fmt_name >> version;
      if (fmt_name == "ascii")
        encoding = Encoding::kAscii;
      else if (fmt_name == "binary_little_endian")
        encoding = Encoding::kBinaryLE;
      else
        malformed(path, "unsupported format '" + fmt_name + "'");
      have_format = true;
    } else if (keyword == "element") {
      PlyElement e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) malformed(path, "bad element line");
      e.count = static_cast<size_t>(count);
      elements.push_back(e);
    } else if (keyword == "property") {
      if (elements.empty()) malformed(path, "property before element");
      std::string type_name, name;
      ls >> type_name;
      PlyProperty prop;
      if (type_name == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> name;
        prop.is_list = true;
        prop.type = PlyType::kUInt8;
      } else {
        const auto t = ply_type(type_name);
        if (!t) malformed(path, "unknown property type '" + type_name + "'");
        prop.type = *t;
        ls >> name;
      }
      if (name.empty()) malformed(path, "property without a name");
      prop.name = name;
      elements.back().properties.push_back(prop);
    } else if (keyword == "end_header") {
      header_done = true;
      break;
    } else {
      malformed(path, "unexpected header line '" + line + "'");
    }
  }
  if (!header_done) malformed(path, "unterminated header");
  if (!have_format) malformed(path, "missing format line");

  Scan scan;
  bool found_vertex = false;
  for (const PlyElement& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool has_list = std::any_of(e.properties.begin(), e.properties.end(),
                                      [](const PlyProperty& p) { return p.is_list; });
    if (!is_vertex) {
      if (e.count == 0) continue;
      if (has_list) malformed(path, "list property before the vertex element");
      if (encoding == Encoding::kBinaryLE) {
        pos += e.count * e.stride();
      } else {
        for (size_t i = 0; i < e.count; ++i)
          if (!next_line(line)) malformed(path, "truncated element '" + e.name + "'");
      }
      continue;
    }
    if (has_list) malformed(path, "list property in the vertex element");
    int ix = -1, iy = -1, iz = -1, it = -1, ia = -1;
    for (size_t k = 0; k < e.properties.size(); ++k) {
      const std::string& n = e.properties[k].name;
      if (n == "x") ix = static_cast<int>(k);
      if (n == "y") iy = static_cast<int>(k);
      if (n == "z") iz = static_cast<int>(k);
      if (n == "timestamp" || n == "time" || n == "t") it = static_cast<int>(k);
      if (n == "alpha") ia = static_cast<int>(k);
    }
    if (ix < 0 || iy < 0 || iz < 0) malformed(path, "vertex element lacks x, y or z");
    scan.has_timestamps = it >= 0;
    scan.has_alpha = ia >= 0;
    scan.points.resize(e.count);
    std::vector<double> values(e.properties.size());
    for (size_t i = 0; i < e.count; ++i) {
      if (encoding == Encoding::kBinaryLE) {
        const size_t stride = e.stride();
        if (pos + stride > data.size()) malformed(path, "truncated vertex data");
        size_t off = pos;
        for (size_t k = 0; k < e.properties.size(); ++k) {
          values[k] = ply_load(e.properties[k].type, data.data() + off);
          off += ply_size(e.properties[k].type);
        }
        pos += stride;
      } else {
        if (!next_line(line)) malformed(path, "truncated vertex data");
        std::istringstream ls(line);
        for (size_t k = 0; k < e.properties.size(); ++k)
          if (!(ls >> values[k])) malformed(path, "short vertex line");
      }
      ScanPoint& p = scan.points[i];
      p.position = Vec3(values[ix], values[iy], values[iz]);
      if (it >= 0) p.timestamp = values[it];
      if (ia >= 0) p.alpha = values[ia];
    }
    found_vertex = true;
    break;
  }
  if (!found_vertex) malformed(path, "no vertex element");
  if (encoding == Encoding::kBinaryLE && pos > data.size()) malformed(path, "truncated data");
  if (scan.has_timestamps && !scan.points.empty()) {
    auto [lo, hi] = std::minmax_element(
        scan.points.begin(), scan.points.end(),
        [](const ScanPoint& a, const ScanPoint& b) { return a.timestamp < b.timestamp; });
    scan.tau_begin = lo->timestamp;
    scan.tau_end = hi->timestamp;
  }
  return scan;
}

void write_ply(const fs::path& path, const Scan& scan) {
  std::ofstream out = open_out(path, true);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << scan.points.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (scan.has_timestamps) out << "property double timestamp\n";
  if (scan.has_alpha) out << "property double alpha\n";
  out << "end_header\n";
  std::vector<double> rec;
  rec.reserve(5);
  for (const auto& p : scan.points) {
    rec.assign({p.position.x(), p.position.y(), p.position.z()});
    if (scan.has_timestamps) rec.push_back(p.timestamp);
    if (scan.has_alpha) rec.push_back(p.alpha);
    out.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

void write_trajectory(const fs::path& path, const std::vector<TrajectoryFrame>& frames) {
  std::ofstream out = open_out(path, false);
  out << "# index tbx tby tbz qbx qby qbz qbw tex tey tez qex qey qez qew\n";
  for (const auto& f : frames) {
    const Vec3& tb = f.begin.translation;
    const Vec3& te = f.end.translation;
    const Quat& qb = f.begin.rotation;
    const Quat& qe = f.end.rotation;
    out << fmt::format("{} {} {} {} {} {} {} {} {} {} {} {} {} {} {}\n", f.scan_index, tb.x(),
                       tb.y(), tb.z(), qb.x(), qb.y(), qb.z(), qb.w(), te.x(), te.y(), te.z(),
                       qe.x(), qe.y(), qe.z(), qe.w());
  }
}

namespace {

std::vector<std::vector<double>> read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        malformed(path, fmt::format("line {}: bad number '{}'", line_no, tok));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      malformed(path, fmt::format("line {}: inconsistent column count", line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

Pose pose_from_kitti_row(const std::vector<double>& r) {
  Mat3 R;
  Vec3 t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) R(i, j) = r[4 * i + j];
    t(i) = r[4 * i + 3];
  }
  return Pose(R, t);
}

}  // namespace

std::vector<TrajectoryFrame> read_trajectory(const fs::path& path) {
  std::vector<TrajectoryFrame> frames;
  for (const auto& r : read_table(path)) {
    if (r.size() != 15) malformed(path, "expected 15 columns");
    TrajectoryFrame f;
    f.scan_index = static_cast<int64_t>(r[0]);
    f.begin = Pose(Quat(r[7], r[4], r[5], r[6]), Vec3(r[1], r[2], r[3]));
    f.end = Pose(Quat(r[14], r[11], r[12], r[13]), Vec3(r[8], r[9], r[10]));
    frames.push_back(f);
  }
  return frames;
}

void write_kitti_poses(const fs::path& path, const std::vector<Pose>& poses) {
  std::ofstream out = open_out(path, false);
  for (const auto& p : poses) {
    const Mat3 R = p.rotation_matrix();
    const Vec3& t = p.translation;
    out << fmt::format("{} {} {} {} {} {} {} {} {} {} {} {}\n", R(0, 0), R(0, 1), R(0, 2), t(0),
                       R(1, 0), R(1, 1), R(1, 2), t(1), R(2, 0), R(2, 1), R(2, 2), t(2));
  }
}

std::vector<Pose> read_kitti_poses(const fs::path& path) {
  std::vector<Pose> poses;
  for (const auto& r : read_table(path)) {
    if (r.size() != 12) malformed(path, "expected 12 columns");
    poses.push_back(pose_from_kitti_row(r));
  }
  return poses;
}

std::vector<Pose> read_poses(const fs::path& path, double alpha) {
  const auto rows = read_table(path);
  std::vector<Pose> poses;
  if (rows.empty()) return poses;
  if (rows.front().size() == 12) {
    for (const auto& r : rows) poses.push_back(pose_from_kitti_row(r));
  } else if (rows.front().size() == 15) {
    for (const auto& f : read_trajectory(path)) poses.push_back(interpolate_pose(f, alpha));
  } else {
    malformed(path, "expected 12 or 15 columns");
  }
  return poses;
}

void write_pgm(const fs::path& path, int width, int height, const std::vector<uint8_t>& pixels) {
  if (width <= 0 || height <= 0 || pixels.size() != static_cast<size_t>(width) * height)
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer does not match the image size");
  std::ofstream out = open_out(path, true);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_xy_csv(const fs::path& path, const std::vector<Pose>& poses) {
  std::ofstream out = open_out(path, false);
  out << "x,y\n";
  for (const auto& p : poses) out << fmt::format("{},{}\n", p.translation.x(), p.translation.y());
}

ScanFormat scan_format_from_string(const std::string& name) {
  if (name == "ply") return ScanFormat::kPly;
  if (name == "kitti" || name == "bin" || name == "kitti-bin") return ScanFormat::kKittiBin;
  throw Error(ErrorCode::kInvalidArgument, "unknown scan format '" + name + "'");
}

DirectoryScanSource::DirectoryScanSource(const fs::path& dir,
                                         const DirectorySourceOptions& options)
    : options_(options) {
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::kIoError, "input directory " + dir.string() + " does not exist");
  const std::string ext = options_.format == ScanFormat::kPly ? ".ply" : ".bin";
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ext) files_.push_back(entry.path());
  std::sort(files_.begin(), files_.end());
  if (options_.max_scans > 0 && files_.size() > options_.max_scans)
    files_.resize(options_.max_scans);
}

std::optional<Scan> DirectoryScanSource::next() {
  if (cursor_ >= files_.size()) return std::nullopt;
  const size_t index = cursor_++;
  Scan scan = options_.format == ScanFormat::kPly ? read_ply(files_[index])
                                                  : read_kitti_bin(files_[index]);
  scan.index = static_cast<int64_t>(index);
  if (options_.vertical_correction)
    scan = apply_intrinsic_vertical_correction(scan, options_.vertical_correction_deg);
  if (scan.has_timestamps && !scan.has_alpha) {
    normalize_timestamps(scan);
  } else if (!scan.has_timestamps && !scan.has_alpha && options_.azimuth_timestamps) {
    scan = estimate_timestamps_from_azimuth(scan, options_.clockwise);
  }
  if (!scan.has_timestamps) {
    scan.tau_begin = static_cast<double>(index) * options_.scan_period;
    scan.tau_end = scan.tau_begin + options_.scan_period;
  }
  return scan;
}

}  // namespace ctlo::io
