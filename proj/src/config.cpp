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

#include "ctlo/config.hpp"

#include <functional>
#include <utility>
#include <vector>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "ctlo/errors.hpp"

namespace ctlo {

namespace {

struct Entry {
  ConfigKey key;
  std::function<std::string(const Settings&)> get;
  std::function<void(Settings&, const std::string&)> set;
};

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "'" + key + "' expects a number, got '" + v + "'");
}

int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "'" + key + "' expects an integer, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kInvalidArgument, "'" + key + "' expects a boolean, got '" + v + "'");
}

std::string show(double v) { return fmt::format("{}", v); }
std::string show(int64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

template <typename Member>
Entry number(std::string name, std::string description, std::string origin, Member member) {
  return {{name, std::move(description), std::move(origin)},
          [member](const Settings& s) { return show(static_cast<double>(member(s))); },
          [member, name](Settings& s, const std::string& v) { member(s) = parse_double(name, v); }};
}

template <typename Member>
Entry integer(std::string name, std::string description, std::string origin, Member member) {
  return {{name, std::move(description), std::move(origin)},
          [member](const Settings& s) {
            return show(static_cast<int64_t>(member(s)));
          },
          [member, name](Settings& s, const std::string& v) {
            const int64_t i = parse_int(name, v);
            if (i < 0) throw Error(ErrorCode::kInvalidArgument, "'" + name + "' must be >= 0");
            member(s) = static_cast<std::remove_reference_t<decltype(member(s))>>(i);
          }};
}

template <typename Member>
Entry boolean(std::string name, std::string description, Member member) {
  return {{name, std::move(description), ""},
          [member](const Settings& s) { return show(static_cast<bool>(member(s))); },
          [member, name](Settings& s, const std::string& v) { member(s) = parse_bool(name, v); }};
}

#define FIELD(expr) [](auto& s) -> auto& { return s.expr; }

std::vector<Entry> make_entries() {
  std::vector<Entry> e;
  e.push_back({{"profile", "driving or high-frequency; resets profile defaults when loaded", ""},
               [](const Settings& s) { return std::string(to_string(s.odometry.profile)); },
               [](Settings& s, const std::string& v) { s.odometry.profile = profile_from_string(v); }});
  e.push_back(integer("seed", "seed of simulator noise and drift injection", "", FIELD(seed)));

  e.push_back(number("map.voxel_size", "voxel edge length (m)", "1.0 driving / 0.8 high-frequency",
                     FIELD(odometry.map.voxel_size)));
  e.push_back(integer("map.max_points_per_voxel", "points kept per voxel", "20",
                      FIELD(odometry.map.max_points_per_voxel)));
  e.push_back(number("map.min_point_distance", "minimum spacing of points in a voxel (m)", "0.10",
                     FIELD(odometry.map.min_point_distance)));
  e.push_back(integer("map.min_neighbors", "neighbors needed for a normal estimate", "",
                      FIELD(odometry.map.min_neighbors)));

  e.push_back(number("odometry.keypoint_cell", "keypoint grid cell (m)", "",
                     FIELD(odometry.keypoint_cell)));
  e.push_back(number("odometry.map_sample_cell", "grid cell thinning scans before insertion (m)",
                     "", FIELD(odometry.map_sample_cell)));
  e.push_back(number("odometry.min_range", "points closer than this are dropped (m)", "",
                     FIELD(odometry.min_range)));
  e.push_back(number("odometry.max_range", "points farther than this are dropped (m)", "",
                     FIELD(odometry.max_range)));
  e.push_back(number("odometry.eviction_radius", "voxels beyond this distance are removed (m)",
                     "", FIELD(odometry.eviction_radius)));
  e.push_back({{"odometry.prediction", "initial guess: constant-velocity or static", ""},
               [](const Settings& s) { return std::string(to_string(s.odometry.prediction)); },
               [](Settings& s, const std::string& v) {
                 s.odometry.prediction = prediction_from_string(v);
               }});
  e.push_back(number("odometry.report_alpha", "in-scan parameter of the reported pose", "",
                     FIELD(odometry.report_alpha)));

  e.push_back(number("solver.beta_loc", "location consistency weight", "0.001",
                     FIELD(odometry.solver.beta_loc)));
  e.push_back(number("solver.beta_vel", "constant velocity weight", "0.001",
                     FIELD(odometry.solver.beta_vel)));
  e.push_back(number("solver.beta_rot_gap", "optional rotation continuity weight", "",
                     FIELD(odometry.solver.beta_rot_gap)));
  e.push_back(integer("solver.max_iterations", "Gauss-Newton iterations", "5",
                      FIELD(odometry.solver.max_iterations)));
  e.push_back(number("solver.trans_tol", "translation step tolerance (m)", "0.001",
                     FIELD(odometry.solver.trans_tol)));
  e.push_back(number("solver.rot_tol_deg", "rotation step tolerance (deg)", "0.01",
                     FIELD(odometry.solver.rot_tol_deg)));
  e.push_back(number("solver.robust_scale", "Cauchy loss scale (m)", "",
                     FIELD(odometry.solver.robust_scale)));
  e.push_back({{"solver.mode", "elastic, constant-velocity or none", ""},
               [](const Settings& s) { return std::string(to_string(s.odometry.solver.mode)); },
               [](Settings& s, const std::string& v) {
                 s.odometry.solver.mode = motion_mode_from_string(v);
               }});
  e.push_back(number("solver.outlier_gate", "largest accepted point-to-plane distance (m)", "",
                     FIELD(odometry.solver.outlier_gate)));
  e.push_back(integer("solver.num_neighbors", "neighbors per keypoint", "20",
                      FIELD(odometry.solver.num_neighbors)));
  e.push_back(integer("solver.neighborhood_ring", "voxel rings searched (1 = 27 voxels)", "",
                      FIELD(odometry.solver.neighborhood_ring)));
  e.push_back(integer("solver.min_residuals", "fewest residuals for a solve", "",
                      FIELD(odometry.solver.min_residuals)));
  e.push_back(number("solver.damping", "diagonal damping of the normal equations", "",
                     FIELD(odometry.solver.damping)));
  e.push_back(boolean("solver.line_search", "step halving on objective increase",
                      FIELD(odometry.solver.line_search)));
  e.push_back(integer("solver.max_halvings", "step halvings per iteration", "",
                      FIELD(odometry.solver.max_halvings)));

  e.push_back(number("robust.max_location_gap", "begin-pose jump flagged as failure (m)", "",
                     FIELD(odometry.max_location_gap)));
  e.push_back(number("robust.max_empty_voxel_fraction",
                     "keypoint fraction in empty voxels flagged as failure", "",
                     FIELD(odometry.max_empty_voxel_fraction)));
  e.push_back(number("robust.max_insert_rotation_deg",
                     "scans rotating this much are not inserted (deg)", "5",
                     FIELD(odometry.max_insert_rotation_deg)));
  e.push_back(boolean("robust.retry_enabled", "retry once after a failure",
                      FIELD(odometry.retry_enabled)));
  e.push_back(number("robust.retry_cell_factor", "keypoint cell multiplier on retry", "",
                     FIELD(odometry.retry_cell_factor)));
  e.push_back(integer("robust.retry_neighborhood_ring", "voxel rings searched on retry", "",
                      FIELD(odometry.retry_neighborhood_ring)));
  e.push_back(integer("robust.retry_max_iterations", "iterations on retry", "",
                      FIELD(odometry.retry_max_iterations)));

  e.push_back(boolean("loop.enabled", "build grids and detect loops", FIELD(loop.enabled)));
  e.push_back(integer("loop.window", "scans per elevation grid", "100", FIELD(loop.window)));
  e.push_back(integer("loop.overlap", "scans shared by consecutive grids", "30",
                      FIELD(loop.overlap)));
  e.push_back(number("loop.point_cell", "thinning of stored scan points (m)", "",
                     FIELD(loop.point_cell)));
  e.push_back(number("loop.grid.cell_size", "elevation raster cell (m)", "",
                     FIELD(loop.grid.cell_size)));
  e.push_back(number("loop.grid.z_band", "height of the retained band (m)", "10",
                     FIELD(loop.grid.z_band)));
  e.push_back(number("loop.grid.ground_margin", "band start below the ground (m)", "",
                     FIELD(loop.grid.ground_margin)));
  e.push_back(number("loop.grid.max_radius", "rasterized radius around the anchor (m)", "",
                     FIELD(loop.grid.max_radius)));
  e.push_back(number("loop.grid.min_valid_fraction", "fewest filled cells for a grid", "",
                     FIELD(loop.grid.min_valid_fraction)));
  e.push_back(number("loop.search_radius", "anchor distance searched for loops (m)", "",
                     FIELD(loop.detection.search_radius)));
  e.push_back(integer("loop.min_separation", "fewest grids between matched grids", "",
                      FIELD(loop.detection.min_separation)));
  e.push_back(number("loop.max_correction_ratio",
                     "largest loop correction per meter of path between anchors; 0 disables", "",
                     FIELD(loop.detection.max_correction_ratio)));
  e.push_back(number("loop.match.yaw_step_deg", "yaw sweep resolution (deg)", "",
                     FIELD(loop.detection.match.yaw_step_deg)));
  e.push_back(number("loop.match.min_score", "smallest accepted correlation", "",
                     FIELD(loop.detection.match.min_score)));
  e.push_back(number("loop.match.min_overlap", "smallest overlap, fraction of valid cells", "",
                     FIELD(loop.detection.match.min_overlap)));
  e.push_back(number("loop.graph.odometry_weight", "weight of odometry edges", "",
                     FIELD(loop.graph.odometry_weight)));
  e.push_back(number("loop.graph.loop_weight_scale", "loop edge weight per unit score", "",
                     FIELD(loop.graph.loop_weight_scale)));
  e.push_back(integer("loop.graph.max_iterations", "pose-graph Gauss-Newton iterations", "",
                      FIELD(loop.max_graph_iterations)));

  e.push_back(boolean("drift.enabled", "perturb the trajectory passed to loop closure",
                      FIELD(drift.enabled)));
  e.push_back(number("drift.yaw_bias_deg", "yaw added to every relative motion (deg)", "",
                     FIELD(drift.yaw_bias_deg)));
  e.push_back(number("drift.yaw_sigma_deg", "yaw noise per relative motion (deg)", "",
                     FIELD(drift.yaw_sigma_deg)));
  e.push_back(number("drift.translation_sigma", "translation noise per relative motion (m)", "",
                     FIELD(drift.translation_sigma)));
  return e;
}

#undef FIELD

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = make_entries();
  return table;
}

const Entry& find(const std::string& key) {
  for (const Entry& e : entries())
    if (e.key.name == key) return e;
  throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
}

void flatten(const YAML::Node& node, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string name = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? name : prefix + "." + name, out);
    }
  } else if (node.IsScalar()) {
    out.emplace_back(prefix, node.as<std::string>());
  } else if (!node.IsNull()) {
    throw Error(ErrorCode::kInvalidArgument, "config key '" + prefix + "' must be a scalar");
  }
}

void apply_yaml(Settings& settings, const YAML::Node& root) {
  std::vector<std::pair<std::string, std::string>> values;
  flatten(root, "", values);
  for (const auto& [key, value] : values) {
    if (key != "profile") continue;
    const Settings fresh = Settings::ForProfile(profile_from_string(value));
    settings.odometry = fresh.odometry;
  }
  for (const auto& [key, value] : values)
    if (key != "profile") set_value(settings, key, value);
}

}  // namespace

Settings Settings::ForProfile(Profile profile) {
  Settings s;
  s.odometry = PipelineConfig::ForProfile(profile);
  return s;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Entry& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_value(Settings& settings, const std::string& key, const std::string& value) {
  find(key).set(settings, value);
}

void apply_override(Settings& settings, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::kInvalidArgument, "override '" + assignment + "' is not key=value");
  set_value(settings, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string get_value(const Settings& settings, const std::string& key) {
  return find(key).get(settings);
}

void load_config_file(Settings& settings, const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::kIoError, "cannot read config " + path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  apply_yaml(settings, root);
}

void load_config_string(Settings& settings, const std::string& yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kMalformedFile, e.what());
  }
  apply_yaml(settings, root);
}

namespace {

/// Insertion-ordered key tree used to emit nested YAML.
struct KeyTree {
  std::string value;
  std::vector<std::pair<std::string, KeyTree>> children;

  KeyTree& child(const std::string& name) {
    for (auto& [n, c] : children)
      if (n == name) return c;
    children.emplace_back(name, KeyTree{});
    return children.back().second;
  }

  void emit(YAML::Emitter& out) const {
    out << YAML::BeginMap;
    for (const auto& [n, c] : children) {
      out << YAML::Key << n << YAML::Value;
      if (c.children.empty()) {
        out << c.value;
      } else {
        c.emit(out);
      }
    }
    out << YAML::EndMap;
  }
};

}  // namespace

std::string dump_config(const Settings& settings) {
  KeyTree root;
  for (const Entry& e : entries()) {
    KeyTree* node = &root;
    std::stringstream ss(e.key.name);
    for (std::string part; std::getline(ss, part, '.');) node = &node->child(part);
    node->value = e.get(settings);
  }
  YAML::Emitter out;
  root.emit(out);
  return std::string(out.c_str()) + "\n";
}

std::string describe_keys(const Settings& settings) {
  std::string text;
  for (const Entry& e : entries()) {
    text += fmt::format("  {:<34} {:<18} {}", e.key.name, e.get(settings), e.key.description);
    if (!e.key.origin.empty()) text += fmt::format(" [reference: {}]", e.key.origin);
    text += "\n";
  }
  return text;
}

}  // namespace ctlo
