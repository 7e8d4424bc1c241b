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
 * \file ctlo.cpp
 * \brief Command-line front end: odometry, slam, simulate and eval.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "ctlo/config.hpp"
#include "ctlo/errors.hpp"
#include "ctlo/evaluation.hpp"
#include "ctlo/io.hpp"
#include "ctlo/lidar_sim.hpp"
#include "ctlo/odometry.hpp"
#include "ctlo/pose_graph.hpp"
#include "ctlo/slam.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;

/// Options shared by the commands that run the pipeline.
struct RunOptions {
  std::string input;
  std::string format = "ply";
  std::string scenario;
  std::string profile;
  std::string config;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool seed_given = false;
  size_t max_scans = 0;
  double scan_period = 0.1;
  bool vertical_correction = false;
  std::string output = "out";
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  auto* input = cmd->add_option("-i,--input", o.input, "Directory of scan files");
  auto* scenario = cmd->add_option("--scenario", o.scenario, "Run on a simulated scenario instead")
                       ->check(CLI::IsMember(ctlo::sim::scenario_names()));
  input->excludes(scenario);
  cmd->add_option("--format", o.format, "Scan file format")
      ->check(CLI::IsMember({"ply", "kitti"}));
  cmd->add_option("--profile", o.profile, "Parameter profile")
      ->check(CLI::IsMember({"driving", "high-frequency"}));
  cmd->add_option("-c,--config", o.config, "YAML configuration file");
  cmd->add_option("-s,--set", o.overrides, "Override one key, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "Seed of simulator noise and drift injection")
      ->each([&o](const std::string&) { o.seed_given = true; });
  cmd->add_option("--max-scans", o.max_scans, "Stop after this many scans (0 = all)");
  cmd->add_option("--scan-period", o.scan_period, "Seconds per scan when files carry no times");
  cmd->add_flag("--vertical-correction", o.vertical_correction,
                "Apply the intrinsic vertical angle correction to raw scans");
  cmd->add_option("-o,--output", o.output, "Output directory");
}

std::string help_footer() {
  return "Configuration keys (driving defaults):\n" +
         ctlo::describe_keys(ctlo::Settings::ForProfile(ctlo::Profile::kDriving)) +
         "\nSet SPDLOG_LEVEL (for example SPDLOG_LEVEL=debug) to change log verbosity.";
}

/// Settings from profile, then config file, then --set, then --seed.
ctlo::Settings resolve_settings(const RunOptions& o) {
  ctlo::Profile profile = ctlo::Profile::kDriving;
  if (!o.profile.empty()) {
    profile = ctlo::profile_from_string(o.profile);
  } else if (!o.scenario.empty()) {
    profile = ctlo::sim::make_scenario(o.scenario).profile;
  }
  ctlo::Settings settings = ctlo::Settings::ForProfile(profile);
  if (!o.config.empty()) ctlo::load_config_file(settings, o.config);
  for (const auto& assignment : o.overrides) ctlo::apply_override(settings, assignment);
  if (o.seed_given) settings.seed = o.seed;
  settings.drift.seed = settings.seed;
  return settings;
}

struct Source {
  std::unique_ptr<ctlo::io::ScanSource> scans;
  /// Set when the scans are simulated.
  ctlo::sim::SimulatedScanSource* simulated = nullptr;
  std::string description;
};

Source open_source(const RunOptions& o, const ctlo::Settings& settings) {
  Source source;
  if (!o.scenario.empty()) {
    auto sim = std::make_unique<ctlo::sim::SimulatedScanSource>(
        ctlo::sim::make_scenario(o.scenario), settings.seed, o.max_scans);
    source.simulated = sim.get();
    source.scans = std::move(sim);
    source.description = "scenario " + o.scenario;
    return source;
  }
  if (o.input.empty())
    throw ctlo::Error(ctlo::ErrorCode::kInvalidArgument, "either --input or --scenario is required");
  ctlo::io::DirectorySourceOptions options;
  options.format = ctlo::io::scan_format_from_string(o.format);
  options.scan_period = o.scan_period;
  options.vertical_correction = o.vertical_correction;
  options.max_scans = o.max_scans;
  source.scans = std::make_unique<ctlo::io::DirectoryScanSource>(o.input, options);
  source.description = o.input;
  return source;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw ctlo::Error(ctlo::ErrorCode::kIoError, "cannot write " + path.string());
}

void write_timing(const fs::path& path, const std::vector<ctlo::ScanReport>& reports) {
  std::ofstream out(path);
  out << "index,points,keypoints,iterations,residuals,converged,retried,failed,inserted,"
         "rotation_deg,map_points,ms\n";
  for (const auto& r : reports) {
    out << fmt::format("{},{},{},{},{},{:d},{:d},{:d},{:d},{:.4f},{},{:.3f}\n", r.index,
                       r.num_points, r.num_keypoints, r.iterations, r.residuals, r.converged,
                       r.retried, r.failed, r.inserted, r.rotation_change_deg, r.map_points,
                       r.time_ms);
  }
  if (!out) throw ctlo::Error(ctlo::ErrorCode::kIoError, "cannot write " + path.string());
}

json odometry_summary(const std::vector<ctlo::ScanReport>& reports) {
  size_t failures = 0, retries = 0, skipped = 0;
  double total_ms = 0.0;
  for (const auto& r : reports) {
    failures += r.failed;
    retries += r.retried;
    skipped += !r.inserted;
    total_ms += r.time_ms;
  }
  json j;
  j["scans"] = reports.size();
  j["failures"] = failures;
  j["retries"] = retries;
  j["not_inserted"] = skipped;
  j["mean_ms_per_scan"] = reports.empty() ? 0.0 : total_ms / reports.size();
  return j;
}

std::vector<ctlo::Pose> truth_poses(const Source& source, double alpha) {
  std::vector<ctlo::Pose> poses;
  for (const auto& f : source.simulated->truth()) poses.push_back(ctlo::interpolate_pose(f, alpha));
  return poses;
}

/// RTE and ATE against simulator truth, reported as null when undefined.
json metrics(const std::vector<ctlo::Pose>& estimate, const std::vector<ctlo::Pose>& truth,
             const ctlo::RteOptions& rte_options) {
  json j;
  try {
    j["rte_percent"] = ctlo::relative_translation_error(estimate, truth, rte_options);
  } catch (const ctlo::Error&) {
    j["rte_percent"] = nullptr;
  }
  try {
    j["ate_m"] = ctlo::absolute_trajectory_error(estimate, truth);
  } catch (const ctlo::Error&) {
    j["ate_m"] = nullptr;
  }
  return j;
}

/// Segment lengths that fit the path: the standard set, or tenths of the path.
ctlo::RteOptions rte_options_for(const std::vector<ctlo::Pose>& truth) {
  ctlo::RteOptions options;
  const auto distances = ctlo::path_distances(truth);
  const double total = distances.empty() ? 0.0 : distances.back();
  if (total > options.lengths.front()) return options;
  options.lengths.clear();
  for (int k = 1; k <= 8; ++k) options.lengths.push_back(total * k / 10.0);
  return options;
}

/// Positions relative to the first truth pose so estimate and truth share a frame.
std::vector<ctlo::Pose> in_first_frame(const std::vector<ctlo::Pose>& poses,
                                       const ctlo::Pose& origin) {
  std::vector<ctlo::Pose> out;
  out.reserve(poses.size());
  const ctlo::Pose inv = origin.inverse();
  for (const auto& p : poses) out.push_back(inv * p);
  return out;
}

void log_progress(const ctlo::ScanReport& r) {
  spdlog::debug("scan {}: {} keypoints, {} iterations, {:.1f} ms{}{}", r.index, r.num_keypoints,
                r.iterations, r.time_ms, r.failed ? ", FAILED " + r.failure : "",
                r.inserted ? "" : ", not inserted");
  if (r.index % 100 == 0) spdlog::info("scan {} ({:.1f} ms)", r.index, r.time_ms);
}

int cmd_odometry(const RunOptions& o) {
  const ctlo::Settings settings = resolve_settings(o);
  Source source = open_source(o, settings);
  const fs::path out = o.output;
  fs::create_directories(out);
  write_text(out / "config.yaml", ctlo::dump_config(settings));
  spdlog::info("odometry on {} ({} profile)", source.description,
               ctlo::to_string(settings.odometry.profile));

  const ctlo::OdometryResult result =
      ctlo::run_odometry(*source.scans, settings.odometry,
                         [](const ctlo::Scan&, const ctlo::TrajectoryFrame&,
                            const ctlo::ScanReport& r) { log_progress(r); });

  ctlo::io::write_trajectory(out / "trajectory.txt", result.frames);
  ctlo::io::write_kitti_poses(out / "poses_kitti.txt", result.poses);
  write_timing(out / "timing.csv", result.reports);

  json summary = odometry_summary(result.reports);
  summary["input"] = source.description;
  summary["profile"] = ctlo::to_string(settings.odometry.profile);
  if (source.simulated) {
    const auto truth = truth_poses(source, settings.odometry.report_alpha);
    ctlo::io::write_trajectory(out / "groundtruth.txt", source.simulated->truth());
    const auto estimate = in_first_frame(result.poses, result.poses.front());
    const auto gt = in_first_frame(truth, truth.front());
    summary["metrics"] = metrics(estimate, gt, rte_options_for(gt));
  }
  write_text(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

void write_loops(const fs::path& path, const std::vector<ctlo::LoopConstraint>& loops) {
  std::ofstream out(path);
  out << "grid_a,grid_b,scan_a,scan_b,x,y,yaw_deg,score,overlap\n";
  for (const auto& l : loops) {
    out << fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", l.grid_a, l.grid_b,
                       l.scan_a, l.scan_b, l.x, l.y, l.yaw * 180.0 / M_PI, l.score, l.overlap);
  }
  if (!out) throw ctlo::Error(ctlo::ErrorCode::kIoError, "cannot write " + path.string());
}

int cmd_slam(const RunOptions& o, bool export_grids) {
  const ctlo::Settings settings = resolve_settings(o);
  Source source = open_source(o, settings);
  const fs::path out = o.output;
  fs::create_directories(out);
  write_text(out / "config.yaml", ctlo::dump_config(settings));
  spdlog::info("slam on {}: window {} scans, overlap {}", source.description,
               settings.loop.window, settings.loop.overlap);

  const ctlo::SlamResult result = ctlo::run_slam(
      *source.scans, settings.odometry, settings.loop, settings.drift,
      [](const ctlo::Scan&, const ctlo::TrajectoryFrame&, const ctlo::ScanReport& r) {
        log_progress(r);
      });

  ctlo::io::write_trajectory(out / "trajectory_before.txt", result.frames_before);
  ctlo::io::write_trajectory(out / "trajectory_after.txt", result.frames_after);
  ctlo::io::write_kitti_poses(out / "poses_before_kitti.txt", result.poses_before);
  ctlo::io::write_kitti_poses(out / "poses_after_kitti.txt", result.poses_after);
  write_timing(out / "timing.csv", result.odometry.reports);
  write_loops(out / "loops.csv", result.loops);
  ctlo::write_g2o((out / "pose_graph.g2o").string(), result.graph);
  if (export_grids) {
    fs::create_directories(out / "grids");
    for (size_t k = 0; k < result.grids.size(); ++k)
      ctlo::export_grid_pgm(result.grids[k], (out / "grids" / fmt::format("{:04d}.pgm", k)).string());
  }

  json summary = odometry_summary(result.odometry.reports);
  summary["input"] = source.description;
  summary["profile"] = ctlo::to_string(settings.odometry.profile);
  summary["n_map"] = settings.loop.window;
  summary["n_overlap"] = settings.loop.overlap;
  summary["grids"] = result.grids.size();
  summary["n_loop"] = result.loops.size();
  summary["optimizations"] = result.optimizations;
  if (source.simulated) {
    const double alpha = settings.loop.graph.node_alpha;
    const auto truth = truth_poses(source, alpha);
    ctlo::io::write_trajectory(out / "groundtruth.txt", source.simulated->truth());
    const auto gt = in_first_frame(truth, truth.front());
    const auto rte = rte_options_for(gt);
    summary["metrics_before"] =
        metrics(in_first_frame(result.poses_before, result.poses_before.front()), gt, rte);
    summary["metrics_after"] =
        metrics(in_first_frame(result.poses_after, result.poses_after.front()), gt, rte);
  }
  write_text(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_name, uint64_t seed, size_t max_scans,
                 const std::string& output) {
  const fs::path out = output;
  fs::create_directories(out / "scans");
  ctlo::sim::SimulatedScanSource source(ctlo::sim::make_scenario(scenario_name), seed, max_scans);
  size_t count = 0;
  while (auto scan = source.next()) {
    ctlo::io::write_ply(out / "scans" / fmt::format("{:06d}.ply", count), *scan);
    if (++count % 50 == 0) spdlog::info("wrote {} scans", count);
  }
  ctlo::io::write_trajectory(out / "groundtruth.txt", source.truth());
  std::vector<ctlo::Pose> mid;
  for (const auto& f : source.truth()) mid.push_back(ctlo::interpolate_pose(f, 0.5));
  ctlo::io::write_kitti_poses(out / "groundtruth_kitti.txt", mid);
  json summary;
  summary["scenario"] = scenario_name;
  summary["seed"] = seed;
  summary["scans"] = count;
  summary["profile"] = ctlo::to_string(source.scenario().profile);
  write_text(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& estimate_path, const std::string& truth_path, double alpha,
             const std::vector<double>& lengths, const std::string& output) {
  for (const auto& p : {estimate_path, truth_path}) {
    if (!fs::exists(p)) {
      std::cerr << "error: no such file: " << p << "\n";
      return kExitBadInput;
    }
  }
  const auto estimate = ctlo::io::read_poses(estimate_path, alpha);
  const auto truth = ctlo::io::read_poses(truth_path, alpha);
  if (estimate.empty() || estimate.size() != truth.size()) {
    std::cerr << fmt::format("error: {} estimated poses for {} ground-truth poses\n",
                             estimate.size(), truth.size());
    return kExitBadInput;
  }
  const auto est = in_first_frame(estimate, estimate.front());
  const auto gt = in_first_frame(truth, truth.front());
  ctlo::RteOptions rte = rte_options_for(gt);
  if (!lengths.empty()) rte.lengths = lengths;
  json j = metrics(est, gt, rte);
  j["poses"] = estimate.size();
  j["path_length_m"] = ctlo::path_distances(gt).back();

  if (!output.empty()) {
    const fs::path out = output;
    fs::create_directories(out);
    ctlo::io::write_xy_csv(out / "estimate_xy.csv", est);
    ctlo::io::write_xy_csv(out / "groundtruth_xy.csv", gt);
    write_text(out / "metrics.json", j.dump(2) + "\n");
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::cfg::load_env_levels();

  CLI::App app{"Continuous-time LiDAR odometry with elevation-grid loop closure"};
  app.require_subcommand(1);
  app.footer("Run '<command> --help' for the configuration keys.");

  RunOptions odo_opts;
  auto* odometry = app.add_subcommand("odometry", "Register a scan sequence");
  add_run_options(odometry, odo_opts);
  odometry->footer(help_footer());

  RunOptions slam_opts;
  bool export_grids = false;
  auto* slam = app.add_subcommand("slam", "Odometry with loop detection and pose-graph correction");
  add_run_options(slam, slam_opts);
  slam->add_flag("--export-grids", export_grids, "Write every elevation grid as a PGM image");
  slam->footer(help_footer());

  std::string sim_scenario;
  uint64_t sim_seed = 0;
  size_t sim_max = 0;
  std::string sim_output = "sim";
  std::string sim_config;
  auto* simulate = app.add_subcommand("simulate", "Write a simulated scenario as PLY scans");
  simulate->add_option("scenario", sim_scenario, "Scenario name")
      ->required()
      ->check(CLI::IsMember(ctlo::sim::scenario_names()));
  simulate->add_option("--seed", sim_seed, "Noise seed");
  simulate->add_option("-c,--config", sim_config, "YAML file; only its seed key is used");
  simulate->add_option("--max-scans", sim_max, "Stop after this many scans (0 = all)");
  simulate->add_option("-o,--output", sim_output, "Output directory");

  std::string est_path, gt_path, eval_output;
  double eval_alpha = 0.5;
  std::vector<double> eval_lengths;
  auto* eval = app.add_subcommand("eval", "RTE and ATE of an estimate against ground truth");
  eval->add_option("estimate", est_path, "Trajectory or KITTI pose file")->required();
  eval->add_option("ground_truth", gt_path, "Trajectory or KITTI pose file")->required();
  eval->add_option("--alpha", eval_alpha, "Pose inside each frame of trajectory files");
  eval->add_option("--lengths", eval_lengths, "RTE segment lengths in meters");
  eval->add_option("-o,--output", eval_output, "Directory for x,y CSV files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*odometry) return cmd_odometry(odo_opts);
    if (*slam) return cmd_slam(slam_opts, export_grids);
    if (*simulate) {
      if (!sim_config.empty() && simulate->count("--seed") == 0) {
        ctlo::Settings settings;
        ctlo::load_config_file(settings, sim_config);
        sim_seed = settings.seed;
      }
      return cmd_simulate(sim_scenario, sim_seed, sim_max, sim_output);
    }
    if (*eval) return cmd_eval(est_path, gt_path, eval_alpha, eval_lengths, eval_output);
  } catch (const ctlo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool bad_input = e.code() == ctlo::ErrorCode::kIoError ||
                           e.code() == ctlo::ErrorCode::kMalformedFile ||
                           e.code() == ctlo::ErrorCode::kInvalidArgument ||
                           e.code() == ctlo::ErrorCode::kUnknownScenario;
    return bad_input ? kExitBadInput : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
