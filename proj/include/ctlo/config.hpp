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
 * \file config.hpp
 * \brief Flat dotted-key view over every tunable, loadable from YAML.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctlo/odometry.hpp"
#include "ctlo/slam.hpp"

namespace ctlo {

struct Settings {
  PipelineConfig odometry;
  LoopClosureParams loop;
  DriftParams drift;
  /// Seeds the simulator noise and the drift model.
  uint64_t seed = 0;

  static Settings ForProfile(Profile profile);
};

struct ConfigKey {
  std::string name;
  std::string description;
  /// Reference value of the method, when one exists.
  std::string origin;
};

/// Every key understood by set_value, in dump order.
const std::vector<ConfigKey>& config_keys();

/// Parses value for key. Throws kInvalidArgument on unknown keys or bad values.
void set_value(Settings& settings, const std::string& key, const std::string& value);

/// Applies "key=value".
void apply_override(Settings& settings, const std::string& assignment);

std::string get_value(const Settings& settings, const std::string& key);

/**
 * Applies a YAML file. Nested maps are flattened into dotted keys. A
 * top-level "profile" entry first resets the profile-dependent defaults.
 */
void load_config_file(Settings& settings, const std::filesystem::path& path);

/// Same as load_config_file for in-memory YAML text.
void load_config_string(Settings& settings, const std::string& yaml);

/// Nested YAML rendering of all keys; round-trips through load_config_string.
std::string dump_config(const Settings& settings);

/// One line per key with its current value and description, for --help.
std::string describe_keys(const Settings& settings);

}  // namespace ctlo
