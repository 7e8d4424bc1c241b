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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ctlo/config.hpp"
#include "ctlo/errors.hpp"

namespace ctlo {
namespace {

TEST(Config, DumpRoundTrips) {
  Settings s = Settings::ForProfile(Profile::kHighFrequency);
  s.seed = 42;
  s.loop.window = 80;
  s.drift.enabled = true;
  s.drift.yaw_bias_deg = 0.05;
  s.odometry.solver.mode = MotionMode::kConstantVelocityRigid;
  const std::string text = dump_config(s);

  Settings back;
  load_config_string(back, text);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.loop.window, 80);
  EXPECT_TRUE(back.drift.enabled);
  EXPECT_DOUBLE_EQ(back.odometry.map.voxel_size, 0.8);
  EXPECT_EQ(back.odometry.solver.mode, MotionMode::kConstantVelocityRigid);
}

TEST(Config, EveryKeyRoundTripsThroughSetAndGet) {
  Settings s;
  for (const auto& key : config_keys()) {
    const std::string value = get_value(s, key.name);
    EXPECT_NO_THROW(set_value(s, key.name, value)) << key.name;
    EXPECT_EQ(get_value(s, key.name), value) << key.name;
    EXPECT_FALSE(key.description.empty()) << key.name;
  }
}

TEST(Config, OverridesAndErrors) {
  Settings s;
  apply_override(s, "map.voxel_size=0.6");
  EXPECT_DOUBLE_EQ(s.odometry.map.voxel_size, 0.6);
  apply_override(s, "solver.mode=none");
  EXPECT_EQ(s.odometry.solver.mode, MotionMode::kNone);
  EXPECT_THROW(apply_override(s, "map.voxel_size"), Error);
  EXPECT_THROW(apply_override(s, "no.such.key=1"), Error);
  EXPECT_THROW(apply_override(s, "map.voxel_size=abc"), Error);
  EXPECT_THROW(apply_override(s, "loop.enabled=maybe"), Error);
}

TEST(Config, ProfileInYamlResetsDefaultsFirst) {
  Settings s;
  load_config_string(s, "solver:\n  max_iterations: 7\nprofile: high-frequency\n");
  EXPECT_EQ(s.odometry.profile, Profile::kHighFrequency);
  EXPECT_DOUBLE_EQ(s.odometry.map.voxel_size, 0.8);
  // explicit keys win over the profile regardless of their position
  EXPECT_EQ(s.odometry.solver.max_iterations, 7);
}

TEST(Config, FileErrors) {
  Settings s;
  try {
    load_config_file(s, "/nonexistent/ctlo.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
  const auto path = std::filesystem::temp_directory_path() / "ctlo_bad.yaml";
  std::ofstream(path) << "map: [unclosed\n";
  try {
    load_config_file(s, path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedFile);
  }
  std::filesystem::remove(path);
}

TEST(Config, DescribeListsReferenceValues) {
  const std::string text = describe_keys(Settings{});
  EXPECT_NE(text.find("loop.window"), std::string::npos);
  EXPECT_NE(text.find("[reference: 100]"), std::string::npos);
  EXPECT_NE(text.find("[reference: 30]"), std::string::npos);
}

}  // namespace
}  // namespace ctlo
