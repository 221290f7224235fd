// Copyright 2026 The softarm Authors
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


#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "softarm/config.hpp"

namespace softarm {
namespace {

using nlohmann::json;

TEST(Config, DefaultsMatchLibraryDefaults) {
  const ExperimentConfig c = default_config();
  EXPECT_EQ(c.ilc_iterations, 24);
  EXPECT_EQ(c.ilc.error_weight, 1.0);
  EXPECT_EQ(c.ilc.change_weight, 1e-2);
  EXPECT_EQ(c.ilc.rate_weight, 1e-6);
  EXPECT_EQ(c.loop.plant.pressure.lag_time_constant, 0.02);
  EXPECT_EQ(c.pickplace_training.trials, 50);
  EXPECT_NEAR(c.loop.controller.kappa.alpha, 6.501, 1e-3);
  EXPECT_NEAR(c.loop.controller.kappa.beta, 5.908, 1e-3);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, EmptyObjectGivesDefaults) {
  EXPECT_EQ(config_to_json(config_from_json(json::object())), config_to_json(default_config()));
}

TEST(Config, RoundTripsThroughJson) {
  ExperimentConfig c = default_config();
  c.seed = 42;
  c.loop.plant.disturbance.noise_std = deg(0.2);
  c.ilc.rate_weight = 0.0;
  c.track.masses = {0.0, 0.1};
  c.resolve();
  const json first = config_to_json(c);
  const json second = config_to_json(config_from_json(first));
  EXPECT_EQ(first, second);
  EXPECT_NEAR(config_from_json(first).loop.plant.disturbance.noise_std, deg(0.2), 1e-15);
}

TEST(Config, PartialOverrideKeepsOtherDefaults) {
  const json j = json::parse(R"({"seed": 7, "ilc": {"iterations": 10}})");
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.ilc_iterations, 10);
  EXPECT_EQ(c.ilc.change_weight, 1e-2);
  EXPECT_EQ(c.pickplace.load_mass, default_config().pickplace.load_mass);
}

TEST(Config, DegreeKeysConvertToRadians) {
  const json j = json::parse(R"({"transition": {"alpha_end_deg": 45.0}})");
  EXPECT_NEAR(config_from_json(j).transition.alpha_end, deg(45.0), 1e-15);
}

TEST(Config, UnknownKeysAreRejectedWithPath) {
  try {
    config_from_json(json::parse(R"({"ilc": {"iteratons": 10}})"));
    FAIL() << "expected a configuration error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("config.ilc.iteratons"), std::string::npos);
  }
  EXPECT_THROW(config_from_json(json::parse(R"({"extra": 1})")), ConfigError);
}

TEST(Config, ExplicitKappaOverridesPoleRule) {
  const json j = json::parse(R"({"controller": {"kappa": {"alpha": 3.0, "beta": 4.0}}})");
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(c.loop.controller.kappa.alpha, 3.0);
  EXPECT_EQ(c.loop.controller.kappa.beta, 4.0);
}

TEST(Config, SlowPoleMovesKappa) {
  const json j = json::parse(R"({"controller": {"slow_pole_hz": 1.0}})");
  EXPECT_LT(config_from_json(j).loop.controller.kappa.alpha,
            default_config().loop.controller.kappa.alpha);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(config_from_json(json::parse(R"({"ilc": {"iterations": -1}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"ilc": {"change_weight": 0}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"ilc": {"iterations": "ten"}})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"ilc": 3})")), ConfigError);
  EXPECT_THROW(config_from_json(json::parse(R"({"controller": {"mass_source": "guess"}})")),
               ConfigError);
  EXPECT_THROW(
      config_from_json(json::parse(R"({"pickplace": {"phase_iterations": [1, 2]}})")),
      ConfigError);
}

TEST(Config, LoadsFilesAndReportsFailures) {
  const auto dir = std::filesystem::temp_directory_path() / "softarm_config_test";
  std::filesystem::create_directories(dir);
  const auto good = dir / "good.json";
  std::ofstream(good) << "// comment\n{\"seed\": 3}\n";
  EXPECT_EQ(load_config(good.string()).seed, 3u);
  const auto broken = dir / "broken.json";
  std::ofstream(broken) << "{\"seed\": ";
  EXPECT_THROW(load_config(broken.string()), ConfigError);
  EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace softarm
