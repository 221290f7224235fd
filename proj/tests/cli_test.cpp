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


#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "softarm/csv.hpp"

namespace softarm {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("softarm_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(const std::string& args, const std::string& log = "log.txt") const {
    const std::string cmd = std::string(SOFTARM_CLI_PATH) + " " + args + " > " +
                            (dir_ / log).string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Out(const std::string& sub) const { return (dir_ / sub).string(); }

  static std::string Slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("unknown-command"), 2);
  EXPECT_EQ(Run("track --config " + Out("missing.json")), 2);
  std::ofstream(dir_ / "bad.json") << R"({"ilc": {"iteratons": 3}})";
  EXPECT_EQ(Run("track --config " + Out("bad.json") + " --out " + Out("o")), 2);
  EXPECT_NE(Slurp(dir_ / "log.txt").find("config.ilc.iteratons"), std::string::npos);
  EXPECT_EQ(Run("pickplace --cold-start --warm-start " + Out("bad.json") + " --out " + Out("o")),
            2);
  EXPECT_EQ(Run("ilc-train --task sideways"), 2);
}

TEST_F(Cli, HelpExitsWithZero) { EXPECT_EQ(Run("--help"), 0); }

TEST_F(Cli, AllocationCheckPasses) {
  EXPECT_EQ(Run("allocation-check --samples 1000 --out " + Out("a")), 0);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "allocation.csv"));
  EXPECT_NE(Slurp(dir_ / "log.txt").find("allocation-check passed"), std::string::npos);
}

TEST_F(Cli, IdentifyWritesOneBodeFilePerLevel) {
  ASSERT_EQ(Run("identify --out " + Out("id")), 0);
  for (const char* level : {"1.00", "1.05", "1.10", "1.15", "1.20"}) {
    const fs::path p = dir_ / "id" / (std::string("bode_pbar_") + level + ".csv");
    ASSERT_TRUE(fs::exists(p)) << p;
    const csv::Table t = csv::read_file(p.string());
    EXPECT_EQ(t.header.front(), "frequency_hz");
    EXPECT_GT(t.rows.size(), 10u);
  }
  EXPECT_TRUE(fs::exists(dir_ / "id" / "identification.csv"));
  EXPECT_EQ(Run("track --config " + Out("id/fitted_config.json") + " --out " + Out("t")), 0);
}

TEST_F(Cli, SameSeedGivesIdenticalFiles) {
  ASSERT_EQ(Run("track --seed 5 --out " + Out("r1")), 0);
  ASSERT_EQ(Run("track --seed 5 --out " + Out("r2")), 0);
  for (const char* f : {"track_summary.csv", "track_m0.00.csv", "track_m0.20.csv"}) {
    const std::string a = Slurp(dir_ / "r1" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, Slurp(dir_ / "r2" / f)) << f;
  }
  EXPECT_EQ(Slurp(dir_ / "r1" / "track_summary.csv").rfind("# softarm track seed=5", 0), 0u);
}

TEST_F(Cli, DifferentSeedChangesNoisyTraces) {
  ASSERT_EQ(Run("track --seed 5 --out " + Out("r1")), 0);
  ASSERT_EQ(Run("track --seed 6 --out " + Out("r2")), 0);
  EXPECT_NE(Slurp(dir_ / "r1" / "track_m0.00.csv"), Slurp(dir_ / "r2" / "track_m0.00.csv"));
}

TEST_F(Cli, TrackTraceHasPlanSchema) {
  ASSERT_EQ(Run("track --out " + Out("t") + " --emit-plot-data"), 0);
  const csv::Table t = csv::read_file((dir_ / "t" / "track_m0.20.csv").string());
  EXPECT_EQ(t.header, csv::trace_header());
  EXPECT_TRUE(fs::exists(dir_ / "t" / "plot"));
}

TEST_F(Cli, IlcTrainCorrectionFeedsWarmStart) {
  ASSERT_EQ(Run("ilc-train --task pick --iterations 5 --out " + Out("p")), 0);
  ASSERT_TRUE(fs::exists(dir_ / "p" / "ilc_correction.csv"));
  const csv::Table h = csv::read_file((dir_ / "p" / "ilc_history.csv").string());
  EXPECT_EQ(h.rows.size(), 6u);
  EXPECT_EQ(Run("ilc-train --task pick --iterations 2 --warm-start " +
                Out("p/ilc_correction.csv") + " --out " + Out("w")),
            0);
  EXPECT_EQ(Run("ilc-train --task carry --iterations 2 --warm-start " +
                Out("p/ilc_correction.csv") + " --out " + Out("x")),
            2);
}

TEST_F(Cli, PickplaceRunsTrials) {
  ASSERT_EQ(Run("pickplace --trials 2 --out " + Out("pp")), 0);
  const csv::Table t = csv::read_file((dir_ / "pp" / "trials.csv").string());
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "pp" / "warm_start.csv"));
}

}  // namespace
}  // namespace softarm
