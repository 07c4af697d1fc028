// Copyright 2026 The idesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "idesign/config.h"
#include "idesign/errors.h"
#include "idesign/verify.h"

namespace idesign {
namespace {

namespace fs = std::filesystem;

const std::string kConfigs = std::string(IDESIGN_FIXTURE_DIR) + "/configs";

nlohmann::json Load(const std::string& name) {
  return ReadConfigFile(kConfigs + "/" + name);
}

RunConfig Parse(const nlohmann::json& j) { return RunConfig::FromJson(j, kConfigs); }

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("idesign_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(ConfigTest, FixtureConfigsParse) {
  for (const char* name : {"braess.json", "extended_city.json", "order_sweep.json",
                           "crowd_oneshot.json", "crowd_dynamic.json",
                           "preserve_ne.json"}) {
    SCOPED_TRACE(name);
    const RunConfig c = Parse(Load(name));
    EXPECT_FALSE(c.Hash().empty());
    // The normalized form parses back to the same config.
    EXPECT_EQ(RunConfig::FromJson(c.ToJson(), kConfigs).Hash(), c.Hash());
  }
  const RunConfig b = Parse(Load("braess.json"));
  EXPECT_EQ(b.experiment, Experiment::kBraess);
  EXPECT_EQ(b.tolls.order, 5);
  EXPECT_EQ(b.network.edges.size(), 5u);
  EXPECT_EQ(Parse(Load("order_sweep.json")).orders, (std::vector<int>{1, 3, 5}));
}

TEST(ConfigTest, UnknownKeyNamesField) {
  nlohmann::json j = Load("braess.json");
  j["trainer"]["learning_rate"] = 0.1;
  try {
    Parse(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(ConfigTest, IrrelevantSectionRejected) {
  nlohmann::json j = Load("braess.json");
  j["world"] = nlohmann::json::object();
  EXPECT_THROW(Parse(j), ConfigError);
}

TEST(ConfigTest, BadValuesRejected) {
  nlohmann::json j = Load("braess.json");
  j["version"] = 2;
  EXPECT_THROW(Parse(j), ConfigError);
  j = Load("braess.json");
  j["bo"]["K"] = 0;
  EXPECT_THROW(Parse(j), ConfigError);
  j = Load("braess.json");
  j["experiment"] = "nope";
  EXPECT_THROW(Parse(j), ConfigError);
  j = Load("preserve_ne.json");
  j["preserve"]["gamma"] = 1.0;
  EXPECT_THROW(Parse(j), ConfigError);
}

TEST(ConfigTest, MissingFileNamesPath) {
  try {
    ReadConfigFile("/nonexistent/cfg.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/cfg.json"),
              std::string::npos);
  }
}

TEST(ConfigTest, OverridesParseJsonValues) {
  nlohmann::json j = Load("braess.json");
  ApplyOverride(j, "bo.K=7");
  ApplyOverride(j, "trainer.actor_learning_rate=0.25");
  ApplyOverride(j, "output_dir=/tmp/x");
  EXPECT_EQ(j["bo"]["K"], 7);
  EXPECT_EQ(j["trainer"]["actor_learning_rate"], 0.25);
  EXPECT_EQ(j["output_dir"], "/tmp/x");
  EXPECT_EQ(Parse(j).bo.K, 7);
  EXPECT_THROW(ApplyOverride(j, "novalue"), ConfigError);
  EXPECT_THROW(ApplyOverride(j, "a..b=1"), ConfigError);
}

TEST(ConfigTest, HashIgnoresOutputDirOnly) {
  nlohmann::json j = Load("braess.json");
  const std::string h = Parse(j).Hash();
  j["output_dir"] = "/somewhere/else";
  EXPECT_EQ(Parse(j).Hash(), h);
  j["bo"]["K"] = 3;
  EXPECT_NE(Parse(j).Hash(), h);
}

TEST(ConfigTest, OutputDirPrecedence) {
  RunConfig c = Parse(Load("preserve_ne.json"));
  unsetenv(kOutputDirEnv);
  EXPECT_EQ(ResolveOutputDir(c, ""), "idesign_out");
  setenv(kOutputDirEnv, "/tmp/env_out", 1);
  EXPECT_EQ(ResolveOutputDir(c, ""), "/tmp/env_out");
  c.output_dir = "/tmp/cfg_out";
  EXPECT_EQ(ResolveOutputDir(c, ""), "/tmp/cfg_out");
  EXPECT_EQ(ResolveOutputDir(c, "/tmp/arg_out"), "/tmp/arg_out");
  unsetenv(kOutputDirEnv);
}

TEST(RunExperimentTest, PreserveSmokeIsReproducible) {
  nlohmann::json j = Load("preserve_ne.json");
  j["bo"]["K"] = 2;
  const RunConfig c = Parse(j);
  const fs::path a = TempDir("run_a"), b = TempDir("run_b");
  RunExperiment(c, a.string());
  const nlohmann::json s = RunExperiment(c, b.string());
  std::vector<std::string> failures;
  EXPECT_TRUE(SummaryInvariantsHold(s, &failures));
  for (const char* f : {"summary.json", "seed_3/evaluations.csv",
                        "seed_3/dataset.csv", "seed_3/training.csv"}) {
    SCOPED_TRACE(f);
    ASSERT_TRUE(fs::exists(a / f));
    EXPECT_EQ(Slurp(a / f), Slurp(b / f));
  }
  const std::string csv = Slurp(a / "seed_3/evaluations.csv");
  EXPECT_EQ(csv.rfind("# config_hash=" + c.Hash() + "\n", 0), 0u);
  fs::remove_all(a);
  fs::remove_all(b);
}

std::string Cli() { return IDESIGN_CLI_PATH; }

int ExitCode(const std::string& args) {
  const int status = std::system((Cli() + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, MissingConfigExitsWithTwo) {
  EXPECT_EQ(ExitCode("run /nonexistent/cfg.json"), 2);
}

TEST(CliTest, BadArgumentsExitWithTwo) {
  EXPECT_EQ(ExitCode("run"), 2);
  EXPECT_EQ(ExitCode("run " + kConfigs + "/braess.json --K notanumber"), 2);
  EXPECT_EQ(ExitCode("run " + kConfigs + "/braess.json --set bo.K=0"), 2);
}

TEST(CliTest, BudgetOfOneGivesOneEvaluation) {
  const fs::path out = TempDir("cli");
  ASSERT_EQ(ExitCode("run " + kConfigs + "/preserve_ne.json --K 1 --out " +
                     out.string()),
            0);
  std::ifstream in(out / "seed_3/evaluations.csv");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 3);  // hash stamp, header, one evaluation
  fs::remove_all(out);
}

TEST(VerifyTest, SuitesPassAtReducedSize) {
  for (const auto& c : VerifyPotentialSuite(10, 2)) EXPECT_TRUE(c.passed) << c.name;
  for (const auto& c : VerifyShapingSuite(100, 10, 3)) EXPECT_TRUE(c.passed) << c.name;
  for (const auto& c : VerifyGpSuite(20, 1000000, 4)) EXPECT_TRUE(c.passed) << c.name;
}

}  // namespace
}  // namespace idesign
