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

// Command-line entry point: run experiments from config files, order sweeps,
// and the invariant verification suites.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "idesign/config.h"
#include "idesign/designer.h"
#include "idesign/errors.h"
#include "idesign/verify.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct RunArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> K;
  int threads = 1;
  std::string out;
  std::vector<std::string> sets;
  std::vector<int> orders;
};

nlohmann::json LoadWithOverrides(const RunArgs& a) {
  nlohmann::json j = idesign::ReadConfigFile(a.config);
  for (const std::string& s : a.sets) idesign::ApplyOverride(j, s);
  if (a.seed) {
    j.erase("seeds");
    j["seed"] = *a.seed;
  }
  if (a.K) j["bo"]["K"] = *a.K;
  return j;
}

int Execute(const nlohmann::json& j, const RunArgs& a) {
  const std::string base =
      std::filesystem::path(a.config).parent_path().string();
  const idesign::RunConfig cfg =
      idesign::RunConfig::FromJson(j, base.empty() ? "." : base);
  idesign::SetMaxThreads(a.threads);
  const std::string outdir = idesign::ResolveOutputDir(cfg, a.out);
  const nlohmann::json summary = idesign::RunExperiment(cfg, outdir, &std::cerr);
  std::vector<std::string> failures;
  if (!idesign::SummaryInvariantsHold(summary, &failures)) {
    for (const std::string& f : failures) {
      std::cerr << "invariant violated: " << f << "\n";
    }
    return kExitFailure;
  }
  std::cout << "wrote " << outdir << "/summary.json (config_hash "
            << summary["config_hash"].get<std::string>() << ")\n";
  return kExitOk;
}

int Guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const idesign::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

void AddRunOptions(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("config", a.config, "JSON run configuration")->required();
  cmd->add_option("--seed", a.seed, "Replace the configured seeds");
  cmd->add_option("--K", a.K, "Number of design evaluations");
  cmd->add_option("--threads", a.threads, "Worker threads for repeats")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--set", a.sets, "Override a config field: key.path=value");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incentive design for multi-agent learners"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run an experiment config");
  AddRunOptions(run, run_args);

  RunArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "Modifier order sweep");
  AddRunOptions(sweep, sweep_args);
  sweep->add_option("--orders", sweep_args.orders, "Series orders")
      ->delimiter(',');

  std::string suite = "all";
  CLI::App* verify = app.add_subcommand("verify", "Run invariant suites");
  verify->add_option("suite", suite, "potential | shaping | gp | all")
      ->check(CLI::IsMember({"potential", "shaping", "gp", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (run->parsed()) {
    return Guarded([&] { return Execute(LoadWithOverrides(run_args), run_args); });
  }
  if (sweep->parsed()) {
    return Guarded([&] {
      nlohmann::json j = LoadWithOverrides(sweep_args);
      j["experiment"] = "order-sweep";
      if (!sweep_args.orders.empty()) j["orders"] = sweep_args.orders;
      return Execute(j, sweep_args);
    });
  }
  return Guarded([&] {
    std::vector<idesign::CheckResult> checks;
    auto add = [&](std::vector<idesign::CheckResult> c) {
      checks.insert(checks.end(), c.begin(), c.end());
    };
    if (suite == "potential" || suite == "all") add(idesign::VerifyPotentialSuite());
    if (suite == "shaping" || suite == "all") add(idesign::VerifyShapingSuite());
    if (suite == "gp" || suite == "all") add(idesign::VerifyGpSuite());
    const bool ok = idesign::PrintChecks(checks, std::cout);
    if (!ok) {
      for (const auto& c : checks) {
        if (!c.passed) std::cerr << "violated: " << c.name << "\n";
      }
    }
    return ok ? kExitOk : kExitFailure;
  });
}
