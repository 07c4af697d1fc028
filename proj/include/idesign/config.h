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

#ifndef IDESIGN_CONFIG_H_
#define IDESIGN_CONFIG_H_

// Versioned JSON run configurations and the experiment driver behind
// `idesign run` and `idesign sweep`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "idesign/crowd.h"
#include "idesign/designer.h"
#include "idesign/marl.h"
#include "idesign/problems.h"
#include "idesign/routing.h"
#include "json.hpp"

namespace idesign {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kOutputDirEnv = "IDESIGN_OUTPUT_DIR";

nlohmann::json TrainerConfigToJson(const TrainerConfig& c);
// Unknown keys are errors; `where` prefixes field paths.
TrainerConfig TrainerConfigFromJson(const nlohmann::json& j,
                                    const std::string& where = "trainer");

enum class Experiment {
  kBraess,
  kNetwork,
  kCrowdOneShot,
  kCrowdDynamic,
  kOrderSweep,
  kPreserveNe,
};

std::string ExperimentName(Experiment e);

struct ProbeSpec {
  int pairs = 20;
  std::vector<double> scales = {1e-2, 1e-3};
};

struct PreserveSpec {
  double gamma = 0.9;
  int init_action = 1;  // hare
  double init_prob = 0.7;
};

struct RunConfig {
  Experiment experiment = Experiment::kBraess;
  std::vector<uint64_t> seeds = {0};
  std::optional<std::string> output_dir;
  ObjectiveSpec objective;
  BoConfig bo;
  std::optional<ProbeSpec> probe;

  // Routing experiments.
  RoutingNetwork network;
  TollSpec tolls;
  TrainerConfig trainer;
  int periods = 1;
  std::vector<int> orders;  // order-sweep

  // Crowd experiments.
  CrowdWorld world;
  TargetSchedule targets;
  nlohmann::json targets_json;
  int crowd_order = 1;
  double crowd_lo = -10.0;
  double crowd_hi = 10.0;
  CrowdTrainerConfig crowd_trainer;
  int eval_episodes = 8;

  PreserveSpec preserve;
  int preserve_order = 1;
  double preserve_lo = -10.0;
  double preserve_hi = 10.0;

  // Network paths are resolved against `base_dir`. Throws ConfigError with
  // the offending field path.
  static RunConfig FromJson(const nlohmann::json& j,
                            const std::string& base_dir = ".");
  // Normalized form with every default filled in and files inlined; the
  // config hash is computed over it.
  nlohmann::json ToJson() const;
  std::string Hash() const;
};

// Sets `dotted.key` in `j` to `value`, parsed as JSON when possible and as
// a string otherwise. Throws ConfigError on a malformed assignment.
void ApplyOverride(nlohmann::json& j, const std::string& assignment);

// Reads a config file. Throws ConfigError naming the path when it is missing
// or unparsable.
nlohmann::json ReadConfigFile(const std::string& path);

// Output directory: explicit argument, then the config, then
// $IDESIGN_OUTPUT_DIR, then ./idesign_out.
std::string ResolveOutputDir(const RunConfig& cfg,
                             const std::string& override_dir);

// Runs the configured experiment, writing summary.json and CSVs under
// `outdir`. Every CSV starts with a "# config_hash=" line. Progress and
// timing go to `log` when set. Returns the summary.
nlohmann::json RunExperiment(const RunConfig& cfg, const std::string& outdir,
                             std::ostream* log = nullptr);

// False when a recorded invariant in the summary failed; fills `failures`.
bool SummaryInvariantsHold(const nlohmann::json& summary,
                           std::vector<std::string>* failures);

}  // namespace idesign

#endif  // IDESIGN_CONFIG_H_
