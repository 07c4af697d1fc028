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

#ifndef IDESIGN_DESIGNER_H_
#define IDESIGN_DESIGNER_H_

// The outer design loop: evaluate the designer objective for a modifier by
// training the agents to convergence, and search modifiers with Bayesian
// optimization.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "idesign/bayesopt.h"
#include "idesign/incentive.h"
#include "json.hpp"

namespace idesign {

enum class ObjectiveKind { kTrajectory, kWelfare };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kTrajectory;
  double lambda = 0.0;  // weight of the cumulative incentive penalty
  int repeats = 4;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ObjectiveSpec FromJson(const nlohmann::json& j);
};

// Result of one inner training run under a fixed modifier.
struct Outcome {
  double trajectory_reward = std::numeric_limits<double>::quiet_NaN();
  double welfare = 0.0;
  double incentive = 0.0;  // Psi
  bool converged = false;
  int iterations = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();
};

class DesignProblem {
 public:
  virtual ~DesignProblem() = default;
  virtual std::string name() const = 0;
  virtual const ModifierParams& modifier_template() const = 0;
  // Trains agents under `w` from scratch and measures the result.
  virtual Outcome Evaluate(const ModifierParams& w, uint64_t seed) const = 0;
  // Writes plot data (flows, densities) for a run under `w` into `dir`.
  virtual void WriteArtifacts(const ModifierParams& w, uint64_t seed,
                              const std::string& dir) const;
};

struct Evaluation {
  int k = 0;
  std::vector<double> w;
  double J = -std::numeric_limits<double>::infinity();
  bool failed = false;
  std::string error;
  std::vector<double> repeat_J;
  // Means over repeats.
  double trajectory_reward = std::numeric_limits<double>::quiet_NaN();
  double welfare = 0.0;
  double incentive = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double iterations = 0.0;
  int converged_repeats = 0;
  bool budget_balanced = false;
};

// Non-finite numbers become null.
nlohmann::json EvaluationToJson(const Evaluation& e);

// J = mean over repeats of (R_ID - lambda * Psi), R_ID being the
// trajectory reward or the welfare. An inner-loop failure yields a failed
// evaluation with J = -infinity.
// Cap on worker threads used for the repeats of one evaluation. Results do
// not depend on it. Default 1.
void SetMaxThreads(int n);
int MaxThreads();

Evaluation EvaluateJ(const DesignProblem& problem, const ModifierParams& w,
                     const ObjectiveSpec& obj, uint64_t seed);

struct BoConfig {
  int K = 150;
  ProposalConfig proposal;
  std::optional<GpHyper> hyper;  // empty: marginal-likelihood grid

  void Validate() const;
  nlohmann::json ToJson() const;
  static BoConfig FromJson(const nlohmann::json& j);
};

struct RunReport {
  std::string problem;
  uint64_t seed = 0;
  ObjectiveSpec objective;
  std::vector<Evaluation> evaluations;
  DesignerDataset dataset;
  std::vector<double> best_so_far;
  std::vector<nlohmann::json> gp_hyper;  // surrogate used after step k
  double train_seconds = 0.0;            // wall clock, kept out of ToJson
  double bo_seconds = 0.0;

  const Evaluation& best() const;
  nlohmann::json ToJson() const;
  // Columns k, J, best_so_far, trajectory_reward, welfare, incentive,
  // budget_balanced, gap, iterations, converged_repeats, failed.
  void WriteEvaluationsCsv(std::ostream& os) const;
};

// Called after every evaluation.
using ProgressFn = std::function<void(const Evaluation&, double best_so_far)>;

// w_0 uniform in the box; then for each k train, score, refit the surrogate
// and propose by expected improvement. Exactly K evaluations.
RunReport Run(const DesignProblem& problem, const ObjectiveSpec& obj,
              const BoConfig& bo, uint64_t seed,
              const ProgressFn& progress = {});

struct SweepResult {
  std::vector<int> orders;
  std::vector<uint64_t> seeds;
  std::vector<std::vector<double>> best_J;  // [order][seed]
  std::vector<double> median;
  std::vector<RunReport> reports;  // order-major

  nlohmann::json ToJson() const;
};

double Median(std::vector<double> v);

SweepResult OrderSweep(
    const std::function<std::unique_ptr<DesignProblem>(int order)>& factory,
    const std::vector<int>& orders, const ObjectiveSpec& obj,
    const BoConfig& bo, const std::vector<uint64_t>& seeds,
    const ProgressFn& progress = {});

struct ContinuityReport {
  std::vector<double> scales;
  std::vector<double> max_ratio;  // max |J(w) - J(w + d)| / |d| per scale
  bool flagged = false;           // ratio grew more than 10x between scales

  nlohmann::json ToJson() const;
};

// Probes |J(w) - J(w + d)| / |d| with common random numbers at random w and
// random directions of each length in `scales`.
ContinuityReport ContinuityProbe(const DesignProblem& problem,
                                 const ObjectiveSpec& obj, int pairs,
                                 const std::vector<double>& scales,
                                 uint64_t seed);

}  // namespace idesign

#endif  // IDESIGN_DESIGNER_H_
