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

#ifndef IDESIGN_MARL_H_
#define IDESIGN_MARL_H_

// Independent advantage actor-critic learners with tabular critics, trained
// on an episodic multi-agent environment until their policies stop moving.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "idesign/game.h"
#include "idesign/incentive.h"

namespace idesign {

struct TrainerConfig {
  int max_iterations = 2000;
  int batch_episodes = 16;
  double actor_learning_rate = 0.05;
  double critic_learning_rate = 0.1;
  // Entropy bonus, annealed linearly over max_iterations.
  double entropy_start = 0.05;
  double entropy_end = 0.0;
  double convergence_tol = 1e-3;
  int convergence_window = 50;
  // Convergence is not tested before this iteration.
  int min_iterations = 0;
  uint64_t seed = 0;

  void Validate() const;
};

struct AgentTransition {
  int obs = 0;
  int action = 0;
  double reward = 0.0;
  int next_obs = -1;  // -1 marks a terminal transition
};

// Tabulated action probabilities for one iteration's rollouts.
class PolicyProbs {
 public:
  explicit PolicyProbs(const JointPolicy& policy);
  std::span<const double> Row(int agent, int obs) const {
    const int k = shared_ ? 0 : agent;
    return std::span<const double>(flat_[k]).subspan(
        offsets_[k][obs], offsets_[k][obs + 1] - offsets_[k][obs]);
  }

 private:
  bool shared_;
  std::vector<std::vector<double>> flat_;
  std::vector<std::vector<int>> offsets_;
};

class EpisodicEnv {
 public:
  virtual ~EpisodicEnv() = default;
  virtual int num_agents() const = 0;
  virtual std::vector<int> ActionsPerObservation(int agent) const = 0;
  virtual double Discount(int agent) const = 0;
  // Samples one episode and appends each agent's transitions to out[agent].
  // Must be a pure function of (probs, seed).
  virtual void SampleEpisode(
      const PolicyProbs& probs, uint64_t seed,
      std::vector<std::vector<AgentTransition>>& out) const = 0;
};

// Per-agent state-value table (one table when shared).
struct CriticTable {
  std::vector<std::vector<double>> values;
};

struct TrainDiagnostics {
  // Per iteration: mean over agents of the batch-mean discounted return.
  std::vector<double> mean_return;
  std::vector<double> welfare;
  std::vector<double> policy_change;  // L-inf change of action probabilities
  // Per-agent batch-mean returns; kept only for small populations.
  std::vector<std::vector<double>> agent_returns;
  bool converged = false;
  int convergence_iteration = -1;
  int iterations = 0;

  // CSV: iteration, [return_i...], mean_return, welfare, policy_change.
  void WriteCsv(std::ostream& os) const;
};

struct TrainResult {
  JointPolicy policy;
  CriticTable critic;
  TrainDiagnostics diagnostics;
};

struct TrainOptions {
  bool shared = false;  // mean-field: one policy and critic for all agents
  // Initial policy; uniform when empty.
  std::optional<JointPolicy> initial_policy;
  // Called after every actor update.
  std::function<void(int iteration, const JointPolicy&)> on_iteration;
  int max_tracked_agents = 16;
};

// Runs the inner learning loop: sample a batch, TD(0) critic update,
// advantage policy-gradient actor step on each agent's own rewards. Throws
// TrainingError on non-finite logits or values.
TrainResult Train(const EpisodicEnv& env, const TrainerConfig& cfg,
                  const TrainOptions& options = {});

// True iff every action probability moved by at most `tol` across the last
// `window` snapshots. Throws ConfigError if fewer snapshots are available.
bool HasConverged(std::span<const std::vector<double>> history, double tol,
                  int window);

double SocialWelfare(const ValueEstimate& values);
double SocialWelfare(std::span<const double> values);

// A finite game played episodically for the effective horizon, optionally
// under a modifier. Agents observe the state.
class FiniteGameEnv : public EpisodicEnv {
 public:
  FiniteGameEnv(FiniteMarkovGame game, std::optional<FiniteModifier> modifier);

  int num_agents() const override { return game_.num_agents; }
  std::vector<int> ActionsPerObservation(int agent) const override;
  double Discount(int agent) const override { return game_.discounts[agent]; }
  void SampleEpisode(
      const PolicyProbs& probs, uint64_t seed,
      std::vector<std::vector<AgentTransition>>& out) const override;

  const FiniteMarkovGame& game() const { return game_; }
  const FiniteModifier* modifier() const {
    return modifier_ ? &*modifier_ : nullptr;
  }

 private:
  FiniteMarkovGame game_;
  std::optional<FiniteModifier> modifier_;
  int horizon_;
};

}  // namespace idesign

#endif  // IDESIGN_MARL_H_
