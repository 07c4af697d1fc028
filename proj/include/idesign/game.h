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

#ifndef IDESIGN_GAME_H_
#define IDESIGN_GAME_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idesign/incentive.h"
#include "idesign/rng.h"
#include "json.hpp"

namespace idesign {

inline constexpr double kTruncationTolerance = 1e-6;

// Stochastic policy of one agent: a softmax over per-observation logit rows.
// Rows may have different lengths (e.g. out-degree of a routing node). A logit
// of -infinity gives an action probability of exactly zero.
class TabularPolicy {
 public:
  TabularPolicy() = default;
  // Uniform policy.
  explicit TabularPolicy(std::vector<int> actions_per_obs);
  static TabularPolicy Deterministic(std::vector<int> actions_per_obs,
                                     std::span<const int> choices);

  int num_observations() const {
    return static_cast<int>(offsets_.size()) - 1;
  }
  int num_actions(int obs) const { return offsets_[obs + 1] - offsets_[obs]; }
  std::vector<int> actions_per_obs() const;

  std::span<const double> logits(int obs) const {
    return std::span<const double>(logits_).subspan(offsets_[obs],
                                                    num_actions(obs));
  }
  std::span<double> mutable_logits(int obs) {
    return std::span<double>(logits_).subspan(offsets_[obs], num_actions(obs));
  }
  std::span<const double> all_logits() const { return logits_; }

  std::vector<double> Probabilities(int obs) const;
  // Writes probabilities into `out` (size num_actions(obs)).
  void Probabilities(int obs, std::span<double> out) const;
  double Probability(int obs, int action) const;
  int Sample(int obs, Rng& rng) const;

  // Probabilities for every observation, concatenated in row order.
  std::vector<double> AllProbabilities() const;

 private:
  std::vector<int> offsets_ = {0};
  std::vector<double> logits_;
};

// Samples an index from a normalized distribution.
int SampleIndex(std::span<const double> probs, Rng& rng);

struct JointPolicy {
  std::vector<TabularPolicy> policies;
  // Mean-field mode: a single policy shared by every agent.
  bool shared = false;
  int num_agents = 0;

  static JointPolicy Independent(std::vector<TabularPolicy> p);
  static JointPolicy Shared(TabularPolicy p, int num_agents);

  const TabularPolicy& of(int agent) const {
    return policies[shared ? 0 : agent];
  }
  TabularPolicy& mutable_of(int agent) { return policies[shared ? 0 : agent]; }
};

// Finite Markov game with tabulated transitions and rewards. States are
// fully observed; agents condition on the state index.
struct FiniteMarkovGame {
  std::string name;
  int num_agents = 0;
  int num_states = 0;
  std::vector<int> num_actions;  // per agent, identical in every state
  int horizon = 0;               // 0 means unbounded and discounted
  int initial_state = 0;
  std::vector<double> discounts;  // per agent, in [0, 1)
  // transitions[(s * J + joint) * S + next]
  std::vector<double> transitions;
  // rewards[(agent * S + s) * J + joint]
  std::vector<double> rewards;
  // Optional stage potential phi[s * J + joint]. Together with
  // action-independent transitions it makes the game an exact potential
  // game with Phi^pi(s) = E[sum_t gamma^t phi].
  std::optional<std::vector<double>> stage_potential;

  int NumJointActions() const;
  int JointIndex(std::span<const int> actions) const;
  std::vector<int> DecodeJoint(int joint) const;
  double Reward(int agent, int state, int joint) const {
    return rewards[(static_cast<size_t>(agent) * num_states + state) *
                       NumJointActions() +
                   joint];
  }
  double TransitionProb(int state, int joint, int next) const {
    return transitions[(static_cast<size_t>(state) * NumJointActions() +
                        joint) *
                           num_states +
                       next];
  }
  int SampleNext(int state, int joint, Rng& rng) const;
  bool TransitionsActionIndependent() const;

  // Horizon used for sampled episodes: `horizon` if bounded, otherwise
  // ceil(ln(eps) / ln(gamma_max)).
  int EffectiveHorizon(double eps = kTruncationTolerance) const;
  TabularPolicy UniformPolicy(int agent) const;
  JointPolicy UniformJointPolicy() const;

  // Throws ConfigError describing the first violated invariant.
  void Validate() const;
  // Throws ConfigError if `policy` does not match the game's shape.
  void CheckPolicy(const JointPolicy& policy) const;

  nlohmann::json ToJson() const;
  static FiniteMarkovGame FromJson(const nlohmann::json& j);
};

struct Trajectory {
  struct Step {
    int state = 0;
    std::vector<int> actions;
    std::vector<double> rewards;  // per agent, modified when a modifier is set
    int next_state = 0;
  };
  std::vector<Step> steps;
  uint64_t seed = 0;

  // CSV with columns t, state, a0.., r0.., next_state.
  void WriteCsv(std::ostream& os) const;
};

struct ValueEstimate {
  std::vector<double> values;
  std::vector<double> std_errors;
  int n_episodes = 0;
};

// Samples one episode. Agent actions use per-agent streams hashed from
// (seed, agent); transitions use a separate environment stream.
Trajectory Rollout(const FiniteMarkovGame& game, const JointPolicy& policy,
                   const FiniteModifier* modifier, int horizon, uint64_t seed);

// Monte-Carlo estimate of each agent's discounted return from the initial
// state over `n_episodes` episodes of the effective horizon.
ValueEstimate EstimateValues(const FiniteMarkovGame& game,
                             const JointPolicy& policy,
                             const FiniteModifier* modifier, int n_episodes,
                             uint64_t seed,
                             double truncation = kTruncationTolerance);

// Exact values from the initial state by solving the policy-evaluation
// linear system (unbounded) or by backward recursion (bounded horizon).
std::vector<double> ExactValues(const FiniteMarkovGame& game,
                                const JointPolicy& policy,
                                const FiniteModifier* modifier = nullptr);

// Game on the augmented state (s, previous joint action or none) whose
// rewards are gamma_i * R_i + F. Agents still observe only s; use
// LiftPolicy to evaluate an ordinary policy in it.
FiniteMarkovGame ShapedGame(const FiniteMarkovGame& game,
                            const FiniteModifier& modifier);
JointPolicy LiftPolicy(const FiniteMarkovGame& game,
                       const JointPolicy& policy);

// Every deterministic stationary policy of `agent` (prod over states of the
// action count); throws UnsupportedError past `limit` policies.
std::vector<TabularPolicy> PurePolicies(const FiniteMarkovGame& game,
                                        int agent, int limit = 1 << 16);

// max over deviations d of v_i(d, pi_-i) - v_i(pi). Monte-Carlo version with
// common random numbers across candidates.
double BestResponseGap(const FiniteMarkovGame& game, const JointPolicy& policy,
                       const FiniteModifier* modifier, int agent,
                       std::span<const TabularPolicy> deviations,
                       int n_episodes, uint64_t seed);
double ExactBestResponseGap(const FiniteMarkovGame& game,
                            const JointPolicy& policy,
                            const FiniteModifier* modifier, int agent,
                            std::span<const TabularPolicy> deviations);
// Max over agents of the exact gap against all pure deviations.
double ExactNashGap(const FiniteMarkovGame& game, const JointPolicy& policy,
                    const FiniteModifier* modifier = nullptr);

// Exact value and potential oracles for potential-identity checks.
struct PotentialOracle {
  std::function<std::vector<double>(const JointPolicy&)> values;
  std::function<double(const JointPolicy&)> potential;
};

struct DeviationPair {
  JointPolicy base;
  JointPolicy deviated;  // differs from base only in `agent`
  int agent = 0;
};

// Oracle for a finite game with a stage potential. With an additive common
// modifier the potential becomes Phi + E[sum_t gamma^t Theta]. Throws
// UnsupportedError when the game has no exact potential.
PotentialOracle FinitePotentialOracle(const FiniteMarkovGame& game,
                                      const FiniteModifier* modifier);

// max over pairs of |(v_i(base) - v_i(dev)) - (Phi(base) - Phi(dev))|.
double VerifyPotential(const PotentialOracle& oracle,
                       std::span<const DeviationPair> pairs);

// Random unilateral deviation pairs with logits drawn in [-scale, scale].
std::vector<DeviationPair> RandomDeviationPairs(const FiniteMarkovGame& game,
                                                int count, uint64_t seed,
                                                double scale = 3.0);

// v_i(a) >= v_i(b) for all i, strictly for at least one (exact values).
bool ParetoDominates(const FiniteMarkovGame& game, const JointPolicy& a,
                     const JointPolicy& b,
                     const FiniteModifier* modifier = nullptr);

// All deterministic stationary profiles with exact Nash gap <= tol.
std::vector<JointPolicy> EnumeratePureNe(const FiniteMarkovGame& game,
                                         const FiniteModifier* modifier =
                                             nullptr,
                                         double tol = 1e-12);
std::vector<JointPolicy> EnumeratePureProfiles(const FiniteMarkovGame& game,
                                               int limit = 1 << 16);

// True iff `policy` is in `ne_set` and no profile in `profiles` Pareto
// dominates it.
bool IsPayoffDominant(const FiniteMarkovGame& game, const JointPolicy& policy,
                      std::span<const JointPolicy> ne_set,
                      std::span<const JointPolicy> profiles,
                      const FiniteModifier* modifier = nullptr);

bool SameProbabilities(const JointPolicy& a, const JointPolicy& b,
                       double tol = 1e-12);

}  // namespace idesign

#endif  // IDESIGN_GAME_H_
