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

#ifndef IDESIGN_PROBLEMS_H_
#define IDESIGN_PROBLEMS_H_

// Concrete design problems: tolls on a routing network, position bonuses in
// the crowd game, and modifiers on finite Markov games.

#include <optional>
#include <string>
#include <vector>

#include "idesign/crowd.h"
#include "idesign/designer.h"
#include "idesign/game.h"
#include "idesign/marl.h"
#include "idesign/routing.h"

namespace idesign {

struct TollSpec {
  std::vector<int> edges;  // empty: the network's toll candidate set
  int order = 5;
  double lo = -2.0;
  double hi = 2.0;
};

class RoutingDesignProblem : public DesignProblem {
 public:
  RoutingDesignProblem(RoutingNetwork net, const TollSpec& tolls,
                       TrainerConfig trainer, int periods = 1);

  std::string name() const override { return "routing:" + net_.name; }
  const ModifierParams& modifier_template() const override { return tmpl_; }
  // Trajectory reward is the flow imbalance R_ID summed over `periods`
  // identical periods; welfare is minus the total latency.
  Outcome Evaluate(const ModifierParams& w, uint64_t seed) const override;
  void WriteArtifacts(const ModifierParams& w, uint64_t seed,
                      const std::string& dir) const override;

  // Trained policy and environment for `w`.
  struct Trained {
    RoutingEnv env;
    TrainResult result;
  };
  Trained Train(const ModifierParams& w, uint64_t seed) const;
  const RoutingNetwork& network() const { return net_; }
  ModifierParams ZeroToll() const;

 private:
  RoutingNetwork net_;
  ModifierParams tmpl_;
  TrainerConfig trainer_;
  int periods_;
};

class CrowdDesignProblem : public DesignProblem {
 public:
  CrowdDesignProblem(CrowdWorld world, TargetSchedule targets, int order,
                     double lo, double hi, CrowdTrainerConfig trainer,
                     int eval_episodes = 8);

  std::string name() const override {
    return world_.horizon == 1 ? "crowd:oneshot" : "crowd:dynamic";
  }
  const ModifierParams& modifier_template() const override { return tmpl_; }
  // Trajectory reward is -sum_t KL averaged over evaluation episodes.
  Outcome Evaluate(const ModifierParams& w, uint64_t seed) const override;
  void WriteArtifacts(const ModifierParams& w, uint64_t seed,
                      const std::string& dir) const override;

  CrowdEvaluation EvaluateDetailed(const ModifierParams& w,
                                   uint64_t seed) const;
  ModifierParams Zero() const;
  const CrowdWorld& world() const { return world_; }
  const TargetSchedule& targets() const { return targets_; }

 private:
  CrowdWorld world_;
  TargetSchedule targets_;
  ModifierParams tmpl_;
  CrowdTrainerConfig trainer_;
  int eval_episodes_;
};

// Modifier on a finite game. The designer scores the converged policy by its
// exact welfare in the unmodified game; the gap is measured there too.
class FiniteDesignProblem : public DesignProblem {
 public:
  FiniteDesignProblem(FiniteMarkovGame game, FiniteModifier modifier,
                      TrainerConfig trainer,
                      std::optional<JointPolicy> initial_policy = {});

  std::string name() const override { return "finite:" + game_.name; }
  const ModifierParams& modifier_template() const override {
    return modifier_.params;
  }
  Outcome Evaluate(const ModifierParams& w, uint64_t seed) const override;

  TrainResult Train(const ModifierParams& w, uint64_t seed) const;
  const FiniteMarkovGame& game() const { return game_; }
  const FiniteModifier& modifier() const { return modifier_; }

 private:
  FiniteMarkovGame game_;
  FiniteModifier modifier_;
  TrainerConfig trainer_;
  std::optional<JointPolicy> initial_policy_;
};

// Design loop in which agents receive gamma R + F with F the shaping term of
// the modifier, so the equilibria of the original game are kept and only the
// one the learners reach is chosen. Uses the welfare objective.
RunReport RunPreservingNe(const FiniteMarkovGame& game,
                          FiniteModifier modifier, const TrainerConfig& trainer,
                          std::optional<JointPolicy> initial_policy,
                          const BoConfig& bo, int repeats, uint64_t seed);

// Joint policy in which every agent plays `action` in every state with
// probability p and spreads the rest uniformly.
JointPolicy BiasedPolicy(const FiniteMarkovGame& game, int action, double p);

}  // namespace idesign

#endif  // IDESIGN_PROBLEMS_H_
