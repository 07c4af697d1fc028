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

#include "idesign/problems.h"

#include <cmath>
#include <fstream>

#include "idesign/errors.h"

namespace idesign {
namespace {

std::ofstream OpenOut(const std::string& dir, const std::string& name) {
  std::ofstream out(dir + "/" + name);
  if (!out) throw ConfigError("cannot write " + dir + "/" + name);
  return out;
}

}  // namespace

RoutingDesignProblem::RoutingDesignProblem(RoutingNetwork net,
                                           const TollSpec& tolls,
                                           TrainerConfig trainer, int periods)
    : net_(std::move(net)), trainer_(trainer), periods_(periods) {
  if (!tolls.edges.empty()) net_.toll_edges = tolls.edges;
  net_.Validate();
  if (periods_ < 1) throw ConfigError("routing.periods: must be >= 1");
  if (tolls.order < 0) throw ConfigError("modifier.order: must be >= 0");
  if (!(tolls.lo <= 0.0 && tolls.hi >= 0.0)) {
    throw ConfigError("modifier.bounds: must contain 0");
  }
  tmpl_ = MakeTollParams(net_, tolls.order, tolls.lo, tolls.hi);
  trainer_.Validate();
}

ModifierParams RoutingDesignProblem::ZeroToll() const {
  return tmpl_.WithCoefficients(std::vector<double>(tmpl_.dimension(), 0.0));
}

RoutingDesignProblem::Trained RoutingDesignProblem::Train(
    const ModifierParams& w, uint64_t seed) const {
  RoutingEnv env(net_, w);
  TrainerConfig cfg = trainer_;
  cfg.seed = seed;
  TrainResult r = idesign::Train(env, cfg);
  return {std::move(env), std::move(r)};
}

Outcome RoutingDesignProblem::Evaluate(const ModifierParams& w,
                                       uint64_t seed) const {
  const Trained t = Train(w, seed);
  const FlowState flow = t.env.PeriodFlow(t.result.policy);
  Outcome o;
  o.trajectory_reward =
      DesignerRewardFlow(std::vector<FlowState>(periods_, flow),
                         net_.monitored_edges);
  o.welfare = periods_ * t.env.SocialWelfare(t.result.policy);
  o.incentive = periods_ * t.env.CumulativeIncentive(t.result.policy);
  o.converged = t.result.diagnostics.converged;
  o.iterations = t.result.diagnostics.iterations;
  o.gap = t.env.BestResponseGap(t.result.policy);
  return o;
}

void RoutingDesignProblem::WriteArtifacts(const ModifierParams& w,
                                          uint64_t seed,
                                          const std::string& dir) const {
  const Trained t = Train(w, seed);
  FlowState flow = t.env.PeriodFlow(t.result.policy);
  std::vector<FlowState> flows;
  for (int p = 0; p < periods_; ++p) {
    flow.time = p + 1;
    flows.push_back(flow);
  }
  auto out = OpenOut(dir, "flows.csv");
  t.env.WriteFlowCsv(flows, out);
  auto diag = OpenOut(dir, "training.csv");
  t.result.diagnostics.WriteCsv(diag);
}

CrowdDesignProblem::CrowdDesignProblem(CrowdWorld world,
                                       TargetSchedule targets, int order,
                                       double lo, double hi,
                                       CrowdTrainerConfig trainer,
                                       int eval_episodes)
    : world_(std::move(world)),
      targets_(std::move(targets)),
      tmpl_(MakeCrowdParams(order, lo, hi)),
      trainer_(trainer),
      eval_episodes_(eval_episodes) {
  world_.Validate();
  targets_.Validate(world_);
  trainer_.Validate();
  if (eval_episodes_ < 1) throw ConfigError("crowd.eval_episodes: must be >= 1");
  if (!(lo <= 0.0 && hi >= 0.0)) throw ConfigError("modifier.bounds: must contain 0");
}

ModifierParams CrowdDesignProblem::Zero() const {
  return tmpl_.WithCoefficients(std::vector<double>(tmpl_.dimension(), 0.0));
}

CrowdEvaluation CrowdDesignProblem::EvaluateDetailed(const ModifierParams& w,
                                                     uint64_t seed) const {
  CrowdTrainerConfig cfg = trainer_;
  cfg.seed = seed;
  const CrowdTrainResult r = TrainCrowd(world_, &targets_, &w, cfg);
  return EvaluateCrowd(world_, r.policy, targets_, &w, eval_episodes_,
                       StreamSeed(seed, {0xe7}));
}

Outcome CrowdDesignProblem::Evaluate(const ModifierParams& w,
                                     uint64_t seed) const {
  CrowdTrainerConfig cfg = trainer_;
  cfg.seed = seed;
  const CrowdTrainResult r = TrainCrowd(world_, &targets_, &w, cfg);
  const CrowdEvaluation ev = EvaluateCrowd(world_, r.policy, targets_, &w,
                                           eval_episodes_,
                                           StreamSeed(seed, {0xe7}));
  Outcome o;
  o.trajectory_reward = -ev.mean_kl;
  o.welfare = ev.welfare;
  o.incentive = ev.incentive;
  o.converged = r.converged;
  o.iterations = r.iterations;
  return o;
}

void CrowdDesignProblem::WriteArtifacts(const ModifierParams& w, uint64_t seed,
                                        const std::string& dir) const {
  const CrowdEvaluation ev = EvaluateDetailed(w, seed);
  auto out = OpenOut(dir, "density.csv");
  WriteDensityCsv(ev.densities, out);
  auto tgt = OpenOut(dir, "target.csv");
  WriteDensityCsv(targets_.targets, tgt);
}

FiniteDesignProblem::FiniteDesignProblem(FiniteMarkovGame game,
                                         FiniteModifier modifier,
                                         TrainerConfig trainer,
                                         std::optional<JointPolicy> initial)
    : game_(std::move(game)),
      modifier_(std::move(modifier)),
      trainer_(trainer),
      initial_policy_(std::move(initial)) {
  game_.Validate();
  trainer_.Validate();
  if (initial_policy_) game_.CheckPolicy(*initial_policy_);
}

TrainResult FiniteDesignProblem::Train(const ModifierParams& w,
                                       uint64_t seed) const {
  FiniteGameEnv env(game_, modifier_.WithParams(w));
  TrainerConfig cfg = trainer_;
  cfg.seed = seed;
  TrainOptions opts;
  opts.initial_policy = initial_policy_;
  return idesign::Train(env, cfg, opts);
}

Outcome FiniteDesignProblem::Evaluate(const ModifierParams& w,
                                      uint64_t seed) const {
  const TrainResult r = Train(w, seed);
  const std::vector<double> v = ExactValues(game_, r.policy);
  Outcome o;
  o.welfare = SocialWelfare(v);
  o.converged = r.diagnostics.converged;
  o.iterations = r.diagnostics.iterations;
  o.gap = ExactNashGap(game_, r.policy);
  // Expected cumulative incentive from sampled episodes.
  const FiniteModifier mod = modifier_.WithParams(w);
  const int episodes = 32;
  const int horizon = game_.EffectiveHorizon();
  for (int e = 0; e < episodes; ++e) {
    const Trajectory traj = Rollout(game_, r.policy, &mod, horizon,
                                    StreamSeed(seed, {0x51, static_cast<uint64_t>(e)}));
    o.incentive += CumulativeIncentive(traj, game_, mod).total / episodes;
  }
  return o;
}

RunReport RunPreservingNe(const FiniteMarkovGame& game,
                          FiniteModifier modifier, const TrainerConfig& trainer,
                          std::optional<JointPolicy> initial_policy,
                          const BoConfig& bo, int repeats, uint64_t seed) {
  modifier.mode = ModifierMode::kShaping;
  const FiniteDesignProblem problem(game, std::move(modifier), trainer,
                                    std::move(initial_policy));
  ObjectiveSpec obj;
  obj.kind = ObjectiveKind::kWelfare;
  obj.repeats = repeats;
  return Run(problem, obj, bo, seed);
}

JointPolicy BiasedPolicy(const FiniteMarkovGame& game, int action, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("biased policy: p must be in (0, 1)");
  std::vector<TabularPolicy> ps;
  for (int i = 0; i < game.num_agents; ++i) {
    const int n = game.num_actions[i];
    TabularPolicy pol(std::vector<int>(game.num_states, n));
    const double rest = (1.0 - p) / (n - 1);
    for (int s = 0; s < game.num_states; ++s) {
      auto l = pol.mutable_logits(s);
      for (int a = 0; a < n; ++a) l[a] = std::log(a == action ? p : rest);
    }
    ps.push_back(std::move(pol));
  }
  return JointPolicy::Independent(std::move(ps));
}

}  // namespace idesign
