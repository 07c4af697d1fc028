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

#include <cmath>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "idesign/errors.h"
#include "idesign/fixtures.h"
#include "idesign/game.h"
#include "idesign/marl.h"
#include "idesign/routing.h"

namespace idesign {
namespace {

TrainerConfig FastConfig() {
  TrainerConfig c;
  c.max_iterations = 3000;
  c.actor_learning_rate = 0.5;
  c.entropy_start = 0.01;
  c.seed = 3;
  return c;
}

TEST(TrainTest, BanditConvergesToDominantArm) {
  const FiniteGameEnv env(Bandit({1.0, 0.0}), std::nullopt);
  const TrainResult r = Train(env, FastConfig());
  EXPECT_TRUE(r.diagnostics.converged);
  EXPECT_GE(r.policy.of(0).Probability(0, 0), 0.99);
}

TEST(TrainTest, IdenticalInterestReachesOptimum) {
  const Payoff2x2 payoff = {{{1.0, 0.0}, {0.0, 0.4}}};
  const FiniteMarkovGame g = IdenticalInterestGame(payoff, 1);
  const TrainResult r = Train(FiniteGameEnv(g, std::nullopt), FastConfig());
  EXPECT_GE(r.policy.of(0).Probability(0, 0), 0.95);
  EXPECT_GE(r.policy.of(1).Probability(0, 0), 0.95);
  EXPECT_LE(ExactNashGap(g, r.policy), 1e-2);
}

TEST(TrainTest, BraessWithoutTollsUsesShortcut) {
  const RoutingEnv env(BraessNetwork(20));
  TrainerConfig c = FastConfig();
  c.max_iterations = 6000;
  const TrainResult r = Train(env, c);
  const FlowState f = env.PeriodFlow(r.policy);
  EXPECT_GE(f.per_edge_flow[env.network().EdgeIndex("3->2")], 0.9);
}

TEST(TrainTest, DeterministicGivenSeed) {
  const FiniteGameEnv env(RandomMarkovGame(3), std::nullopt);
  TrainerConfig c = FastConfig();
  c.max_iterations = 200;
  const TrainResult a = Train(env, c);
  const TrainResult b = Train(env, c);
  std::ostringstream sa, sb;
  a.diagnostics.WriteCsv(sa);
  b.diagnostics.WriteCsv(sb);
  EXPECT_EQ(sa.str(), sb.str());
  for (int i = 0; i < 2; ++i) {
    const auto la = a.policy.of(i).all_logits();
    const auto lb = b.policy.of(i).all_logits();
    EXPECT_TRUE(std::equal(la.begin(), la.end(), lb.begin()));
  }
}

TEST(TrainTest, InvalidConfigRejected) {
  TrainerConfig c;
  c.batch_episodes = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(HasConvergedTest, IdenticalSnapshots) {
  const std::vector<std::vector<double>> h(5, {0.2, 0.8});
  EXPECT_TRUE(HasConverged(h, 1e-12, 5));
}

TEST(HasConvergedTest, Oscillation) {
  std::vector<std::vector<double>> h;
  for (int k = 0; k < 6; ++k) {
    h.push_back(k % 2 ? std::vector<double>{0.25, 0.75}
                      : std::vector<double>{0.75, 0.25});
  }
  EXPECT_FALSE(HasConverged(h, 0.01, 6));
}

TEST(HasConvergedTest, ShortHistoryViolatesPrecondition) {
  const std::vector<std::vector<double>> h(3, {1.0});
  EXPECT_THROW(HasConverged(h, 0.1, 4), ConfigError);
}

TEST(SocialWelfareTest, Sums) {
  EXPECT_EQ(SocialWelfare(std::vector<double>{1, 2, 3}), 6.0);
  EXPECT_EQ(SocialWelfare(std::vector<double>{0, 0}), 0.0);
  ValueEstimate v;
  v.values = {1, 2, 3};
  EXPECT_EQ(SocialWelfare(v), 6.0);
}

TEST(SocialWelfareTest, BraessEvenFlowBeatsShortcutEquilibrium) {
  const RoutingEnv env(BraessNetwork(20));
  const auto paths = env.Paths();
  std::vector<int> shortcut, upper, lower;
  for (const auto& p : paths) {
    if (p.size() == 3) shortcut = p;
    else if (env.network().edges[p[0]].to == 2) upper = p;
    else lower = p;
  }
  std::vector<TabularPolicy> all, even;
  for (int i = 0; i < 20; ++i) {
    all.push_back(env.PathPolicy(shortcut));
    even.push_back(env.PathPolicy(i % 2 ? upper : lower));
  }
  const double w_eq =
      env.SocialWelfare(JointPolicy::Independent(std::move(all)));
  const double w_even =
      env.SocialWelfare(JointPolicy::Independent(std::move(even)));
  EXPECT_NEAR(w_eq, -2.0, 1e-12);
  EXPECT_NEAR(w_even, -1.5, 1e-12);
  EXPECT_GT(w_even, w_eq);
}

TEST(FiniteGameEnvTest, ShapingRewardsUseGammaScaling) {
  const FiniteMarkovGame g = StagHunt(0, 0.9);
  FiniteModifier m = MakeFiniteModifier(g, {{"s", 0, 1}},
                                        {ActionShareFeature(g, 0)}, 0,
                                        ModifierMode::kShaping);
  const FiniteGameEnv env(g, m);
  const PolicyProbs probs(g.UniformJointPolicy());
  std::vector<std::vector<AgentTransition>> out(2);
  env.SampleEpisode(probs, 1, out);
  ASSERT_FALSE(out[0].empty());
  for (const auto& tr : out[0]) {
    EXPECT_TRUE(tr.reward == 0.0 || std::abs(tr.reward - 0.9 * 3.0) < 1e-12 ||
                std::abs(tr.reward - 0.9 * 4.0) < 1e-12);
  }
}

}  // namespace
}  // namespace idesign
