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
#include <optional>
#include <vector>

#include "gtest/gtest.h"
#include "idesign/errors.h"
#include "idesign/fixtures.h"
#include "idesign/game.h"
#include "idesign/incentive.h"
#include "idesign/rng.h"

namespace idesign {
namespace {

FiniteModifier Constant(const FiniteMarkovGame& g, double c, ModifierMode mode) {
  FiniteModifier m = MakeFiniteModifier(
      g, {{"one", 0.0, 1.0}},
      {std::vector<double>(g.num_states * g.NumJointActions(), 1.0)}, 0, mode);
  m.params.set_coefficients(std::vector<double>{c});
  return m;
}

TEST(ModifierParamsTest, DimensionIsFeaturesTimesOrderPlusOne) {
  const ModifierParams w({{"a", 0, 1}, {"b", 0, 1}, {"c", 0, 1}}, 4);
  EXPECT_EQ(w.dimension(), 15);
  EXPECT_TRUE(w.IsZero());
}

TEST(ModifierParamsTest, ZeroCoefficientsGiveZero) {
  const ModifierParams w({{"a", 0, 5}}, 3);
  EXPECT_EQ(w.Eval(std::vector<double>{2.7}), 0.0);
}

TEST(ModifierParamsTest, PolynomialEvaluation) {
  ModifierParams w({{"phi", 0, 5}}, 2);
  w.set_coefficients(std::vector<double>{1.0, 0.0, 3.0});
  EXPECT_DOUBLE_EQ(w.Eval(std::vector<double>{2.0}), 13.0);
}

TEST(ModifierParamsTest, OrderFiveTollOnEdgeFlow) {
  ModifierParams w({{"3->2", 0, 1}}, 5);
  w.set_coefficients(std::vector<double>{0, -1, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(w.Eval(std::vector<double>{0.5}), -0.5);
}

TEST(ModifierParamsTest, CoefficientsOutsideBoxRejected) {
  ModifierParams w({{"a", 0, 1}}, 1, -1.0, 1.0);
  EXPECT_THROW(w.set_coefficients(std::vector<double>{0.0, 1.5}), ConfigError);
  EXPECT_THROW(w.set_coefficients(std::vector<double>{0.0}), ConfigError);
}

TEST(ModifierParamsTest, FeatureOutsideRangeNamesFeature) {
  ModifierParams w({{"speed", 0, 1}}, 1);
  try {
    w.Eval(std::vector<double>{1.5});
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("speed"), std::string::npos);
  }
}

TEST(ModifierParamsTest, JsonRoundTrip) {
  ModifierParams w({{"a", 0, 2}, {"b", -1, 1}}, 2, -3.0, 3.0);
  w.set_coefficients(std::vector<double>{1, 2, 3, -1, -2, -3});
  EXPECT_EQ(ModifierParams::FromJson(w.ToJson()), w);
}

TEST(ModifiedRewardTest, ZeroModifierIsBitwiseIdentity) {
  const FiniteMarkovGame g = RandomMarkovGame(4);
  const FiniteModifier m = Constant(g, 0.0, ModifierMode::kAdditive);
  EXPECT_EQ(ModifiedReward(g, m).rewards, g.rewards);
}

TEST(ModifiedRewardTest, ConstantShiftsEveryReward) {
  const FiniteMarkovGame g = RandomMarkovGame(4);
  const FiniteModifier m = Constant(g, 0.75, ModifierMode::kAdditive);
  const FiniteMarkovGame h = ModifiedReward(g, m);
  for (size_t k = 0; k < g.rewards.size(); ++k) {
    EXPECT_DOUBLE_EQ(h.rewards[k], g.rewards[k] + 0.75);
  }
  EXPECT_EQ(g.rewards, RandomMarkovGame(4).rewards);
}

TEST(ModifiedRewardTest, ShapingModifierRejected) {
  const FiniteMarkovGame g = StagHunt();
  EXPECT_THROW(ModifiedReward(g, Constant(g, 1.0, ModifierMode::kShaping)),
               ConfigError);
}

TEST(CumulativeIncentiveTest, ZeroModifier) {
  const FiniteMarkovGame g = ConstantGame(1.0, 3, 4, 0.9);
  const FiniteModifier m = Constant(g, 0.0, ModifierMode::kAdditive);
  const Trajectory t = Rollout(g, g.UniformJointPolicy(), &m, 4, 1);
  EXPECT_EQ(CumulativeIncentive(t, g, m).total, 0.0);
}

TEST(CumulativeIncentiveTest, ConstantNegativeCountsAgentSteps) {
  const FiniteMarkovGame g = ConstantGame(1.0, 3, 4, 0.9);
  const FiniteModifier m = Constant(g, -1.0, ModifierMode::kAdditive);
  const Trajectory t = Rollout(g, g.UniformJointPolicy(), &m, 4, 1);
  const IncentiveLedger l = CumulativeIncentive(t, g, m);
  EXPECT_DOUBLE_EQ(l.total, -12.0);
  EXPECT_EQ(l.per_step_payments.size(), 4u);
  EXPECT_TRUE(IsWeaklyBudgetBalanced(l));
}

TEST(CumulativeIncentiveTest, MatchesStepwiseRecomputation) {
  const FiniteMarkovGame g = RandomMarkovGame(12, 3, 2, 0.7);
  FiniteModifier m = MakeFiniteModifier(g, {{"share", 0, 1}},
                                        {ActionShareFeature(g, 0)}, 2,
                                        ModifierMode::kAdditive);
  m.params.set_coefficients(std::vector<double>{0.2, -1.0, 0.7});
  const Trajectory t = Rollout(g, g.UniformJointPolicy(), &m, 30, 4);
  double expect = 0.0;
  for (const auto& st : t.steps) {
    double share = 0.0;
    for (int a : st.actions) share += a == 0 ? 0.5 : 0.0;
    expect += 2.0 * (0.2 - share + 0.7 * share * share);
  }
  EXPECT_NEAR(CumulativeIncentive(t, g, m).total, expect, 1e-12);
}

TEST(BudgetBalanceTest, Boundaries) {
  IncentiveLedger a;
  a.Add(-3.2);
  EXPECT_TRUE(IsWeaklyBudgetBalanced(a));
  IncentiveLedger b;
  EXPECT_TRUE(IsWeaklyBudgetBalanced(b));
  IncentiveLedger c;
  c.Add(0.01);
  EXPECT_FALSE(IsWeaklyBudgetBalanced(c));
}

TEST(ShapingTermTest, ConstantThetaInteriorStep) {
  EXPECT_DOUBLE_EQ(ShapingTerm(0.9, 2.0, 2.0), 2.0 * (0.9 - 1.0));
}

TEST(ShapingTermTest, Arithmetic) {
  EXPECT_NEAR(ShapingTerm(0.9, 1.0, 2.0), 0.8, 1e-15);
  EXPECT_DOUBLE_EQ(ShapingTerm(0.9, std::nullopt, 2.0), 1.8);
}

TEST(ShapingTermTest, DiscountedSumTelescopes) {
  Rng rng = MakeRng(1, {});
  ModifierParams w({{"x", 0, 1}}, 3);
  w.set_coefficients(std::vector<double>{0.5, -2.0, 1.0, 3.0});
  const double gamma = 0.93;
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 1 + trial;
    double sum = 0.0, disc = 1.0, last = 0.0;
    std::optional<std::vector<double>> prev;
    for (int t = 0; t < T; ++t) {
      const std::vector<double> curr = {Uniform01(rng)};
      std::optional<std::span<const double>> ps;
      if (prev) ps = std::span<const double>(*prev);
      sum += disc * ShapingTerm(w, gamma, ps, curr);
      disc *= gamma;
      prev = curr;
      last = w.Eval(curr);
    }
    EXPECT_NEAR(sum, disc * last, 1e-9);
  }
}

TEST(ShapingTest, ZeroModifierGivesGammaScaledRewards) {
  const FiniteMarkovGame g = StagHuntWithMemory(0.9);
  const FiniteModifier m = Constant(g, 0.0, ModifierMode::kShaping);
  const Trajectory a = Rollout(g, g.UniformJointPolicy(), nullptr, 20, 3);
  const Trajectory b = Rollout(g, g.UniformJointPolicy(), &m, 20, 3);
  for (size_t t = 0; t < a.steps.size(); ++t) {
    for (int i = 0; i < 2; ++i) {
      EXPECT_DOUBLE_EQ(b.steps[t].rewards[i], 0.9 * a.steps[t].rewards[i]);
    }
  }
}

}  // namespace
}  // namespace idesign
