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

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "idesign/designer.h"
#include "idesign/errors.h"
#include "idesign/fixtures.h"
#include "idesign/game.h"
#include "idesign/problems.h"
#include "idesign/rng.h"

namespace idesign {
namespace {

// Quadratic response with seed noise; fails for w0 > 0.9.
class ToyProblem : public DesignProblem {
 public:
  ToyProblem() : tmpl_({{"a", 0.0, 1.0}}, 1, -1.0, 1.0) {}
  std::string name() const override { return "toy"; }
  const ModifierParams& modifier_template() const override { return tmpl_; }
  Outcome Evaluate(const ModifierParams& w, uint64_t seed) const override {
    const double a = w.coefficient(0, 0), b = w.coefficient(0, 1);
    if (a > 0.9) throw EvaluationError("toy: out of range");
    Rng rng = MakeRng(seed, {});
    Outcome o;
    o.trajectory_reward =
        -(a - 0.3) * (a - 0.3) - (b + 0.2) * (b + 0.2) + 1e-3 * Uniform01(rng);
    o.welfare = o.trajectory_reward + 1.0;
    o.incentive = a;
    o.converged = true;
    o.iterations = 10;
    return o;
  }

 private:
  ModifierParams tmpl_;
};

ModifierParams At(const ToyProblem& p, double a, double b) {
  return p.modifier_template().WithCoefficients(std::vector<double>{a, b});
}

TEST(EvaluateJTest, WelfareObjectiveAveragesRepeats) {
  const ToyProblem p;
  ObjectiveSpec obj;
  obj.kind = ObjectiveKind::kWelfare;
  obj.repeats = 3;
  const Evaluation e = EvaluateJ(p, At(p, 0.0, 0.0), obj, 5);
  ASSERT_EQ(e.repeat_J.size(), 3u);
  double mean = 0.0;
  for (double j : e.repeat_J) mean += j / 3.0;
  EXPECT_DOUBLE_EQ(e.J, mean);
  EXPECT_NEAR(e.J, 1.0 - 0.09 - 0.04, 2e-3);
  EXPECT_EQ(e.converged_repeats, 3);
  EXPECT_TRUE(e.budget_balanced);
}

TEST(EvaluateJTest, LambdaPenalizesIncentive) {
  const ToyProblem p;
  ObjectiveSpec obj;
  obj.repeats = 2;
  const Evaluation base = EvaluateJ(p, At(p, -0.5, 0.0), obj, 1);
  obj.lambda = 1.0;
  const Evaluation pen = EvaluateJ(p, At(p, -0.5, 0.0), obj, 1);
  EXPECT_NEAR(pen.J - base.J, 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(pen.incentive, -0.5);
  EXPECT_TRUE(pen.budget_balanced);
  const Evaluation pos = EvaluateJ(p, At(p, 0.5, 0.0), obj, 1);
  EXPECT_FALSE(pos.budget_balanced);
}

TEST(EvaluateJTest, FailureGivesNegativeInfinity) {
  const ToyProblem p;
  const Evaluation e = EvaluateJ(p, At(p, 0.95, 0.0), {}, 1);
  EXPECT_TRUE(e.failed);
  EXPECT_EQ(e.J, -INFINITY);
  EXPECT_NE(e.error.find("out of range"), std::string::npos);
}

TEST(EvaluateJTest, ThreadedMatchesSerial) {
  const ToyProblem p;
  ObjectiveSpec obj;
  obj.repeats = 6;
  const Evaluation serial = EvaluateJ(p, At(p, 0.1, 0.2), obj, 9);
  SetMaxThreads(3);
  const Evaluation threaded = EvaluateJ(p, At(p, 0.1, 0.2), obj, 9);
  SetMaxThreads(1);
  EXPECT_EQ(serial.repeat_J, threaded.repeat_J);
  EXPECT_EQ(serial.J, threaded.J);
}

TEST(EvaluateJTest, InvalidObjectiveRejected) {
  const ToyProblem p;
  ObjectiveSpec obj;
  obj.repeats = 0;
  EXPECT_THROW(EvaluateJ(p, At(p, 0, 0), obj, 1), ConfigError);
}

TEST(RunTest, SingleStepBudget) {
  const ToyProblem p;
  BoConfig bo;
  bo.K = 1;
  const RunReport r = idesign::Run(p, {}, bo, 4);
  EXPECT_EQ(r.evaluations.size(), 1u);
  EXPECT_EQ(r.dataset.size(), 1);
  EXPECT_EQ(r.best_so_far.size(), 1u);
}

TEST(RunTest, BestSoFarMonotoneAndImproves) {
  const ToyProblem p;
  BoConfig bo;
  bo.K = 15;
  const RunReport r = idesign::Run(p, {}, bo, 2);
  ASSERT_EQ(r.best_so_far.size(), 15u);
  for (size_t k = 1; k < r.best_so_far.size(); ++k) {
    EXPECT_GE(r.best_so_far[k], r.best_so_far[k - 1]);
  }
  EXPECT_GT(r.best().J, -0.05);
  EXPECT_NEAR(r.best().w[0], 0.3, 0.2);
  EXPECT_NEAR(r.best().w[1], -0.2, 0.2);
}

TEST(RunTest, SameSeedGivesIdenticalReport) {
  const ToyProblem p;
  BoConfig bo;
  bo.K = 8;
  ObjectiveSpec obj;
  obj.repeats = 2;
  const RunReport a = idesign::Run(p, obj, bo, 11);
  const RunReport b = idesign::Run(p, obj, bo, 11);
  EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump());
  std::ostringstream sa, sb;
  a.WriteEvaluationsCsv(sa);
  b.WriteEvaluationsCsv(sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(RunTest, FailedEvaluationsNeverBest) {
  const ToyProblem p;
  BoConfig bo;
  bo.K = 20;
  const RunReport r = idesign::Run(p, {}, bo, 3);
  for (const Evaluation& e : r.evaluations) {
    if (e.failed) {
      EXPECT_EQ(e.J, -INFINITY);
    }
  }
  EXPECT_FALSE(r.best().failed);
  EXPECT_LE(r.best().w[0], 0.9);
}

TEST(MedianTest, OddAndEven) {
  EXPECT_EQ(Median({3, 1, 2}), 2);
  EXPECT_EQ(Median({4, 1, 2, 3}), 2.5);
}

TEST(ContinuityProbeTest, SmoothProblemNotFlagged) {
  const ToyProblem p;
  ObjectiveSpec obj;
  obj.repeats = 1;
  const ContinuityReport c = ContinuityProbe(p, obj, 5, {1e-1, 1e-2}, 1);
  EXPECT_EQ(c.max_ratio.size(), 2u);
  EXPECT_FALSE(c.flagged);
}

TrainerConfig FiniteTrainer() {
  TrainerConfig c;
  c.max_iterations = 3000;
  c.actor_learning_rate = 0.5;
  c.entropy_start = 0.01;
  return c;
}

FiniteModifier StagShaping(const FiniteMarkovGame& game) {
  FiniteModifier m = MakeFiniteModifier(game, {{"stag_share", 0.0, 1.0}},
                                        {ActionShareFeature(game, 0)}, 1,
                                        ModifierMode::kShaping);
  const int d = m.params.dimension();
  m.params.set_bounds(std::vector<double>(d, -12.0), std::vector<double>(d, 12.0));
  return m;
}

TEST(FiniteDesignTest, ZeroShapingMatchesUnmodifiedTraining) {
  const FiniteMarkovGame game = StagHuntWithMemory(0.9);
  const FiniteModifier m = StagShaping(game);
  const JointPolicy init = BiasedPolicy(game, 1, 0.7);
  const FiniteDesignProblem p(game, m, FiniteTrainer(), init);
  const Outcome o = p.Evaluate(m.params, 4);
  // Hare-biased learners settle on the hare equilibrium.
  EXPECT_LE(o.gap, 5e-2);
  EXPECT_NEAR(o.welfare, 60.0, 1.0);
  EXPECT_EQ(o.incentive, 0.0);
}

TEST(FiniteDesignTest, PreservingDesignReachesStagEquilibrium) {
  const FiniteMarkovGame game = StagHuntWithMemory(0.9);
  BoConfig bo;
  bo.K = 20;
  const RunReport r = RunPreservingNe(game, StagShaping(game), FiniteTrainer(),
                                      BiasedPolicy(game, 1, 0.7), bo, 1, 3);
  const Evaluation& best = r.best();
  EXPECT_GT(best.J, 75.0);
  EXPECT_LE(best.gap, 5e-2);
}

TEST(RoutingDesignTest, ZeroTollBraessHasImbalance) {
  TrainerConfig c = FiniteTrainer();
  c.max_iterations = 6000;
  const RoutingDesignProblem p(BraessNetwork(20), TollSpec{}, c);
  ObjectiveSpec obj;
  obj.repeats = 1;
  const Evaluation e = EvaluateJ(p, p.ZeroToll(), obj, 1);
  EXPECT_FALSE(e.failed);
  EXPECT_LT(e.J, -0.5);
  EXPECT_EQ(e.incentive, 0.0);
}

}  // namespace
}  // namespace idesign
