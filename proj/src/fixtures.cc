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

#include "idesign/fixtures.h"

#include "idesign/errors.h"
#include "idesign/rng.h"

namespace idesign {
namespace {

// Single-state two-agent game shell with self-loop transitions.
FiniteMarkovGame SingleState2x2(const std::string& name, int horizon,
                                double gamma) {
  FiniteMarkovGame g;
  g.name = name;
  g.num_agents = 2;
  g.num_states = 1;
  g.num_actions = {2, 2};
  g.horizon = horizon;
  g.discounts = {gamma, gamma};
  g.transitions.assign(4, 1.0);
  g.rewards.assign(8, 0.0);
  return g;
}

}  // namespace

FiniteMarkovGame MatrixGame(const std::string& name, const Payoff2x2& r0,
                            const Payoff2x2& r1, int horizon, double gamma) {
  FiniteMarkovGame g = SingleState2x2(name, horizon, gamma);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      g.rewards[a * 2 + b] = r0[a][b];
      g.rewards[4 + a * 2 + b] = r1[a][b];
    }
  }
  g.Validate();
  return g;
}

FiniteMarkovGame IdenticalInterestGame(const Payoff2x2& payoff, int horizon,
                                       double gamma) {
  FiniteMarkovGame g =
      MatrixGame("identical-interest", payoff, payoff, horizon, gamma);
  g.stage_potential = std::vector<double>(4);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) (*g.stage_potential)[a * 2 + b] = payoff[a][b];
  }
  return g;
}

FiniteMarkovGame PotentialMatrixGame(const std::string& name,
                                     const Payoff2x2& phi,
                                     std::array<double, 2> h0,
                                     std::array<double, 2> h1, int horizon,
                                     double gamma) {
  Payoff2x2 r0, r1;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      r0[a][b] = phi[a][b] + h0[b];
      r1[a][b] = phi[a][b] + h1[a];
    }
  }
  FiniteMarkovGame g = MatrixGame(name, r0, r1, horizon, gamma);
  g.stage_potential = std::vector<double>(4);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) (*g.stage_potential)[a * 2 + b] = phi[a][b];
  }
  return g;
}

FiniteMarkovGame RandomPotentialMatrixGame(uint64_t seed, int horizon,
                                           double gamma) {
  Rng rng = MakeRng(seed, {0x2b2});
  Payoff2x2 phi;
  for (auto& row : phi) {
    for (double& x : row) x = Uniform01(rng);
  }
  std::array<double, 2> h0{Uniform01(rng), Uniform01(rng)};
  std::array<double, 2> h1{Uniform01(rng), Uniform01(rng)};
  return PotentialMatrixGame("random-potential-2x2", phi, h0, h1, horizon,
                             gamma);
}

FiniteMarkovGame StagHunt(int horizon, double gamma) {
  const Payoff2x2 r0 = {{{kStagHuntSS, kStagHuntSH}, {kStagHuntHS, kStagHuntHH}}};
  const Payoff2x2 r1 = {{{kStagHuntSS, kStagHuntHS}, {kStagHuntSH, kStagHuntHH}}};
  FiniteMarkovGame g = MatrixGame("stag-hunt", r0, r1, horizon, gamma);
  // Symmetric 2x2 potential: phi(S,S)=R(S,S)-R(H,S), phi(H,H)=R(H,H)-R(S,H).
  g.stage_potential = std::vector<double>{kStagHuntSS - kStagHuntHS, 0.0, 0.0,
                                          kStagHuntHH - kStagHuntSH};
  return g;
}

FiniteMarkovGame StagHuntWithMemory(double gamma) {
  const FiniteMarkovGame base = StagHunt(0, gamma);
  FiniteMarkovGame g;
  g.name = "stag-hunt-memory";
  g.num_agents = 2;
  g.num_states = 5;
  g.num_actions = {2, 2};
  g.horizon = 0;
  g.discounts = {gamma, gamma};
  g.transitions.assign(5 * 4 * 5, 0.0);
  g.rewards.assign(2 * 5 * 4, 0.0);
  g.stage_potential = std::vector<double>(5 * 4);
  for (int s = 0; s < 5; ++s) {
    for (int j = 0; j < 4; ++j) {
      g.transitions[(s * 4 + j) * 5 + 1 + j] = 1.0;
      for (int i = 0; i < 2; ++i) g.rewards[(i * 5 + s) * 4 + j] = base.Reward(i, 0, j);
      (*g.stage_potential)[s * 4 + j] = (*base.stage_potential)[j];
    }
  }
  g.Validate();
  return g;
}

FiniteMarkovGame PrisonersDilemma(int horizon, double gamma) {
  const Payoff2x2 r0 = {{{3.0, 0.0}, {5.0, 1.0}}};
  const Payoff2x2 r1 = {{{3.0, 5.0}, {0.0, 1.0}}};
  FiniteMarkovGame g = MatrixGame("prisoners-dilemma", r0, r1, horizon, gamma);
  g.stage_potential = std::vector<double>{3.0 - 5.0, 0.0, 0.0, 1.0 - 0.0};
  return g;
}

FiniteMarkovGame RandomMarkovPotentialGame(uint64_t seed, int num_states,
                                           double gamma) {
  Rng rng = MakeRng(seed, {0x3a9});
  FiniteMarkovGame g;
  g.name = "random-markov-potential";
  g.num_agents = 2;
  g.num_states = num_states;
  g.num_actions = {2, 2};
  g.discounts = {gamma, gamma};
  const int S = num_states, J = 4;
  g.transitions.assign(static_cast<size_t>(S) * J * S, 0.0);
  for (int s = 0; s < S; ++s) {
    std::vector<double> row(S);
    double z = 0.0;
    for (double& p : row) z += (p = 0.1 + Uniform01(rng));
    for (int j = 0; j < J; ++j) {
      for (int n = 0; n < S; ++n) g.transitions[(s * J + j) * S + n] = row[n] / z;
    }
  }
  std::vector<double> phi(static_cast<size_t>(S) * J);
  for (double& x : phi) x = 2.0 * Uniform01(rng) - 1.0;
  g.rewards.assign(2 * static_cast<size_t>(S) * J, 0.0);
  for (int s = 0; s < S; ++s) {
    const double h0[2] = {Uniform01(rng), Uniform01(rng)};
    const double h1[2] = {Uniform01(rng), Uniform01(rng)};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const int j = a * 2 + b;
        g.rewards[(0 * S + s) * J + j] = phi[s * J + j] + h0[b];
        g.rewards[(1 * S + s) * J + j] = phi[s * J + j] + h1[a];
      }
    }
  }
  g.stage_potential = std::move(phi);
  g.Validate();
  return g;
}

FiniteMarkovGame RandomMarkovGame(uint64_t seed, int num_states,
                                  int num_agents, double gamma) {
  Rng rng = MakeRng(seed, {0x4c1});
  FiniteMarkovGame g;
  g.name = "random-markov";
  g.num_agents = num_agents;
  g.num_states = num_states;
  g.num_actions.assign(num_agents, 2);
  g.discounts.assign(num_agents, gamma);
  const int S = num_states, J = g.NumJointActions();
  g.transitions.assign(static_cast<size_t>(S) * J * S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int j = 0; j < J; ++j) {
      double z = 0.0;
      std::vector<double> row(S);
      for (double& p : row) z += (p = Uniform01(rng) + 0.05);
      for (int n = 0; n < S; ++n) g.transitions[(s * J + j) * S + n] = row[n] / z;
    }
  }
  g.rewards.resize(static_cast<size_t>(num_agents) * S * J);
  for (double& r : g.rewards) r = 2.0 * Uniform01(rng) - 1.0;
  g.Validate();
  return g;
}

FiniteMarkovGame ConstantGame(double reward, int num_agents, int horizon,
                              double gamma) {
  FiniteMarkovGame g;
  g.name = "constant";
  g.num_agents = num_agents;
  g.num_states = 1;
  g.num_actions.assign(num_agents, 1);
  g.horizon = horizon;
  g.discounts.assign(num_agents, gamma);
  g.transitions = {1.0};
  g.rewards.assign(num_agents, reward);
  g.stage_potential = std::vector<double>{reward};
  g.Validate();
  return g;
}

FiniteMarkovGame Bandit(std::vector<double> arm_rewards) {
  FiniteMarkovGame g;
  g.name = "bandit";
  g.num_agents = 1;
  g.num_states = 1;
  g.num_actions = {static_cast<int>(arm_rewards.size())};
  g.horizon = 1;
  g.discounts = {0.0};
  g.transitions.assign(arm_rewards.size(), 1.0);
  g.rewards = arm_rewards;
  g.stage_potential = std::move(arm_rewards);
  g.Validate();
  return g;
}

std::vector<double> TabulateFeature(
    const FiniteMarkovGame& game,
    const std::function<double(int, std::span<const int>)>& fn) {
  const int J = game.NumJointActions();
  std::vector<double> table(static_cast<size_t>(game.num_states) * J);
  for (int s = 0; s < game.num_states; ++s) {
    for (int j = 0; j < J; ++j) {
      const std::vector<int> a = game.DecodeJoint(j);
      table[s * J + j] = fn(s, a);
    }
  }
  return table;
}

std::vector<double> ActionShareFeature(const FiniteMarkovGame& game,
                                       int action) {
  return TabulateFeature(game, [&](int, std::span<const int> a) {
    double c = 0.0;
    for (int x : a) c += x == action ? 1.0 : 0.0;
    return c / static_cast<double>(a.size());
  });
}

FiniteModifier MakeFiniteModifier(const FiniteMarkovGame& game,
                                  std::vector<FeatureSpec> features,
                                  std::vector<std::vector<double>> tables,
                                  int order, ModifierMode mode) {
  if (features.size() != tables.size()) {
    throw ConfigError("modifier: one table per feature required");
  }
  FiniteModifier m;
  m.params = ModifierParams(std::move(features), order);
  m.feature_table = std::move(tables);
  m.num_joint_actions = game.NumJointActions();
  m.mode = mode;
  return m;
}

}  // namespace idesign
