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

#ifndef IDESIGN_FIXTURES_H_
#define IDESIGN_FIXTURES_H_

// Small finite games with known structure, used by the verification suites
// and tests.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "idesign/game.h"

namespace idesign {

using Payoff2x2 = std::array<std::array<double, 2>, 2>;  // [a0][a1]

// Two-agent, two-action, single-state game. horizon = 1 gives a one-shot
// game; horizon = 0 gives the infinitely repeated game with discount gamma.
FiniteMarkovGame MatrixGame(const std::string& name, const Payoff2x2& r0,
                            const Payoff2x2& r1, int horizon = 1,
                            double gamma = 0.9);

// Common payoff for both agents; the potential is the payoff itself.
FiniteMarkovGame IdenticalInterestGame(const Payoff2x2& payoff,
                                       int horizon = 1, double gamma = 0.9);

// R_i(a) = phi(a) + h_i(a_-i); phi is registered as the stage potential.
FiniteMarkovGame PotentialMatrixGame(const std::string& name,
                                     const Payoff2x2& phi,
                                     std::array<double, 2> h0,
                                     std::array<double, 2> h1,
                                     int horizon = 1, double gamma = 0.9);

// Random instance of the above with entries in [0, 1).
FiniteMarkovGame RandomPotentialMatrixGame(uint64_t seed, int horizon = 1,
                                           double gamma = 0.9);

// Symmetric 2x2 game with R(S,S)=4, R(S,H)=0, R(H,S)=3, R(H,H)=3.
// Action 0 is stag. (S,S) is payoff dominant, (H,H) risk dominant and the
// potential maximizer.
FiniteMarkovGame StagHunt(int horizon = 1, double gamma = 0.9);
inline constexpr double kStagHuntSS = 4.0;
inline constexpr double kStagHuntSH = 0.0;
inline constexpr double kStagHuntHS = 3.0;
inline constexpr double kStagHuntHH = 3.0;

// Repeated stag hunt whose state is the previous joint action (state 0 is
// the start, state 1 + joint afterwards).
FiniteMarkovGame StagHuntWithMemory(double gamma = 0.9);

// Symmetric prisoner's dilemma C/C=3, C/D=0, D/C=5, D/D=1 (action 0 is C).
FiniteMarkovGame PrisonersDilemma(int horizon = 1, double gamma = 0.9);

// Multi-state potential game with action-independent random transitions:
// R_i(s, a) = phi(s, a) + h_i(s, a_-i).
FiniteMarkovGame RandomMarkovPotentialGame(uint64_t seed, int num_states = 3,
                                           double gamma = 0.8);

// Random game whose transitions depend on the joint action.
FiniteMarkovGame RandomMarkovGame(uint64_t seed, int num_states = 3,
                                  int num_agents = 2, double gamma = 0.7);

// One state, one action, constant reward.
FiniteMarkovGame ConstantGame(double reward, int num_agents, int horizon,
                              double gamma);

// Single-agent bandit with deterministic arm rewards, horizon 1.
FiniteMarkovGame Bandit(std::vector<double> arm_rewards);

// Tabulates a feature over (state, joint action).
std::vector<double> TabulateFeature(
    const FiniteMarkovGame& game,
    const std::function<double(int state, std::span<const int> actions)>& fn);

// Fraction of agents playing `action` in the joint action.
std::vector<double> ActionShareFeature(const FiniteMarkovGame& game,
                                       int action);

// Modifier over the given feature tables with zero coefficients.
FiniteModifier MakeFiniteModifier(const FiniteMarkovGame& game,
                                  std::vector<FeatureSpec> features,
                                  std::vector<std::vector<double>> tables,
                                  int order, ModifierMode mode);

}  // namespace idesign

#endif  // IDESIGN_FIXTURES_H_
