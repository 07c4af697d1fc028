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

#include "idesign/verify.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>

#include "idesign/bayesopt.h"
#include "idesign/fixtures.h"
#include "idesign/game.h"
#include "idesign/incentive.h"
#include "idesign/rng.h"
#include "idesign/routing.h"

namespace idesign {
namespace {

constexpr double kPotentialTol = 1e-6;
constexpr double kTelescopeTol = 1e-9;
constexpr double kEiTol = 1e-3;
constexpr double kInterpolationTol = 1e-6;

double UniformIn(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * Uniform01(rng);
}

std::vector<double> RandomCoefficients(Rng& rng, int n, double scale) {
  std::vector<double> c(n);
  for (double& x : c) x = UniformIn(rng, -scale, scale);
  return c;
}

// Common modifier over the share of agents playing action 0 and, for
// multi-state games, the normalized state index.
FiniteModifier ShareModifier(const FiniteMarkovGame& game, int order,
                             ModifierMode mode, Rng& rng, double scale) {
  std::vector<FeatureSpec> features = {{"share0", 0.0, 1.0}};
  std::vector<std::vector<double>> tables = {ActionShareFeature(game, 0)};
  if (game.num_states > 1) {
    features.push_back({"state", 0.0, 1.0});
    tables.push_back(TabulateFeature(game, [&](int s, std::span<const int>) {
      return static_cast<double>(s) / (game.num_states - 1);
    }));
  }
  FiniteModifier m = MakeFiniteModifier(game, std::move(features),
                                        std::move(tables), order, mode);
  const std::vector<double> c =
      RandomCoefficients(rng, m.params.dimension(), scale);
  m.params.set_coefficients(c);
  return m;
}

CheckResult Check(std::string name, double value, double threshold,
                  std::string detail) {
  CheckResult r;
  r.name = std::move(name);
  r.value = value;
  r.threshold = threshold;
  r.passed = std::isfinite(value) && value <= threshold;
  r.detail = std::move(detail);
  return r;
}

std::string Format(const char* fmt, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

void AddFinitePotentialChecks(const std::string& label,
                              const FiniteMarkovGame& game, int pairs,
                              uint64_t seed, std::vector<CheckResult>& out) {
  Rng rng = MakeRng(seed, {0x11});
  const std::vector<DeviationPair> dev =
      RandomDeviationPairs(game, pairs, StreamSeed(seed, {0x12}));
  const std::string n = std::to_string(pairs) + " deviation pairs";
  out.push_back(Check("potential/" + label,
                      VerifyPotential(FinitePotentialOracle(game, nullptr), dev),
                      kPotentialTol, n));
  const FiniteModifier additive =
      ShareModifier(game, 2, ModifierMode::kAdditive, rng, 2.0);
  out.push_back(Check(
      "potential/" + label + "+additive",
      VerifyPotential(FinitePotentialOracle(game, &additive), dev),
      kPotentialTol, n));
  if (game.horizon == 0) {
    const FiniteModifier shaping =
        ShareModifier(game, 2, ModifierMode::kShaping, rng, 2.0);
    out.push_back(Check(
        "potential/" + label + "+shaping",
        VerifyPotential(FinitePotentialOracle(game, &shaping), dev),
        kPotentialTol, n));
  }
}

}  // namespace

std::vector<CheckResult> VerifyPotentialSuite(int pairs, uint64_t seed) {
  std::vector<CheckResult> out;
  const Payoff2x2 common = {{{4.0, 0.0}, {1.0, 2.5}}};
  AddFinitePotentialChecks("identical_interest_oneshot",
                           IdenticalInterestGame(common, 1), pairs,
                           StreamSeed(seed, {1}), out);
  AddFinitePotentialChecks("identical_interest_repeated",
                           IdenticalInterestGame(common, 0, 0.9), pairs,
                           StreamSeed(seed, {2}), out);
  AddFinitePotentialChecks("potential_matrix_repeated",
                           RandomPotentialMatrixGame(StreamSeed(seed, {3}), 0,
                                                     0.9),
                           pairs, StreamSeed(seed, {4}), out);
  AddFinitePotentialChecks("stag_hunt_horizon5", StagHunt(5, 0.9), pairs,
                           StreamSeed(seed, {5}), out);
  AddFinitePotentialChecks(
      "markov_potential",
      RandomMarkovPotentialGame(StreamSeed(seed, {6}), 3, 0.8), pairs,
      StreamSeed(seed, {7}), out);

  // Routing: affine latencies with linear per-edge tolls, small population.
  RoutingNetwork net = BraessNetwork(4);
  const std::string n = std::to_string(pairs) + " deviation pairs";
  {
    const RoutingEnv env(net);
    out.push_back(Check(
        "potential/routing_braess",
        VerifyPotential(RoutingPotentialOracle(env),
                        RandomRoutingDeviationPairs(env, pairs,
                                                    StreamSeed(seed, {8}))),
        kPotentialTol, n));
  }
  {
    Rng rng = MakeRng(seed, {9});
    ModifierParams tolls = MakeTollParams(net, 1, -1.0, 1.0);
    tolls.set_coefficients(RandomCoefficients(rng, tolls.dimension(), 1.0));
    const RoutingEnv env(net, tolls);
    out.push_back(Check(
        "potential/routing_braess+tolls",
        VerifyPotential(RoutingPotentialOracle(env),
                        RandomRoutingDeviationPairs(env, pairs,
                                                    StreamSeed(seed, {10}))),
        kPotentialTol, n));
  }
  return out;
}

std::vector<CheckResult> VerifyShapingSuite(int trajectories, int games,
                                            uint64_t seed) {
  std::vector<CheckResult> out;

  // Telescoping: sum_t gamma^t F_t == gamma^T Theta_T along each rollout.
  double worst = 0.0;
  for (int n = 0; n < trajectories; ++n) {
    Rng rng = MakeRng(seed, {1, static_cast<uint64_t>(n)});
    const double gamma = UniformIn(rng, 0.5, 0.99);
    const FiniteMarkovGame game =
        RandomMarkovGame(StreamSeed(seed, {2, static_cast<uint64_t>(n)}), 3, 2,
                         gamma);
    const FiniteModifier mod =
        ShareModifier(game, 3, ModifierMode::kShaping, rng, 2.0);
    const int T = 1 + static_cast<int>(Uniform01(rng) * 60);
    const Trajectory traj =
        Rollout(game, game.UniformJointPolicy(), &mod, T,
                StreamSeed(seed, {3, static_cast<uint64_t>(n)}));
    const int F = mod.params.num_features();
    const int J = game.NumJointActions();
    auto features = [&](const Trajectory::Step& st) {
      std::vector<double> f(F);
      const int joint = game.JointIndex(st.actions);
      for (int k = 0; k < F; ++k) {
        f[k] = mod.feature_table[k][st.state * J + joint];
      }
      return f;
    };
    double sum = 0.0, disc = 1.0;
    std::optional<std::vector<double>> prev;
    for (const Trajectory::Step& st : traj.steps) {
      const std::vector<double> curr = features(st);
      std::optional<std::span<const double>> prev_span;
      if (prev) prev_span = std::span<const double>(*prev);
      sum += disc * ShapingTerm(mod.params, gamma, prev_span, curr);
      disc *= gamma;
      prev = curr;
    }
    const double boundary = disc * mod.params.Eval(*prev);
    worst = std::max(worst, std::abs(sum - boundary));
  }
  out.push_back(Check("shaping/telescoping", worst, kTelescopeTol,
                      std::to_string(trajectories) + " trajectories"));

  // Pure-NE sets of random repeated potential matrix games are unchanged by
  // shaping. The additive count shows the check is not vacuous.
  auto same_set = [](const std::vector<JointPolicy>& a,
                     const std::vector<JointPolicy>& b) {
    if (a.size() != b.size()) return false;
    for (const JointPolicy& p : a) {
      const bool found = std::any_of(b.begin(), b.end(), [&](const auto& q) {
        return SameProbabilities(p, q);
      });
      if (!found) return false;
    }
    return true;
  };
  int mismatched = 0, additive_changed = 0;
  for (int g = 0; g < games; ++g) {
    Rng rng = MakeRng(seed, {4, static_cast<uint64_t>(g)});
    const FiniteMarkovGame game = RandomPotentialMatrixGame(
        StreamSeed(seed, {5, static_cast<uint64_t>(g)}), 0, 0.9);
    const FiniteModifier shaping =
        ShareModifier(game, 2, ModifierMode::kShaping, rng, 5.0);
    FiniteModifier additive = shaping;
    additive.mode = ModifierMode::kAdditive;
    const auto base = EnumeratePureNe(game, nullptr, 1e-9);
    if (!same_set(base, EnumeratePureNe(game, &shaping, 1e-9))) ++mismatched;
    if (!same_set(base, EnumeratePureNe(game, &additive, 1e-9))) {
      ++additive_changed;
    }
  }
  out.push_back(Check("shaping/ne_preservation", mismatched, 0.0,
                      std::to_string(games) + " games, additive changed " +
                          std::to_string(additive_changed)));
  return out;
}

std::vector<CheckResult> VerifyGpSuite(int tuples, int mc_samples,
                                       uint64_t seed) {
  std::vector<CheckResult> out;
  double worst = 0.0;
  const int pairs = std::max(1, mc_samples / 2);
  for (int n = 0; n < tuples; ++n) {
    Rng rng = MakeRng(seed, {1, static_cast<uint64_t>(n)});
    const double mu = UniformIn(rng, -2.0, 2.0);
    const double sd = std::exp(UniformIn(rng, std::log(0.03), std::log(0.5)));
    const double best = mu + sd * UniformIn(rng, -2.0, 2.0);
    const double xi = UniformIn(rng, 0.0, 0.1);
    const double closed = ExpectedImprovement(mu, sd * sd, best, xi);
    // Antithetic pairs.
    double acc = 0.0;
    for (int s = 0; s < pairs; ++s) {
      const double z = StandardNormal(rng);
      acc += std::max(mu + sd * z - best - xi, 0.0) +
             std::max(mu - sd * z - best - xi, 0.0);
    }
    worst = std::max(worst, std::abs(closed - acc / (2.0 * pairs)));
  }
  out.push_back(Check("gp/ei_vs_monte_carlo", worst, kEiTol,
                      std::to_string(tuples) + " tuples, " +
                          std::to_string(2 * pairs) + " samples each"));

  double interp = 0.0;
  for (int d = 1; d <= 3; ++d) {
    Rng rng = MakeRng(seed, {2, static_cast<uint64_t>(d)});
    std::vector<double> lower(d, -2.0), upper(d, 3.0);
    std::vector<std::vector<double>> w;
    std::vector<double> J;
    for (int i = 0; i < 12; ++i) {
      std::vector<double> x(d);
      double y = 0.0;
      for (int k = 0; k < d; ++k) {
        x[k] = UniformIn(rng, lower[k], upper[k]);
        y += std::sin(1.3 * x[k] + k) + 0.1 * x[k] * x[k];
      }
      w.push_back(x);
      J.push_back(y);
    }
    GpHyper hyper;
    hyper.signal_var = 1.0;
    hyper.lengthscale = 0.15;
    hyper.noise_var = 1e-12;
    const GpSurrogate gp = GpSurrogate::Fit(w, J, lower, upper, hyper);
    for (size_t i = 0; i < w.size(); ++i) {
      interp = std::max(interp, std::abs(gp.Predict(w[i]).mean - J[i]));
    }
  }
  out.push_back(Check("gp/interpolation", interp, kInterpolationTol,
                      "12 noiseless points in 1 to 3 dimensions"));
  return out;
}

bool PrintChecks(const std::vector<CheckResult>& checks, std::ostream& os) {
  bool all = true;
  for (const CheckResult& c : checks) {
    all = all && c.passed;
    os << (c.passed ? "PASS " : "FAIL ") << c.name << "  "
       << Format("%.3e <= %.1e", c.value, c.threshold) << "  " << c.detail
       << "\n";
  }
  return all;
}

}  // namespace idesign
