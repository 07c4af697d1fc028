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

#include "idesign/game.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>

#include "idesign/errors.h"
#include "idesign/json_util.h"

namespace idesign {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void SoftmaxInto(std::span<const double> logits, std::span<double> out) {
  double mx = kNegInf;
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (size_t k = 0; k < logits.size(); ++k) {
    out[k] = logits[k] == kNegInf ? 0.0 : std::exp(logits[k] - mx);
    z += out[k];
  }
  for (double& p : out) p /= z;
}

// Joint-action probabilities per state: out[s * J + joint].
std::vector<double> JointActionProbs(const FiniteMarkovGame& game,
                                     const JointPolicy& policy) {
  const int S = game.num_states;
  const int J = game.NumJointActions();
  std::vector<double> out(static_cast<size_t>(S) * J, 1.0);
  std::vector<std::vector<double>> probs(game.num_agents);
  for (int s = 0; s < S; ++s) {
    for (int i = 0; i < game.num_agents; ++i) {
      probs[i] = policy.of(i).Probabilities(s);
    }
    for (int j = 0; j < J; ++j) {
      int rest = j;
      double p = 1.0;
      for (int i = game.num_agents - 1; i >= 0; --i) {
        const int a = rest % game.num_actions[i];
        rest /= game.num_actions[i];
        p *= probs[i][a];
      }
      out[static_cast<size_t>(s) * J + j] = p;
    }
  }
  return out;
}

// Policy evaluation for one reward table rewards[s * J + joint].
double EvaluateReward(const FiniteMarkovGame& game,
                      const std::vector<double>& joint_probs,
                      std::span<const double> rewards, double gamma) {
  const int S = game.num_states;
  const int J = game.NumJointActions();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int j = 0; j < J; ++j) {
      const double pj = joint_probs[static_cast<size_t>(s) * J + j];
      if (pj == 0.0) continue;
      r(s) += pj * rewards[static_cast<size_t>(s) * J + j];
      for (int n = 0; n < S; ++n) P(s, n) += pj * game.TransitionProb(s, j, n);
    }
  }
  if (game.horizon > 0) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    for (int t = 0; t < game.horizon; ++t) v = r + gamma * P * v;
    return v(game.initial_state);
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S) - gamma * P;
  Eigen::VectorXd v = A.partialPivLu().solve(r);
  return v(game.initial_state);
}

std::span<const double> AgentRewards(const FiniteMarkovGame& game, int agent) {
  const size_t block =
      static_cast<size_t>(game.num_states) * game.NumJointActions();
  return std::span<const double>(game.rewards).subspan(agent * block, block);
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularPolicy

TabularPolicy::TabularPolicy(std::vector<int> actions_per_obs) {
  offsets_.assign(1, 0);
  for (int n : actions_per_obs) {
    if (n < 1) throw ConfigError("policy: observation with no actions");
    offsets_.push_back(offsets_.back() + n);
  }
  logits_.assign(offsets_.back(), 0.0);
}

TabularPolicy TabularPolicy::Deterministic(std::vector<int> actions_per_obs,
                                           std::span<const int> choices) {
  TabularPolicy p(std::move(actions_per_obs));
  if (static_cast<int>(choices.size()) != p.num_observations()) {
    throw ConfigError("policy: one choice per observation required");
  }
  for (int o = 0; o < p.num_observations(); ++o) {
    auto row = p.mutable_logits(o);
    std::fill(row.begin(), row.end(), kNegInf);
    row[choices[o]] = 0.0;
  }
  return p;
}

std::vector<int> TabularPolicy::actions_per_obs() const {
  std::vector<int> out(num_observations());
  for (int o = 0; o < num_observations(); ++o) out[o] = num_actions(o);
  return out;
}

std::vector<double> TabularPolicy::Probabilities(int obs) const {
  std::vector<double> out(num_actions(obs));
  Probabilities(obs, out);
  return out;
}

void TabularPolicy::Probabilities(int obs, std::span<double> out) const {
  SoftmaxInto(logits(obs), out);
}

double TabularPolicy::Probability(int obs, int action) const {
  return Probabilities(obs)[action];
}

int TabularPolicy::Sample(int obs, Rng& rng) const {
  const std::vector<double> p = Probabilities(obs);
  return SampleIndex(p, rng);
}

std::vector<double> TabularPolicy::AllProbabilities() const {
  std::vector<double> out(logits_.size());
  for (int o = 0; o < num_observations(); ++o) {
    SoftmaxInto(logits(o), std::span<double>(out).subspan(offsets_[o],
                                                          num_actions(o)));
  }
  return out;
}

int SampleIndex(std::span<const double> probs, Rng& rng) {
  const double u = Uniform01(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] > 0.0) last_positive = static_cast<int>(k);
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return last_positive;
}

JointPolicy JointPolicy::Independent(std::vector<TabularPolicy> p) {
  JointPolicy jp;
  jp.num_agents = static_cast<int>(p.size());
  jp.policies = std::move(p);
  return jp;
}

JointPolicy JointPolicy::Shared(TabularPolicy p, int num_agents) {
  JointPolicy jp;
  jp.policies.push_back(std::move(p));
  jp.shared = true;
  jp.num_agents = num_agents;
  return jp;
}

bool SameProbabilities(const JointPolicy& a, const JointPolicy& b,
                       double tol) {
  if (a.num_agents != b.num_agents) return false;
  for (int i = 0; i < a.num_agents; ++i) {
    const auto pa = a.of(i).AllProbabilities();
    const auto pb = b.of(i).AllProbabilities();
    if (pa.size() != pb.size()) return false;
    for (size_t k = 0; k < pa.size(); ++k) {
      if (std::abs(pa[k] - pb[k]) > tol) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// FiniteMarkovGame

int FiniteMarkovGame::NumJointActions() const {
  int j = 1;
  for (int n : num_actions) j *= n;
  return j;
}

int FiniteMarkovGame::JointIndex(std::span<const int> actions) const {
  int j = 0;
  for (int i = 0; i < num_agents; ++i) j = j * num_actions[i] + actions[i];
  return j;
}

std::vector<int> FiniteMarkovGame::DecodeJoint(int joint) const {
  std::vector<int> a(num_agents);
  for (int i = num_agents - 1; i >= 0; --i) {
    a[i] = joint % num_actions[i];
    joint /= num_actions[i];
  }
  return a;
}

int FiniteMarkovGame::SampleNext(int state, int joint, Rng& rng) const {
  const size_t base =
      (static_cast<size_t>(state) * NumJointActions() + joint) * num_states;
  return SampleIndex(
      std::span<const double>(transitions).subspan(base, num_states), rng);
}

bool FiniteMarkovGame::TransitionsActionIndependent() const {
  const int J = NumJointActions();
  for (int s = 0; s < num_states; ++s) {
    for (int j = 1; j < J; ++j) {
      for (int n = 0; n < num_states; ++n) {
        if (TransitionProb(s, j, n) != TransitionProb(s, 0, n)) return false;
      }
    }
  }
  return true;
}

int FiniteMarkovGame::EffectiveHorizon(double eps) const {
  if (horizon > 0) return horizon;
  const double gmax = *std::max_element(discounts.begin(), discounts.end());
  if (gmax <= 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(eps) /
                                                std::log(gmax))));
}

TabularPolicy FiniteMarkovGame::UniformPolicy(int agent) const {
  return TabularPolicy(std::vector<int>(num_states, num_actions[agent]));
}

JointPolicy FiniteMarkovGame::UniformJointPolicy() const {
  std::vector<TabularPolicy> p;
  for (int i = 0; i < num_agents; ++i) p.push_back(UniformPolicy(i));
  return JointPolicy::Independent(std::move(p));
}

void FiniteMarkovGame::Validate() const {
  const std::string where = "game '" + name + "'";
  if (num_agents < 1) throw ConfigError(where + ": agents must be >= 1");
  if (num_states < 1) throw ConfigError(where + ": states must be >= 1");
  if (static_cast<int>(num_actions.size()) != num_agents) {
    throw ConfigError(where + ": actions must list one count per agent");
  }
  for (int n : num_actions) {
    if (n < 1) throw ConfigError(where + ": action count must be >= 1");
  }
  if (static_cast<int>(discounts.size()) != num_agents) {
    throw ConfigError(where + ": discounts must list one value per agent");
  }
  for (double g : discounts) {
    const bool ok = horizon > 0 ? (g >= 0.0 && g <= 1.0)
                                : (g >= 0.0 && g < 1.0);
    if (!ok) {
      throw ConfigError(where +
                        ": discount outside [0,1) for an unbounded horizon");
    }
  }
  if (horizon < 0) throw ConfigError(where + ": horizon must be >= 0");
  if (initial_state < 0 || initial_state >= num_states) {
    throw ConfigError(where + ": initial_state out of range");
  }
  const size_t J = NumJointActions();
  if (transitions.size() != num_states * J * num_states) {
    throw ConfigError(where + ": transition table has wrong size");
  }
  if (rewards.size() != num_agents * num_states * J) {
    throw ConfigError(where + ": reward table has wrong size");
  }
  for (int s = 0; s < num_states; ++s) {
    for (size_t j = 0; j < J; ++j) {
      double sum = 0.0;
      for (int n = 0; n < num_states; ++n) {
        const double p = TransitionProb(s, static_cast<int>(j), n);
        if (!(p >= 0.0)) throw ConfigError(where + ": negative transition");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError(where + ": transition row does not sum to 1");
      }
    }
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) throw ConfigError(where + ": non-finite reward");
  }
  if (stage_potential && stage_potential->size() != num_states * J) {
    throw ConfigError(where + ": stage_potential has wrong size");
  }
}

void FiniteMarkovGame::CheckPolicy(const JointPolicy& policy) const {
  if (policy.num_agents != num_agents) {
    throw ConfigError("policy has " + std::to_string(policy.num_agents) +
                      " agents, game has " + std::to_string(num_agents));
  }
  for (int i = 0; i < num_agents; ++i) {
    const TabularPolicy& p = policy.of(i);
    if (p.num_observations() != num_states) {
      throw ConfigError("policy of agent " + std::to_string(i) +
                        " has wrong number of observations");
    }
    for (int s = 0; s < num_states; ++s) {
      if (p.num_actions(s) != num_actions[i]) {
        throw ConfigError("policy of agent " + std::to_string(i) +
                          " has wrong action count");
      }
    }
  }
}

nlohmann::json FiniteMarkovGame::ToJson() const {
  const int J = NumJointActions();
  nlohmann::json j;
  j["version"] = 1;
  j["name"] = name;
  j["agents"] = num_agents;
  j["states"] = num_states;
  j["actions"] = num_actions;
  j["horizon"] = horizon;
  j["initial_state"] = initial_state;
  j["discounts"] = discounts;
  nlohmann::json rew = nlohmann::json::array();
  for (int i = 0; i < num_agents; ++i) {
    nlohmann::json per_state = nlohmann::json::array();
    for (int s = 0; s < num_states; ++s) {
      std::vector<double> row(J);
      for (int a = 0; a < J; ++a) row[a] = Reward(i, s, a);
      per_state.push_back(row);
    }
    rew.push_back(per_state);
  }
  j["rewards"] = rew;
  nlohmann::json tr = nlohmann::json::array();
  for (int s = 0; s < num_states; ++s) {
    nlohmann::json per_joint = nlohmann::json::array();
    for (int a = 0; a < J; ++a) {
      std::vector<double> row(num_states);
      for (int n = 0; n < num_states; ++n) row[n] = TransitionProb(s, a, n);
      per_joint.push_back(row);
    }
    tr.push_back(per_joint);
  }
  j["transitions"] = tr;
  if (stage_potential) {
    nlohmann::json pot = nlohmann::json::array();
    for (int s = 0; s < num_states; ++s) {
      pot.push_back(std::vector<double>(
          stage_potential->begin() + s * J,
          stage_potential->begin() + (s + 1) * J));
    }
    j["stage_potential"] = pot;
  }
  return j;
}

FiniteMarkovGame FiniteMarkovGame::FromJson(const nlohmann::json& j) {
  const std::string where = "game";
  CheckKeys(j,
            {"version", "name", "agents", "states", "actions", "horizon",
             "initial_state", "discounts", "rewards", "transitions",
             "stage_potential"},
            where);
  if (Require<int>(j, "version", where) != 1) {
    throw ConfigError(where + ".version: unsupported version");
  }
  FiniteMarkovGame g;
  g.name = Optional<std::string>(j, "name", "", where);
  g.num_agents = Require<int>(j, "agents", where);
  g.num_states = Require<int>(j, "states", where);
  g.num_actions = Require<std::vector<int>>(j, "actions", where);
  g.horizon = Optional<int>(j, "horizon", 0, where);
  g.initial_state = Optional<int>(j, "initial_state", 0, where);
  g.discounts = Require<std::vector<double>>(j, "discounts", where);
  if (static_cast<int>(g.num_actions.size()) != g.num_agents) {
    throw ConfigError(where + ".actions: expected one count per agent");
  }
  const int J = g.NumJointActions();
  const auto rew =
      Require<std::vector<std::vector<std::vector<double>>>>(j, "rewards",
                                                            where);
  if (static_cast<int>(rew.size()) != g.num_agents) {
    throw ConfigError(where + ".rewards: expected one table per agent");
  }
  for (const auto& per_state : rew) {
    if (static_cast<int>(per_state.size()) != g.num_states) {
      throw ConfigError(where + ".rewards: expected one row per state");
    }
    for (const auto& row : per_state) {
      if (static_cast<int>(row.size()) != J) {
        throw ConfigError(where + ".rewards: expected one entry per joint action");
      }
      g.rewards.insert(g.rewards.end(), row.begin(), row.end());
    }
  }
  const auto tr = Require<std::vector<std::vector<std::vector<double>>>>(
      j, "transitions", where);
  if (static_cast<int>(tr.size()) != g.num_states) {
    throw ConfigError(where + ".transitions: expected one block per state");
  }
  for (const auto& per_joint : tr) {
    if (static_cast<int>(per_joint.size()) != J) {
      throw ConfigError(where + ".transitions: expected one row per joint action");
    }
    for (const auto& row : per_joint) {
      if (static_cast<int>(row.size()) != g.num_states) {
        throw ConfigError(where + ".transitions: expected one entry per state");
      }
      g.transitions.insert(g.transitions.end(), row.begin(), row.end());
    }
  }
  if (j.contains("stage_potential")) {
    const auto pot = Require<std::vector<std::vector<double>>>(
        j, "stage_potential", where);
    std::vector<double> flat;
    for (const auto& row : pot) flat.insert(flat.end(), row.begin(), row.end());
    g.stage_potential = std::move(flat);
  }
  g.Validate();
  return g;
}

// ---------------------------------------------------------------------------
// Rollouts and evaluation

void Trajectory::WriteCsv(std::ostream& os) const {
  const size_t n = steps.empty() ? 0 : steps.front().actions.size();
  os << "t,state";
  for (size_t i = 0; i < n; ++i) os << ",a" << i;
  for (size_t i = 0; i < n; ++i) os << ",r" << i;
  os << ",next_state\n";
  char buf[64];
  for (size_t t = 0; t < steps.size(); ++t) {
    const Step& st = steps[t];
    os << t << ',' << st.state;
    for (int a : st.actions) os << ',' << a;
    for (double r : st.rewards) {
      std::snprintf(buf, sizeof(buf), "%.17g", r);
      os << ',' << buf;
    }
    os << ',' << st.next_state << '\n';
  }
}

Trajectory Rollout(const FiniteMarkovGame& game, const JointPolicy& policy,
                   const FiniteModifier* modifier, int horizon,
                   uint64_t seed) {
  if (horizon < 1) throw ConfigError("rollout: horizon must be >= 1");
  game.CheckPolicy(policy);
  const int N = game.num_agents;
  std::vector<Rng> agent_rng;
  for (int i = 0; i < N; ++i) {
    agent_rng.push_back(MakeRng(seed, {static_cast<uint64_t>(i) + 1}));
  }
  Rng env_rng = MakeRng(seed, {0});
  Trajectory traj;
  traj.seed = seed;
  traj.steps.reserve(horizon);
  int s = game.initial_state;
  std::optional<double> prev_theta;
  for (int t = 0; t < horizon; ++t) {
    Trajectory::Step st;
    st.state = s;
    st.actions.resize(N);
    for (int i = 0; i < N; ++i) {
      st.actions[i] = policy.of(i).Sample(s, agent_rng[i]);
    }
    const int joint = game.JointIndex(st.actions);
    st.rewards.resize(N);
    const double theta = modifier ? modifier->Theta(s, joint) : 0.0;
    for (int i = 0; i < N; ++i) {
      const double r = game.Reward(i, s, joint);
      if (modifier == nullptr) {
        st.rewards[i] = r;
      } else if (modifier->mode == ModifierMode::kAdditive) {
        st.rewards[i] = r + theta;
      } else {
        const double g = game.discounts[i];
        st.rewards[i] = g * r + ShapingTerm(g, prev_theta, theta);
      }
    }
    prev_theta = theta;
    st.next_state = game.SampleNext(s, joint, env_rng);
    s = st.next_state;
    traj.steps.push_back(std::move(st));
  }
  return traj;
}

ValueEstimate EstimateValues(const FiniteMarkovGame& game,
                             const JointPolicy& policy,
                             const FiniteModifier* modifier, int n_episodes,
                             uint64_t seed, double truncation) {
  if (n_episodes < 1) throw ConfigError("estimate_values: n_episodes < 1");
  const int N = game.num_agents;
  const int T = game.EffectiveHorizon(truncation);
  std::vector<double> sum(N, 0.0), sum_sq(N, 0.0);
  for (int e = 0; e < n_episodes; ++e) {
    const Trajectory traj = Rollout(game, policy, modifier, T,
                                    StreamSeed(seed, {static_cast<uint64_t>(e)}));
    for (int i = 0; i < N; ++i) {
      double ret = 0.0, disc = 1.0;
      for (const auto& st : traj.steps) {
        ret += disc * st.rewards[i];
        disc *= game.discounts[i];
      }
      sum[i] += ret;
      sum_sq[i] += ret * ret;
    }
  }
  ValueEstimate est;
  est.n_episodes = n_episodes;
  for (int i = 0; i < N; ++i) {
    const double mean = sum[i] / n_episodes;
    double var = 0.0;
    if (n_episodes > 1) {
      var = std::max(0.0, (sum_sq[i] - n_episodes * mean * mean) /
                              (n_episodes - 1));
    }
    est.values.push_back(mean);
    est.std_errors.push_back(std::sqrt(var / n_episodes));
  }
  return est;
}

std::vector<double> ExactValues(const FiniteMarkovGame& game,
                                const JointPolicy& policy,
                                const FiniteModifier* modifier) {
  if (modifier != nullptr) {
    if (modifier->mode == ModifierMode::kShaping) {
      return ExactValues(ShapedGame(game, *modifier), LiftPolicy(game, policy),
                         nullptr);
    }
    return ExactValues(ModifiedReward(game, *modifier), policy, nullptr);
  }
  game.CheckPolicy(policy);
  const std::vector<double> jp = JointActionProbs(game, policy);
  std::vector<double> v(game.num_agents);
  for (int i = 0; i < game.num_agents; ++i) {
    v[i] = EvaluateReward(game, jp, AgentRewards(game, i), game.discounts[i]);
  }
  return v;
}

FiniteMarkovGame ShapedGame(const FiniteMarkovGame& game,
                            const FiniteModifier& modifier) {
  const int S = game.num_states;
  const int J = game.NumJointActions();
  // Augmented state (s, previous (state, joint) pair or none).
  const int P = S * J + 1;
  const int none = S * J;
  FiniteMarkovGame g;
  g.name = game.name + "+shaping";
  g.num_agents = game.num_agents;
  g.num_states = S * P;
  g.num_actions = game.num_actions;
  g.horizon = game.horizon;
  g.initial_state = game.initial_state * P + none;
  g.discounts = game.discounts;
  const size_t GS = g.num_states;
  g.transitions.assign(GS * J * GS, 0.0);
  g.rewards.assign(static_cast<size_t>(g.num_agents) * GS * J, 0.0);
  if (game.stage_potential) {
    g.stage_potential = std::vector<double>(GS * J, 0.0);
  }
  for (int s = 0; s < S; ++s) {
    for (int prev = 0; prev < P; ++prev) {
      const int as = s * P + prev;
      std::optional<double> prev_theta;
      if (prev != none) prev_theta = modifier.Theta(prev / J, prev % J);
      for (int j = 0; j < J; ++j) {
        const double theta = modifier.Theta(s, j);
        const int next_prev = s * J + j;
        for (int n = 0; n < S; ++n) {
          g.transitions[(as * J + j) * GS + n * P + next_prev] =
              game.TransitionProb(s, j, n);
        }
        for (int i = 0; i < g.num_agents; ++i) {
          const double gamma = game.discounts[i];
          g.rewards[(i * GS + as) * J + j] =
              gamma * game.Reward(i, s, j) +
              ShapingTerm(gamma, prev_theta, theta);
        }
        if (game.stage_potential) {
          (*g.stage_potential)[as * J + j] =
              (*game.stage_potential)[s * J + j];
        }
      }
    }
  }
  return g;
}

JointPolicy LiftPolicy(const FiniteMarkovGame& game,
                       const JointPolicy& policy) {
  game.CheckPolicy(policy);
  const int P = game.num_states * game.NumJointActions() + 1;
  std::vector<TabularPolicy> lifted;
  const int count = policy.shared ? 1 : game.num_agents;
  for (int i = 0; i < count; ++i) {
    const TabularPolicy& src = policy.of(i);
    TabularPolicy dst(std::vector<int>(game.num_states * P, game.num_actions[i]));
    for (int s = 0; s < game.num_states; ++s) {
      for (int prev = 0; prev < P; ++prev) {
        auto row = dst.mutable_logits(s * P + prev);
        auto from = src.logits(s);
        std::copy(from.begin(), from.end(), row.begin());
      }
    }
    lifted.push_back(std::move(dst));
  }
  if (policy.shared) return JointPolicy::Shared(std::move(lifted[0]), game.num_agents);
  return JointPolicy::Independent(std::move(lifted));
}

std::vector<TabularPolicy> PurePolicies(const FiniteMarkovGame& game,
                                        int agent, int limit) {
  const int S = game.num_states;
  const int A = game.num_actions[agent];
  double count = std::pow(static_cast<double>(A), S);
  if (count > limit) {
    throw UnsupportedError("pure policy enumeration exceeds limit");
  }
  std::vector<TabularPolicy> out;
  std::vector<int> choice(S, 0);
  while (true) {
    out.push_back(TabularPolicy::Deterministic(std::vector<int>(S, A), choice));
    int k = S - 1;
    while (k >= 0 && ++choice[k] == A) choice[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

namespace {

JointPolicy WithAgentPolicy(const JointPolicy& policy, int agent,
                            const TabularPolicy& p) {
  std::vector<TabularPolicy> v;
  for (int i = 0; i < policy.num_agents; ++i) v.push_back(policy.of(i));
  v[agent] = p;
  return JointPolicy::Independent(std::move(v));
}

}  // namespace

double BestResponseGap(const FiniteMarkovGame& game, const JointPolicy& policy,
                       const FiniteModifier* modifier, int agent,
                       std::span<const TabularPolicy> deviations,
                       int n_episodes, uint64_t seed) {
  if (deviations.empty()) throw ConfigError("best_response_gap: no deviations");
  const double base =
      EstimateValues(game, policy, modifier, n_episodes, seed).values[agent];
  double gap = -std::numeric_limits<double>::infinity();
  for (const TabularPolicy& d : deviations) {
    const double v = EstimateValues(game, WithAgentPolicy(policy, agent, d),
                                    modifier, n_episodes, seed)
                         .values[agent];
    gap = std::max(gap, v - base);
  }
  return gap;
}

double ExactBestResponseGap(const FiniteMarkovGame& game,
                            const JointPolicy& policy,
                            const FiniteModifier* modifier, int agent,
                            std::span<const TabularPolicy> deviations) {
  if (deviations.empty()) throw ConfigError("best_response_gap: no deviations");
  const double base = ExactValues(game, policy, modifier)[agent];
  double gap = -std::numeric_limits<double>::infinity();
  for (const TabularPolicy& d : deviations) {
    const double v =
        ExactValues(game, WithAgentPolicy(policy, agent, d), modifier)[agent];
    gap = std::max(gap, v - base);
  }
  return gap;
}

double ExactNashGap(const FiniteMarkovGame& game, const JointPolicy& policy,
                    const FiniteModifier* modifier) {
  double gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.num_agents; ++i) {
    const auto dev = PurePolicies(game, i);
    gap = std::max(gap, ExactBestResponseGap(game, policy, modifier, i, dev));
  }
  return gap;
}

PotentialOracle FinitePotentialOracle(const FiniteMarkovGame& game,
                                      const FiniteModifier* modifier) {
  if (!game.stage_potential) {
    throw UnsupportedError("game '" + game.name + "' has no exact potential");
  }
  if (!game.TransitionsActionIndependent()) {
    throw UnsupportedError("game '" + game.name +
                           "': stage potential requires action-independent "
                           "transitions");
  }
  for (double g : game.discounts) {
    if (g != game.discounts[0]) {
      throw UnsupportedError("game '" + game.name +
                             "': potential requires a common discount");
    }
  }
  if (modifier != nullptr && modifier->mode == ModifierMode::kShaping &&
      game.horizon > 0) {
    throw UnsupportedError("shaping potential requires an unbounded horizon");
  }
  // Game whose single reward table is the (modified) potential.
  FiniteMarkovGame pot = game;
  pot.num_agents = 1;
  pot.num_actions = {game.NumJointActions()};
  pot.discounts = {game.discounts[0]};
  pot.rewards = *game.stage_potential;
  const FiniteModifier* additive =
      modifier != nullptr && modifier->mode == ModifierMode::kAdditive
          ? modifier
          : nullptr;
  if (additive != nullptr) {
    const int J = game.NumJointActions();
    for (int s = 0; s < game.num_states; ++s) {
      for (int j = 0; j < J; ++j) pot.rewards[s * J + j] += additive->Theta(s, j);
    }
  }
  // Under shaping with an unbounded horizon the discounted F-stream sums to
  // zero and rewards are scaled by gamma, so Phi scales by gamma.
  const double scale =
      modifier != nullptr && modifier->mode == ModifierMode::kShaping
          ? game.discounts[0]
          : 1.0;
  PotentialOracle oracle;
  oracle.values = [game, modifier_copy = modifier ? std::optional<FiniteModifier>(*modifier)
                                                  : std::nullopt](
                      const JointPolicy& p) {
    return ExactValues(game, p, modifier_copy ? &*modifier_copy : nullptr);
  };
  oracle.potential = [game, pot, scale](const JointPolicy& p) {
    game.CheckPolicy(p);
    const std::vector<double> jp = JointActionProbs(game, p);
    return scale * EvaluateReward(pot, jp, pot.rewards, pot.discounts[0]);
  };
  return oracle;
}

double VerifyPotential(const PotentialOracle& oracle,
                       std::span<const DeviationPair> pairs) {
  double worst = 0.0;
  for (const DeviationPair& pr : pairs) {
    const double dv = oracle.values(pr.base)[pr.agent] -
                      oracle.values(pr.deviated)[pr.agent];
    const double dphi = oracle.potential(pr.base) - oracle.potential(pr.deviated);
    worst = std::max(worst, std::abs(dv - dphi));
  }
  return worst;
}

std::vector<DeviationPair> RandomDeviationPairs(const FiniteMarkovGame& game,
                                                int count, uint64_t seed,
                                                double scale) {
  Rng rng = MakeRng(seed, {0x70a1});
  auto random_policy = [&](int agent) {
    TabularPolicy p = game.UniformPolicy(agent);
    for (int s = 0; s < game.num_states; ++s) {
      for (double& l : p.mutable_logits(s)) l = scale * (2.0 * Uniform01(rng) - 1.0);
    }
    return p;
  };
  std::vector<DeviationPair> out;
  for (int c = 0; c < count; ++c) {
    std::vector<TabularPolicy> base;
    for (int i = 0; i < game.num_agents; ++i) base.push_back(random_policy(i));
    DeviationPair pr;
    pr.agent = static_cast<int>(rng() % game.num_agents);
    pr.base = JointPolicy::Independent(base);
    base[pr.agent] = random_policy(pr.agent);
    pr.deviated = JointPolicy::Independent(std::move(base));
    out.push_back(std::move(pr));
  }
  return out;
}

bool ParetoDominates(const FiniteMarkovGame& game, const JointPolicy& a,
                     const JointPolicy& b, const FiniteModifier* modifier) {
  constexpr double kTol = 1e-12;
  const auto va = ExactValues(game, a, modifier);
  const auto vb = ExactValues(game, b, modifier);
  bool strict = false;
  for (int i = 0; i < game.num_agents; ++i) {
    if (va[i] < vb[i] - kTol) return false;
    if (va[i] > vb[i] + kTol) strict = true;
  }
  return strict;
}

std::vector<JointPolicy> EnumeratePureProfiles(const FiniteMarkovGame& game,
                                               int limit) {
  std::vector<std::vector<TabularPolicy>> per_agent;
  double total = 1.0;
  for (int i = 0; i < game.num_agents; ++i) {
    per_agent.push_back(PurePolicies(game, i, limit));
    total *= per_agent.back().size();
  }
  if (total > limit) throw UnsupportedError("profile enumeration exceeds limit");
  std::vector<JointPolicy> out;
  std::vector<size_t> idx(game.num_agents, 0);
  while (true) {
    std::vector<TabularPolicy> p;
    for (int i = 0; i < game.num_agents; ++i) p.push_back(per_agent[i][idx[i]]);
    out.push_back(JointPolicy::Independent(std::move(p)));
    int k = game.num_agents - 1;
    while (k >= 0 && ++idx[k] == per_agent[k].size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

std::vector<JointPolicy> EnumeratePureNe(const FiniteMarkovGame& game,
                                         const FiniteModifier* modifier,
                                         double tol) {
  std::vector<JointPolicy> out;
  for (JointPolicy& p : EnumeratePureProfiles(game)) {
    if (ExactNashGap(game, p, modifier) <= tol) out.push_back(std::move(p));
  }
  return out;
}

bool IsPayoffDominant(const FiniteMarkovGame& game, const JointPolicy& policy,
                      std::span<const JointPolicy> ne_set,
                      std::span<const JointPolicy> profiles,
                      const FiniteModifier* modifier) {
  const bool member = std::any_of(ne_set.begin(), ne_set.end(),
                                  [&](const JointPolicy& ne) {
                                    return SameProbabilities(ne, policy);
                                  });
  if (!member) return false;
  for (const JointPolicy& other : profiles) {
    if (ParetoDominates(game, other, policy, modifier)) return false;
  }
  return true;
}

}  // namespace idesign
