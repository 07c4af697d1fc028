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

#include "idesign/marl.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>

#include "idesign/errors.h"

namespace idesign {

void TrainerConfig::Validate() const {
  if (max_iterations < 1) throw ConfigError("trainer.max_iterations must be >= 1");
  if (batch_episodes < 1) throw ConfigError("trainer.batch_episodes must be >= 1");
  if (!(actor_learning_rate > 0.0)) {
    throw ConfigError("trainer.actor_learning_rate must be > 0");
  }
  if (!(critic_learning_rate > 0.0)) {
    throw ConfigError("trainer.critic_learning_rate must be > 0");
  }
  if (!(convergence_tol > 0.0)) throw ConfigError("trainer.convergence_tol must be > 0");
  if (convergence_window < 2) throw ConfigError("trainer.convergence_window must be >= 2");
}

PolicyProbs::PolicyProbs(const JointPolicy& policy) : shared_(policy.shared) {
  for (const TabularPolicy& p : policy.policies) {
    flat_.push_back(p.AllProbabilities());
    std::vector<int> off(p.num_observations() + 1, 0);
    for (int o = 0; o < p.num_observations(); ++o) {
      off[o + 1] = off[o] + p.num_actions(o);
    }
    offsets_.push_back(std::move(off));
  }
}

bool HasConverged(std::span<const std::vector<double>> history, double tol,
                  int window) {
  if (window < 1 || static_cast<int>(history.size()) < window) {
    throw ConfigError("has_converged: history shorter than window");
  }
  const size_t first = history.size() - window;
  const size_t dim = history[first].size();
  for (size_t k = 0; k < dim; ++k) {
    double lo = history[first][k], hi = lo;
    for (size_t h = first + 1; h < history.size(); ++h) {
      lo = std::min(lo, history[h][k]);
      hi = std::max(hi, history[h][k]);
    }
    if (hi - lo > tol) return false;
  }
  return true;
}

double SocialWelfare(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double SocialWelfare(const ValueEstimate& values) {
  return SocialWelfare(values.values);
}

void TrainDiagnostics::WriteCsv(std::ostream& os) const {
  os << "iteration";
  for (size_t i = 0; i < agent_returns.size(); ++i) os << ",return_" << i;
  os << ",mean_return,welfare,policy_change\n";
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    os << ',' << buf;
  };
  for (size_t m = 0; m < mean_return.size(); ++m) {
    os << m;
    for (const auto& r : agent_returns) put(r[m]);
    put(mean_return[m]);
    put(welfare[m]);
    put(policy_change[m]);
    os << '\n';
  }
}

TrainResult Train(const EpisodicEnv& env, const TrainerConfig& cfg,
                  const TrainOptions& options) {
  cfg.Validate();
  const int N = env.num_agents();
  const int models = options.shared ? 1 : N;

  TrainResult result;
  if (options.initial_policy) {
    result.policy = *options.initial_policy;
  } else {
    std::vector<TabularPolicy> p;
    for (int k = 0; k < models; ++k) {
      p.emplace_back(env.ActionsPerObservation(k));
    }
    result.policy = options.shared ? JointPolicy::Shared(std::move(p[0]), N)
                                   : JointPolicy::Independent(std::move(p));
  }
  if (result.policy.shared != options.shared ||
      result.policy.num_agents != N) {
    throw ConfigError("train: initial policy does not match the environment");
  }
  for (int k = 0; k < models; ++k) {
    result.critic.values.emplace_back(
        result.policy.policies[k].num_observations(), 0.0);
  }

  TrainDiagnostics& diag = result.diagnostics;
  const bool track = N <= options.max_tracked_agents;
  if (track) diag.agent_returns.assign(N, {});

  // Scratch buffers reused across iterations.
  std::vector<std::vector<AgentTransition>> batch(N);
  std::vector<std::vector<double>> delta_sum(models), visits(models),
      grad(models);
  std::deque<std::vector<double>> history;
  std::vector<double> prev_probs;
  for (int k = 0; k < models; ++k) {
    const auto p = result.policy.policies[k].AllProbabilities();
    prev_probs.insert(prev_probs.end(), p.begin(), p.end());
  }

  for (int m = 0; m < cfg.max_iterations; ++m) {
    const PolicyProbs probs(result.policy);
    for (auto& b : batch) b.clear();
    for (int e = 0; e < cfg.batch_episodes; ++e) {
      env.SampleEpisode(probs,
                        StreamSeed(cfg.seed, {static_cast<uint64_t>(m),
                                              static_cast<uint64_t>(e)}),
                        batch);
    }

    // Batch-mean discounted return per agent, from episode boundaries: a
    // transition whose obs follows a terminal one starts a new episode.
    double mean_ret = 0.0;
    for (int i = 0; i < N; ++i) {
      const double g = env.Discount(i);
      double total = 0.0, disc = 1.0;
      for (const AgentTransition& tr : batch[i]) {
        total += disc * tr.reward;
        disc = tr.next_obs < 0 ? 1.0 : disc * g;
      }
      const double r = total / cfg.batch_episodes;
      mean_ret += r;
      if (track) diag.agent_returns[i].push_back(r);
    }
    diag.welfare.push_back(mean_ret);
    diag.mean_return.push_back(mean_ret / N);

    const double progress =
        cfg.max_iterations > 1 ? static_cast<double>(m) / (cfg.max_iterations - 1)
                               : 1.0;
    const double entropy_coef =
        cfg.entropy_start + (cfg.entropy_end - cfg.entropy_start) * progress;

    for (int k = 0; k < models; ++k) {
      const TabularPolicy& pol = result.policy.policies[k];
      const int n_obs = pol.num_observations();
      delta_sum[k].assign(n_obs, 0.0);
      visits[k].assign(n_obs, 0.0);
      grad[k].assign(pol.all_logits().size(), 0.0);
    }
    // Each model sees only the transitions of the agents it controls.
    for (int i = 0; i < N; ++i) {
      const int k = options.shared ? 0 : i;
      const double g = env.Discount(i);
      const std::vector<double>& V = result.critic.values[k];
      const TabularPolicy& pol = result.policy.policies[k];
      for (const AgentTransition& tr : batch[i]) {
        const double next_v = tr.next_obs < 0 ? 0.0 : V[tr.next_obs];
        const double delta = tr.reward + g * next_v - V[tr.obs];
        delta_sum[k][tr.obs] += delta;
        visits[k][tr.obs] += 1.0;
        const auto row = probs.Row(i, tr.obs);
        const int n_act = pol.num_actions(tr.obs);
        const size_t base = pol.logits(tr.obs).data() - pol.all_logits().data();
        for (int a = 0; a < n_act; ++a) {
          grad[k][base + a] += delta * ((a == tr.action ? 1.0 : 0.0) - row[a]);
        }
      }
    }
    for (int k = 0; k < models; ++k) {
      TabularPolicy& pol = result.policy.policies[k];
      std::vector<double>& V = result.critic.values[k];
      for (int o = 0; o < pol.num_observations(); ++o) {
        if (visits[k][o] == 0.0) continue;
        V[o] += cfg.critic_learning_rate * delta_sum[k][o] / visits[k][o];
        const auto row = probs.Row(k, o);
        auto logits = pol.mutable_logits(o);
        const size_t base = logits.data() - pol.all_logits().data();
        double entropy = 0.0;
        for (double p : row) entropy -= p > 0.0 ? p * std::log(p) : 0.0;
        for (size_t a = 0; a < logits.size(); ++a) {
          const double p = row[a];
          const double dH = p > 0.0 ? -p * (std::log(p) + entropy) : 0.0;
          logits[a] += cfg.actor_learning_rate *
                       (grad[k][base + a] / visits[k][o] + entropy_coef * dH);
          if (!std::isfinite(logits[a])) {
            throw TrainingError("train: non-finite logit", m);
          }
        }
        if (!std::isfinite(V[o])) throw TrainingError("train: non-finite value", m);
      }
    }

    std::vector<double> now;
    now.reserve(prev_probs.size());
    for (int k = 0; k < models; ++k) {
      const auto p = result.policy.policies[k].AllProbabilities();
      now.insert(now.end(), p.begin(), p.end());
    }
    double change = 0.0;
    for (size_t q = 0; q < now.size(); ++q) {
      change = std::max(change, std::abs(now[q] - prev_probs[q]));
    }
    diag.policy_change.push_back(change);
    prev_probs = now;
    history.push_back(std::move(now));
    if (static_cast<int>(history.size()) > cfg.convergence_window) {
      history.pop_front();
    }
    if (options.on_iteration) options.on_iteration(m, result.policy);
    diag.iterations = m + 1;

    if (m + 1 >= cfg.min_iterations &&
        static_cast<int>(history.size()) == cfg.convergence_window) {
      const std::vector<std::vector<double>> h(history.begin(), history.end());
      if (HasConverged(h, cfg.convergence_tol, cfg.convergence_window)) {
        diag.converged = true;
        diag.convergence_iteration = m;
        break;
      }
    }
  }
  return result;
}

FiniteGameEnv::FiniteGameEnv(FiniteMarkovGame game,
                             std::optional<FiniteModifier> modifier)
    : game_(std::move(game)),
      modifier_(std::move(modifier)),
      horizon_(game_.EffectiveHorizon()) {
  game_.Validate();
}

std::vector<int> FiniteGameEnv::ActionsPerObservation(int agent) const {
  return std::vector<int>(game_.num_states, game_.num_actions[agent]);
}

void FiniteGameEnv::SampleEpisode(
    const PolicyProbs& probs, uint64_t seed,
    std::vector<std::vector<AgentTransition>>& out) const {
  const int N = game_.num_agents;
  Rng rng = MakeRng(seed, {0});
  std::vector<int> actions(N);
  int s = game_.initial_state;
  std::optional<double> prev_theta;
  for (int t = 0; t < horizon_; ++t) {
    for (int i = 0; i < N; ++i) actions[i] = SampleIndex(probs.Row(i, s), rng);
    const int joint = game_.JointIndex(actions);
    const int next = game_.SampleNext(s, joint, rng);
    const double theta = modifier_ ? modifier_->Theta(s, joint) : 0.0;
    const bool last = t + 1 == horizon_;
    for (int i = 0; i < N; ++i) {
      double r = game_.Reward(i, s, joint);
      if (modifier_) {
        if (modifier_->mode == ModifierMode::kAdditive) {
          r += theta;
        } else {
          const double g = game_.discounts[i];
          r = g * r + ShapingTerm(g, prev_theta, theta);
        }
      }
      out[i].push_back({s, actions[i], r, last ? -1 : next});
    }
    prev_theta = theta;
    s = next;
  }
}

}  // namespace idesign
