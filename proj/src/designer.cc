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

#include "idesign/designer.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

#include "idesign/errors.h"
#include "idesign/json_util.h"
#include "idesign/rng.h"

namespace idesign {
namespace {

std::atomic<int> g_max_threads{1};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

nlohmann::json Num(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

void ObjectiveSpec::Validate() const {
  if (repeats < 1) throw ConfigError("objective.repeats: must be >= 1");
  if (!std::isfinite(lambda)) throw ConfigError("objective.lambda: must be finite");
}

nlohmann::json ObjectiveSpec::ToJson() const {
  return {{"kind", kind == ObjectiveKind::kTrajectory ? "trajectory" : "welfare"},
          {"lambda", lambda},
          {"repeats", repeats}};
}

ObjectiveSpec ObjectiveSpec::FromJson(const nlohmann::json& j) {
  const std::string w = "objective";
  CheckKeys(j, {"kind", "lambda", "repeats"}, w);
  ObjectiveSpec o;
  const std::string kind = Optional<std::string>(j, "kind", "trajectory", w);
  if (kind == "trajectory") {
    o.kind = ObjectiveKind::kTrajectory;
  } else if (kind == "welfare") {
    o.kind = ObjectiveKind::kWelfare;
  } else {
    throw ConfigError("objective.kind: expected trajectory or welfare");
  }
  o.lambda = Optional<double>(j, "lambda", 0.0, w);
  o.repeats = Optional<int>(j, "repeats", o.repeats, w);
  o.Validate();
  return o;
}

void DesignProblem::WriteArtifacts(const ModifierParams&, uint64_t,
                                   const std::string&) const {}

void SetMaxThreads(int n) { g_max_threads = std::max(1, n); }
int MaxThreads() { return g_max_threads; }

Evaluation EvaluateJ(const DesignProblem& problem, const ModifierParams& w,
                     const ObjectiveSpec& obj, uint64_t seed) {
  obj.Validate();
  Evaluation ev;
  ev.w.assign(w.coefficients().begin(), w.coefficients().end());
  const double n = obj.repeats;
  double traj = 0.0, gap = 0.0;
  bool gap_known = true;
  std::vector<Outcome> outcomes(obj.repeats);
  std::vector<std::exception_ptr> errors(obj.repeats);
  auto work = [&](int r) {
    try {
      outcomes[r] =
          problem.Evaluate(w, StreamSeed(seed, {static_cast<uint64_t>(r)}));
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };
  const int workers = std::min(MaxThreads(), obj.repeats);
  if (workers <= 1) {
    for (int r = 0; r < obj.repeats; ++r) work(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (int r = next++; r < obj.repeats; r = next++) work(r);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  try {
    for (int r = 0; r < obj.repeats; ++r) {
      if (errors[r]) std::rethrow_exception(errors[r]);
      const Outcome& o = outcomes[r];
      const double reward = obj.kind == ObjectiveKind::kTrajectory
                                ? o.trajectory_reward
                                : o.welfare;
      if (std::isnan(reward)) {
        throw UnsupportedError(problem.name() +
                               ": objective kind not available");
      }
      ev.repeat_J.push_back(reward - obj.lambda * o.incentive);
      traj += o.trajectory_reward / n;
      ev.welfare += o.welfare / n;
      ev.incentive += o.incentive / n;
      ev.iterations += o.iterations / n;
      ev.converged_repeats += o.converged ? 1 : 0;
      if (std::isnan(o.gap)) {
        gap_known = false;
      } else {
        gap += o.gap / n;
      }
    }
  } catch (const TrainingError& e) {
    ev.failed = true;
    ev.error = e.what();
  } catch (const EvaluationError& e) {
    ev.failed = true;
    ev.error = e.what();
  } catch (const NumericError& e) {
    ev.failed = true;
    ev.error = e.what();
  }
  if (ev.failed) {
    ev.J = -std::numeric_limits<double>::infinity();
    return ev;
  }
  ev.J = 0.0;
  for (double j : ev.repeat_J) ev.J += j / n;
  ev.trajectory_reward = traj;
  if (gap_known) ev.gap = gap;
  ev.budget_balanced = ev.incentive <= 0.0;
  return ev;
}

void BoConfig::Validate() const {
  if (K < 1) throw ConfigError("bo.K: must be >= 1");
  if (proposal.n_candidates < 1) throw ConfigError("bo.n_candidates: must be >= 1");
  if (proposal.refine_passes < 0) throw ConfigError("bo.refine_passes: must be >= 0");
  if (!(proposal.xi >= 0.0)) throw ConfigError("bo.xi: must be >= 0");
}

nlohmann::json BoConfig::ToJson() const {
  nlohmann::json j = {{"K", K},
                      {"n_candidates", proposal.n_candidates},
                      {"refine_passes", proposal.refine_passes},
                      {"xi", proposal.xi}};
  j["hyper"] = hyper ? hyper->ToJson() : nlohmann::json("auto");
  return j;
}

BoConfig BoConfig::FromJson(const nlohmann::json& j) {
  const std::string w = "bo";
  CheckKeys(j, {"K", "n_candidates", "refine_passes", "xi", "hyper"}, w);
  BoConfig b;
  b.K = Optional<int>(j, "K", b.K, w);
  b.proposal.n_candidates =
      Optional<int>(j, "n_candidates", b.proposal.n_candidates, w);
  b.proposal.refine_passes =
      Optional<int>(j, "refine_passes", b.proposal.refine_passes, w);
  b.proposal.xi = Optional<double>(j, "xi", b.proposal.xi, w);
  if (j.contains("hyper") && !(j["hyper"].is_string() && j["hyper"] == "auto")) {
    const auto& h = j["hyper"];
    CheckKeys(h, {"signal_var", "lengthscale", "lengthscales", "noise_var"},
              "bo.hyper");
    GpHyper g;
    g.signal_var = Optional<double>(h, "signal_var", g.signal_var, "bo.hyper");
    g.lengthscale = Optional<double>(h, "lengthscale", g.lengthscale, "bo.hyper");
    g.lengthscales = Optional<std::vector<double>>(h, "lengthscales", {}, "bo.hyper");
    g.noise_var = Optional<double>(h, "noise_var", g.noise_var, "bo.hyper");
    b.hyper = g;
  }
  b.Validate();
  return b;
}

nlohmann::json EvaluationToJson(const Evaluation& e) {
  nlohmann::json r = {{"k", e.k},
                      {"w", e.w},
                      {"J", Num(e.J)},
                      {"failed", e.failed},
                      {"trajectory_reward", Num(e.trajectory_reward)},
                      {"welfare", Num(e.welfare)},
                      {"incentive", Num(e.incentive)},
                      {"budget_balanced", e.budget_balanced},
                      {"gap", Num(e.gap)},
                      {"iterations", e.iterations},
                      {"converged_repeats", e.converged_repeats}};
  nlohmann::json rj = nlohmann::json::array();
  for (double x : e.repeat_J) rj.push_back(Num(x));
  r["repeat_J"] = rj;
  if (e.failed) r["error"] = e.error;
  return r;
}

const Evaluation& RunReport::best() const {
  if (dataset.best_index < 0) throw ConfigError("report: no evaluations");
  return evaluations[dataset.best_index];
}

nlohmann::json RunReport::ToJson() const {
  nlohmann::json j;
  j["problem"] = problem;
  j["seed"] = seed;
  j["objective"] = objective.ToJson();
  j["K"] = evaluations.size();
  if (dataset.best_index >= 0) {
    const Evaluation& b = best();
    j["best"] = {{"k", b.k}, {"w", b.w}, {"J", Num(b.J)},
                 {"trajectory_reward", Num(b.trajectory_reward)},
                 {"welfare", Num(b.welfare)}};
  }
  j["evaluations"] = nlohmann::json::array();
  for (size_t k = 0; k < evaluations.size(); ++k) {
    nlohmann::json r = EvaluationToJson(evaluations[k]);
    r["best_so_far"] = Num(best_so_far[k]);
    if (k < gp_hyper.size()) r["gp"] = gp_hyper[k];
    j["evaluations"].push_back(std::move(r));
  }
  return j;
}

void RunReport::WriteEvaluationsCsv(std::ostream& os) const {
  os << "k,J,best_so_far,trajectory_reward,welfare,incentive,budget_balanced,"
        "gap,iterations,converged_repeats,failed\n";
  char buf[512];
  for (size_t k = 0; k < evaluations.size(); ++k) {
    const Evaluation& e = evaluations[k];
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%d,%d\n",
                  e.k, e.J, best_so_far[k], e.trajectory_reward, e.welfare,
                  e.incentive, e.budget_balanced ? 1 : 0, e.gap, e.iterations,
                  e.converged_repeats, e.failed ? 1 : 0);
    os << buf;
  }
}

RunReport Run(const DesignProblem& problem, const ObjectiveSpec& obj,
              const BoConfig& bo, uint64_t seed, const ProgressFn& progress) {
  bo.Validate();
  obj.Validate();
  const ModifierParams& tmpl = problem.modifier_template();
  const std::vector<double>& lower = tmpl.lower();
  const std::vector<double>& upper = tmpl.upper();
  RunReport report;
  report.problem = problem.name();
  report.seed = seed;
  report.objective = obj;

  std::vector<double> w = ProposeNext(nullptr, lower, upper, 0.0, bo.proposal,
                                      StreamSeed(seed, {0}));
  for (int k = 0; k < bo.K; ++k) {
    auto t0 = std::chrono::steady_clock::now();
    // Every candidate is trained with the same seeds (common random numbers).
    Evaluation ev = EvaluateJ(problem, tmpl.WithCoefficients(w), obj, seed);
    report.train_seconds += Seconds(t0);
    ev.k = k;
    report.dataset.Add(w, ev.J);
    const double best = report.dataset.best_J();
    report.best_so_far.push_back(best);
    report.evaluations.push_back(ev);
    if (progress) progress(ev, best);
    if (k + 1 == bo.K) break;

    t0 = std::chrono::steady_clock::now();
    std::optional<GpSurrogate> gp;
    if (std::isfinite(best)) {
      gp = GpSurrogate::Fit(report.dataset.w, report.dataset.J, lower, upper,
                            bo.hyper);
      report.gp_hyper.push_back(gp->hyper().ToJson());
    } else {
      report.gp_hyper.push_back(nullptr);
    }
    const std::vector<double>* incumbent =
        std::isfinite(best) ? &report.dataset.w[report.dataset.best_index]
                            : nullptr;
    w = ProposeNext(gp ? &*gp : nullptr, lower, upper, best, bo.proposal,
                    StreamSeed(seed, {static_cast<uint64_t>(k) + 1}),
                    incumbent);
    report.bo_seconds += Seconds(t0);
  }
  return report;
}

nlohmann::json SweepResult::ToJson() const {
  nlohmann::json j;
  j["orders"] = orders;
  j["seeds"] = seeds;
  j["best_J"] = nlohmann::json::array();
  for (const auto& row : best_J) {
    nlohmann::json r = nlohmann::json::array();
    for (double x : row) r.push_back(Num(x));
    j["best_J"].push_back(r);
  }
  nlohmann::json m = nlohmann::json::array();
  for (double x : median) m.push_back(Num(x));
  j["median_best_J"] = m;
  return j;
}

double Median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median: empty input");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SweepResult OrderSweep(
    const std::function<std::unique_ptr<DesignProblem>(int order)>& factory,
    const std::vector<int>& orders, const ObjectiveSpec& obj,
    const BoConfig& bo, const std::vector<uint64_t>& seeds,
    const ProgressFn& progress) {
  if (orders.empty()) throw ConfigError("order_sweep: orders must be nonempty");
  if (seeds.empty()) throw ConfigError("order_sweep: seeds must be nonempty");
  SweepResult res;
  res.orders = orders;
  res.seeds = seeds;
  for (int order : orders) {
    const std::unique_ptr<DesignProblem> problem = factory(order);
    std::vector<double> row;
    for (uint64_t s : seeds) {
      RunReport r = Run(*problem, obj, bo, s, progress);
      row.push_back(r.dataset.best_J());
      res.reports.push_back(std::move(r));
    }
    res.median.push_back(Median(row));
    res.best_J.push_back(std::move(row));
  }
  return res;
}

nlohmann::json ContinuityReport::ToJson() const {
  nlohmann::json r = nlohmann::json::array();
  for (double x : max_ratio) r.push_back(Num(x));
  return {{"scales", scales}, {"max_ratio", r}, {"flagged", flagged}};
}

ContinuityReport ContinuityProbe(const DesignProblem& problem,
                                 const ObjectiveSpec& obj, int pairs,
                                 const std::vector<double>& scales,
                                 uint64_t seed) {
  if (pairs < 1 || scales.empty()) throw ConfigError("continuity: need pairs and scales");
  const ModifierParams& tmpl = problem.modifier_template();
  const int d = tmpl.dimension();
  Rng rng = MakeRng(seed, {0xc0});
  ContinuityReport rep;
  rep.scales = scales;
  rep.max_ratio.assign(scales.size(), 0.0);
  for (int p = 0; p < pairs; ++p) {
    std::vector<double> w(d), dir(d);
    double norm = 0.0;
    for (int k = 0; k < d; ++k) {
      w[k] = tmpl.lower()[k] + Uniform01(rng) * (tmpl.upper()[k] - tmpl.lower()[k]);
      dir[k] = StandardNormal(rng);
      norm += dir[k] * dir[k];
    }
    norm = std::sqrt(norm);
    const double j0 = EvaluateJ(problem, tmpl.WithCoefficients(w), obj, seed).J;
    for (size_t s = 0; s < scales.size(); ++s) {
      std::vector<double> w2(d);
      for (int k = 0; k < d; ++k) {
        // Step back into the box instead of leaving it.
        const double step = scales[s] * dir[k] / norm;
        w2[k] = w[k] + step;
        if (w2[k] > tmpl.upper()[k] || w2[k] < tmpl.lower()[k]) w2[k] = w[k] - step;
      }
      double dist = 0.0;
      for (int k = 0; k < d; ++k) dist += (w2[k] - w[k]) * (w2[k] - w[k]);
      const double j1 = EvaluateJ(problem, tmpl.WithCoefficients(w2), obj, seed).J;
      if (std::isfinite(j0) && std::isfinite(j1)) {
        rep.max_ratio[s] =
            std::max(rep.max_ratio[s], std::abs(j1 - j0) / std::sqrt(dist));
      }
    }
  }
  for (size_t s = 1; s < scales.size(); ++s) {
    const double a = rep.max_ratio[s - 1], b = rep.max_ratio[s];
    if (a > 0.0 && b > 10.0 * a) rep.flagged = true;
    if (a == 0.0 && b > 0.0) rep.flagged = true;
  }
  return rep;
}

}  // namespace idesign
