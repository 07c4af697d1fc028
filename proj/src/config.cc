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

#include "idesign/config.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "idesign/errors.h"
#include "idesign/fixtures.h"
#include "idesign/game.h"
#include "idesign/json_util.h"
#include "idesign/rng.h"

namespace idesign {
namespace fs = std::filesystem;
namespace {

nlohmann::json Num(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

const std::vector<std::pair<Experiment, std::string>>& ExperimentNames() {
  static const std::vector<std::pair<Experiment, std::string>> kNames = {
      {Experiment::kBraess, "braess"},
      {Experiment::kNetwork, "network"},
      {Experiment::kCrowdOneShot, "crowd-oneshot"},
      {Experiment::kCrowdDynamic, "crowd-dynamic"},
      {Experiment::kOrderSweep, "order-sweep"},
      {Experiment::kPreserveNe, "preserve-ne"},
  };
  return kNames;
}

bool IsRouting(Experiment e) {
  return e == Experiment::kBraess || e == Experiment::kNetwork ||
         e == Experiment::kOrderSweep;
}

bool IsCrowd(Experiment e) {
  return e == Experiment::kCrowdOneShot || e == Experiment::kCrowdDynamic;
}

void Forbid(const nlohmann::json& j, std::initializer_list<const char*> keys,
            Experiment e) {
  for (const char* k : keys) {
    if (j.contains(k)) {
      throw ConfigError(std::string("config.") + k +
                        ": not used by experiment " + ExperimentName(e));
    }
  }
}

std::pair<double, double> ParseBounds(const nlohmann::json& m,
                                      std::pair<double, double> fallback,
                                      const std::string& where) {
  if (!m.contains("bounds")) return fallback;
  const auto b = Require<std::vector<double>>(m, "bounds", where);
  if (b.size() != 2 || !(b[0] <= 0.0 && b[1] >= 0.0) || !(b[0] < b[1])) {
    throw ConfigError(where + ".bounds: expected [lo, hi] with lo <= 0 <= hi");
  }
  return {b[0], b[1]};
}

FiniteModifier StagShareModifier(const FiniteMarkovGame& game, int order,
                                 double lo, double hi) {
  FiniteModifier m = MakeFiniteModifier(
      game, {{"stag_share", 0.0, 1.0}}, {ActionShareFeature(game, 0)}, order,
      ModifierMode::kShaping);
  const int d = m.params.dimension();
  m.params.set_bounds(std::vector<double>(d, lo), std::vector<double>(d, hi));
  return m;
}

std::ofstream OpenFile(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void WriteJsonFile(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = OpenFile(path);
  out << j.dump(2) << "\n";
}

// Prepends the config hash line to every CSV in `dir` that lacks it.
void StampCsvFiles(const fs::path& dir, const std::string& hash) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  const std::string line = "# config_hash=" + hash + "\n";
  for (const fs::path& p : files) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string body = ss.str();
    if (body.rfind("# config_hash=", 0) == 0) continue;
    std::ofstream out = OpenFile(p);
    out << line << body;
  }
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

ProgressFn MakeProgress(std::ostream* log, const std::string& label) {
  if (log == nullptr) return {};
  return [log, label](const Evaluation& ev, double best) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s k=%d J=%.6g best=%.6g%s\n",
                  label.c_str(), ev.k, ev.J, best, ev.failed ? " failed" : "");
    *log << buf << std::flush;
  };
}

nlohmann::json Invariants(const RunReport& report) {
  bool monotone = true;
  for (size_t k = 1; k < report.best_so_far.size(); ++k) {
    monotone = monotone && report.best_so_far[k] >= report.best_so_far[k - 1];
  }
  bool budget = true;
  for (const Evaluation& e : report.evaluations) {
    if (!e.failed) budget = budget && e.budget_balanced == (e.incentive <= 0.0);
  }
  return {{"best_so_far_monotone", monotone}, {"budget_flag_consistent", budget}};
}

// Baseline at w = 0, the design loop, artifacts for the baseline and the
// best modifier, and the optional continuity probe.
nlohmann::json RunDesign(const DesignProblem& problem,
                         const ModifierParams& zero, const RunConfig& cfg,
                         uint64_t seed, const fs::path& dir,
                         const std::string& hash, std::ostream* log,
                         RunReport* report_out) {
  fs::create_directories(dir / "baseline");
  auto t0 = std::chrono::steady_clock::now();
  const Evaluation baseline = EvaluateJ(problem, zero, cfg.objective, seed);
  const double baseline_seconds = Seconds(t0);
  RunReport report =
      Run(problem, cfg.objective, cfg.bo, seed,
          MakeProgress(log, problem.name() + " seed=" + std::to_string(seed)));
  {
    std::ofstream out = OpenFile(dir / "evaluations.csv");
    report.WriteEvaluationsCsv(out);
  }
  {
    std::ofstream out = OpenFile(dir / "dataset.csv");
    report.dataset.WriteCsv(out);
  }
  const uint64_t artifact_seed = StreamSeed(seed, {0});
  problem.WriteArtifacts(zero, artifact_seed, (dir / "baseline").string());
  nlohmann::json run = {{"seed", seed},
                        {"baseline", EvaluationToJson(baseline)},
                        {"report", report.ToJson()},
                        {"invariants", Invariants(report)}};
  if (report.dataset.best_index >= 0) {
    problem.WriteArtifacts(
        problem.modifier_template().WithCoefficients(report.best().w),
        artifact_seed, dir.string());
  }
  if (cfg.probe) {
    run["continuity"] = ContinuityProbe(problem, cfg.objective,
                                        cfg.probe->pairs, cfg.probe->scales,
                                        StreamSeed(seed, {0xc0}))
                            .ToJson();
  }
  StampCsvFiles(dir, hash);
  StampCsvFiles(dir / "baseline", hash);
  if (log != nullptr) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "timing seed=%llu baseline=%.2fs train=%.2fs bo=%.2fs\n",
                  static_cast<unsigned long long>(seed), baseline_seconds,
                  report.train_seconds, report.bo_seconds);
    *log << buf << std::flush;
  }
  if (report_out != nullptr) *report_out = std::move(report);
  return run;
}

fs::path SeedDir(const fs::path& outdir, uint64_t seed) {
  return outdir / ("seed_" + std::to_string(seed));
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x / v.size();
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s;
}

nlohmann::json RunRouting(const RunConfig& cfg, const fs::path& outdir,
                          const std::string& hash, std::ostream* log) {
  const RoutingDesignProblem problem(cfg.network, cfg.tolls, cfg.trainer,
                                     cfg.periods);
  nlohmann::json runs = nlohmann::json::array();
  std::vector<double> base_rid, best_rid, base_w, best_w, reduction;
  for (uint64_t seed : cfg.seeds) {
    RunReport report;
    nlohmann::json run = RunDesign(problem, problem.ZeroToll(), cfg, seed,
                                   SeedDir(outdir, seed), hash, log, &report);
    const double b = run["baseline"].value("trajectory_reward", 0.0);
    const Evaluation& best = report.best();
    base_rid.push_back(b);
    best_rid.push_back(best.trajectory_reward);
    base_w.push_back(run["baseline"].value("welfare", 0.0));
    best_w.push_back(best.welfare);
    const double red =
        b != 0.0 ? 1.0 - std::abs(best.trajectory_reward) / std::abs(b) : 0.0;
    reduction.push_back(red);
    run["imbalance_reduction"] = Num(red);
    runs.push_back(std::move(run));
  }
  return {{"runs", runs},
          {"aggregate",
           {{"baseline_flow_reward", Num(Mean(base_rid))},
            {"best_flow_reward", Num(Mean(best_rid))},
            {"baseline_welfare", Num(Mean(base_w))},
            {"best_welfare", Num(Mean(best_w))},
            {"imbalance_reduction", Num(Mean(reduction))}}}};
}

nlohmann::json RunCrowd(const RunConfig& cfg, const fs::path& outdir,
                        const std::string& hash, std::ostream* log) {
  const CrowdDesignProblem problem(cfg.world, cfg.targets, cfg.crowd_order,
                                   cfg.crowd_lo, cfg.crowd_hi,
                                   cfg.crowd_trainer, cfg.eval_episodes);
  nlohmann::json runs = nlohmann::json::array();
  std::vector<double> base_kl, best_kl;
  for (uint64_t seed : cfg.seeds) {
    const fs::path dir = SeedDir(outdir, seed);
    RunReport report;
    nlohmann::json run =
        RunDesign(problem, problem.Zero(), cfg, seed, dir, hash, log, &report);
    {
      std::ofstream out = OpenFile(dir / "kl_trace.csv");
      out << "# config_hash=" << hash << "\n";
      out << "k,mean_kl,best_mean_kl\n";
      double best = std::numeric_limits<double>::infinity();
      char buf[128];
      for (const Evaluation& e : report.evaluations) {
        const double kl = e.failed ? std::numeric_limits<double>::infinity()
                                   : -e.trajectory_reward;
        best = std::min(best, kl);
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.k, kl, best);
        out << buf;
      }
    }
    const double b = -run["baseline"].value("trajectory_reward", 0.0);
    const double k = -report.best().trajectory_reward;
    base_kl.push_back(b);
    best_kl.push_back(k);
    run["baseline_mean_kl"] = Num(b);
    run["best_mean_kl"] = Num(k);
    runs.push_back(std::move(run));
  }
  const double mb = Mean(base_kl), mk = Mean(best_kl);
  return {{"runs", runs},
          {"aggregate",
           {{"baseline_mean_kl", Num(mb)},
            {"best_mean_kl", Num(mk)},
            {"kl_ratio", Num(mk / mb)}}}};
}

nlohmann::json RunSweep(const RunConfig& cfg, const fs::path& outdir,
                        const std::string& hash, std::ostream* log) {
  auto factory = [&cfg](int order) -> std::unique_ptr<DesignProblem> {
    TollSpec t = cfg.tolls;
    t.order = order;
    return std::make_unique<RoutingDesignProblem>(cfg.network, t, cfg.trainer,
                                                  cfg.periods);
  };
  auto t0 = std::chrono::steady_clock::now();
  const SweepResult sweep = OrderSweep(factory, cfg.orders, cfg.objective,
                                       cfg.bo, cfg.seeds,
                                       MakeProgress(log, "sweep"));
  nlohmann::json reports = nlohmann::json::array();
  size_t idx = 0;
  for (int order : cfg.orders) {
    for (uint64_t seed : cfg.seeds) {
      const RunReport& r = sweep.reports[idx++];
      const fs::path dir =
          outdir / ("order_" + std::to_string(order)) /
          ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      {
        std::ofstream out = OpenFile(dir / "evaluations.csv");
        r.WriteEvaluationsCsv(out);
      }
      {
        std::ofstream out = OpenFile(dir / "dataset.csv");
        r.dataset.WriteCsv(out);
      }
      StampCsvFiles(dir, hash);
      nlohmann::json rj = r.ToJson();
      rj["order"] = order;
      rj["invariants"] = Invariants(r);
      reports.push_back(std::move(rj));
    }
  }
  {
    std::ofstream out = OpenFile(outdir / "sweep.csv");
    out << "# config_hash=" << hash << "\n";
    out << "order,seed,best_J\n";
    char buf[128];
    for (size_t o = 0; o < cfg.orders.size(); ++o) {
      for (size_t s = 0; s < cfg.seeds.size(); ++s) {
        std::snprintf(buf, sizeof(buf), "%d,%llu,%.17g\n", cfg.orders[o],
                      static_cast<unsigned long long>(cfg.seeds[s]),
                      sweep.best_J[o][s]);
        out << buf;
      }
    }
  }
  // The zero toll is the same modifier at every order.
  nlohmann::json baselines = nlohmann::json::array();
  const RoutingDesignProblem zero_problem(cfg.network, cfg.tolls, cfg.trainer,
                                          cfg.periods);
  for (uint64_t seed : cfg.seeds) {
    const Evaluation b =
        EvaluateJ(zero_problem, zero_problem.ZeroToll(), cfg.objective, seed);
    nlohmann::json bj = EvaluationToJson(b);
    bj["seed"] = seed;
    baselines.push_back(std::move(bj));
  }
  if (log != nullptr) *log << "timing sweep=" << Seconds(t0) << "s\n";
  return {{"sweep", sweep.ToJson()}, {"baselines", baselines},
          {"reports", reports}};
}

nlohmann::json RunPreserve(const RunConfig& cfg, const fs::path& outdir,
                           const std::string& hash, std::ostream* log) {
  const FiniteMarkovGame game = StagHuntWithMemory(cfg.preserve.gamma);
  const FiniteModifier modifier = StagShareModifier(
      game, cfg.preserve_order, cfg.preserve_lo, cfg.preserve_hi);
  const JointPolicy init =
      BiasedPolicy(game, cfg.preserve.init_action, cfg.preserve.init_prob);
  const FiniteDesignProblem problem(game, modifier, cfg.trainer, init);

  // Welfare of the best payoff-dominant pure equilibrium of the original
  // game, the reference the designer should reach.
  const std::vector<JointPolicy> ne = EnumeratePureNe(game, nullptr, 1e-9);
  const std::vector<JointPolicy> profiles = EnumeratePureProfiles(game);
  double dominant_welfare = -std::numeric_limits<double>::infinity();
  int dominant_count = 0;
  for (const JointPolicy& p : ne) {
    if (IsPayoffDominant(game, p, ne, profiles)) {
      ++dominant_count;
      dominant_welfare =
          std::max(dominant_welfare, SocialWelfare(ExactValues(game, p)));
    }
  }
  double risk_welfare = std::numeric_limits<double>::infinity();
  for (const JointPolicy& p : ne) {
    risk_welfare = std::min(risk_welfare, SocialWelfare(ExactValues(game, p)));
  }

  nlohmann::json runs = nlohmann::json::array();
  for (uint64_t seed : cfg.seeds) {
    const fs::path dir = SeedDir(outdir, seed);
    fs::create_directories(dir);
    const Evaluation baseline =
        EvaluateJ(problem, modifier.params, cfg.objective, seed);
    const RunReport report = RunPreservingNe(
        game, modifier, cfg.trainer, init, cfg.bo, cfg.objective.repeats, seed);
    {
      std::ofstream out = OpenFile(dir / "evaluations.csv");
      report.WriteEvaluationsCsv(out);
    }
    {
      std::ofstream out = OpenFile(dir / "dataset.csv");
      report.dataset.WriteCsv(out);
    }
    const Evaluation& best = report.best();
    const TrainResult trained = problem.Train(
        modifier.params.WithCoefficients(best.w), StreamSeed(seed, {0}));
    {
      std::ofstream out = OpenFile(dir / "training.csv");
      trained.diagnostics.WriteCsv(out);
    }
    StampCsvFiles(dir, hash);
    const double gap = ExactNashGap(game, trained.policy);
    const double welfare = SocialWelfare(ExactValues(game, trained.policy));
    nlohmann::json run = {
        {"seed", seed},
        {"baseline", EvaluationToJson(baseline)},
        {"report", report.ToJson()},
        {"invariants", Invariants(report)},
        {"best_policy",
         {{"welfare", Num(welfare)},
          {"gap_original_game", Num(gap)},
          {"stag_probability_start",
           Num(trained.policy.of(0).Probability(game.initial_state, 0))}}}};
    runs.push_back(std::move(run));
    if (log != nullptr) {
      *log << "preserve-ne seed=" << seed << " baseline=" << baseline.J
           << " best=" << best.J << " gap=" << gap << "\n";
    }
  }
  return {{"runs", runs},
          {"equilibria",
           {{"pure_ne", ne.size()},
            {"payoff_dominant", dominant_count},
            {"payoff_dominant_welfare", Num(dominant_welfare)},
            {"lowest_ne_welfare", Num(risk_welfare)}}}};
}

}  // namespace

nlohmann::json TrainerConfigToJson(const TrainerConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"batch_episodes", c.batch_episodes},
          {"actor_learning_rate", c.actor_learning_rate},
          {"critic_learning_rate", c.critic_learning_rate},
          {"entropy_start", c.entropy_start},
          {"entropy_end", c.entropy_end},
          {"convergence_tol", c.convergence_tol},
          {"convergence_window", c.convergence_window},
          {"min_iterations", c.min_iterations}};
}

TrainerConfig TrainerConfigFromJson(const nlohmann::json& j,
                                    const std::string& w) {
  CheckKeys(j,
            {"max_iterations", "batch_episodes", "actor_learning_rate",
             "critic_learning_rate", "entropy_start", "entropy_end",
             "convergence_tol", "convergence_window", "min_iterations"},
            w);
  TrainerConfig c;
  c.max_iterations = Optional<int>(j, "max_iterations", c.max_iterations, w);
  c.batch_episodes = Optional<int>(j, "batch_episodes", c.batch_episodes, w);
  c.actor_learning_rate =
      Optional<double>(j, "actor_learning_rate", c.actor_learning_rate, w);
  c.critic_learning_rate =
      Optional<double>(j, "critic_learning_rate", c.critic_learning_rate, w);
  c.entropy_start = Optional<double>(j, "entropy_start", c.entropy_start, w);
  c.entropy_end = Optional<double>(j, "entropy_end", c.entropy_end, w);
  c.convergence_tol =
      Optional<double>(j, "convergence_tol", c.convergence_tol, w);
  c.convergence_window =
      Optional<int>(j, "convergence_window", c.convergence_window, w);
  c.min_iterations = Optional<int>(j, "min_iterations", c.min_iterations, w);
  try {
    c.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return c;
}

std::string ExperimentName(Experiment e) {
  for (const auto& [k, name] : ExperimentNames()) {
    if (k == e) return name;
  }
  return "unknown";
}

RunConfig RunConfig::FromJson(const nlohmann::json& j,
                              const std::string& base_dir) {
  const std::string w = "config";
  CheckKeys(j,
            {"version", "experiment", "seed", "seeds", "output_dir",
             "objective", "bo", "probe", "network", "modifier", "trainer",
             "periods", "orders", "world", "targets", "crowd_trainer",
             "eval_episodes", "preserve"},
            w);
  const int version = Require<int>(j, "version", w);
  if (version != kConfigVersion) {
    throw ConfigError("config.version: unsupported version " +
                      std::to_string(version));
  }
  RunConfig c;
  const std::string exp = Require<std::string>(j, "experiment", w);
  bool found = false;
  for (const auto& [k, name] : ExperimentNames()) {
    if (name == exp) {
      c.experiment = k;
      found = true;
    }
  }
  if (!found) throw ConfigError("config.experiment: unknown '" + exp + "'");

  if (j.contains("seed") && j.contains("seeds")) {
    throw ConfigError("config.seeds: give either seed or seeds");
  }
  if (j.contains("seed")) c.seeds = {Require<uint64_t>(j, "seed", w)};
  if (j.contains("seeds")) {
    c.seeds = Require<std::vector<uint64_t>>(j, "seeds", w);
    if (c.seeds.empty()) throw ConfigError("config.seeds: must be nonempty");
  }
  if (j.contains("output_dir")) {
    c.output_dir = Require<std::string>(j, "output_dir", w);
  }
  if (j.contains("objective")) c.objective = ObjectiveSpec::FromJson(j["objective"]);
  if (j.contains("bo")) c.bo = BoConfig::FromJson(j["bo"]);
  if (j.contains("probe")) {
    const auto& p = j["probe"];
    CheckKeys(p, {"pairs", "scales"}, "config.probe");
    ProbeSpec s;
    s.pairs = Optional<int>(p, "pairs", s.pairs, "config.probe");
    s.scales = Optional<std::vector<double>>(p, "scales", s.scales, "config.probe");
    if (s.pairs < 1 || s.scales.empty()) {
      throw ConfigError("config.probe: pairs >= 1 and nonempty scales required");
    }
    c.probe = s;
  }
  const Experiment e = c.experiment;

  if (IsRouting(e)) {
    Forbid(j, {"world", "targets", "crowd_trainer", "eval_episodes", "preserve"}, e);
    if (j.contains("network")) {
      const auto& n = j["network"];
      if (n.is_string()) {
        fs::path p = n.get<std::string>();
        if (p.is_relative()) p = fs::path(base_dir) / p;
        c.network = LoadNetworkFile(p.string());
      } else {
        c.network = RoutingNetwork::FromJson(n);
      }
    } else if (e == Experiment::kNetwork) {
      throw ConfigError("config.network: missing");
    } else {
      c.network = BraessNetwork(20);
    }
    c.network.Validate();
    if (j.contains("modifier")) {
      const auto& m = j["modifier"];
      const std::string mw = "config.modifier";
      CheckKeys(m, {"order", "toll_edges", "bounds"}, mw);
      c.tolls.order = Optional<int>(m, "order", c.tolls.order, mw);
      const auto [lo, hi] = ParseBounds(m, {c.tolls.lo, c.tolls.hi}, mw);
      c.tolls.lo = lo;
      c.tolls.hi = hi;
      if (m.contains("toll_edges")) {
        for (const std::string& label :
             Require<std::vector<std::string>>(m, "toll_edges", mw)) {
          try {
            c.tolls.edges.push_back(c.network.EdgeIndex(label));
          } catch (const ConfigError& err) {
            throw ConfigError(mw + ".toll_edges: " + err.what());
          }
        }
        if (c.tolls.edges.empty()) {
          throw ConfigError(mw + ".toll_edges: must be nonempty");
        }
      }
    }
    if (j.contains("trainer")) c.trainer = TrainerConfigFromJson(j["trainer"]);
    c.periods = Optional<int>(j, "periods", 1, w);
    if (c.periods < 1) throw ConfigError("config.periods: must be >= 1");
    if (e == Experiment::kOrderSweep) {
      c.orders = Require<std::vector<int>>(j, "orders", w);
      if (c.orders.empty()) throw ConfigError("config.orders: must be nonempty");
      for (int o : c.orders) {
        if (o < 0) throw ConfigError("config.orders: must be >= 0");
      }
    } else {
      Forbid(j, {"orders"}, e);
    }
    if (c.tolls.order < 0) throw ConfigError("config.modifier.order: must be >= 0");
  } else if (IsCrowd(e)) {
    Forbid(j, {"network", "trainer", "periods", "orders", "preserve"}, e);
    c.world = CrowdWorld::FromJson(Require<nlohmann::json>(j, "world", w));
    const bool oneshot = e == Experiment::kCrowdOneShot;
    if (oneshot != (c.world.horizon == 1)) {
      throw ConfigError(std::string("config.world.horizon: ") +
                        (oneshot ? "crowd-oneshot needs horizon 1"
                                 : "crowd-dynamic needs horizon > 1"));
    }
    c.targets_json = Require<nlohmann::json>(j, "targets", w);
    c.targets = TargetSchedule::FromJson(c.targets_json, c.world);
    if (j.contains("modifier")) {
      const auto& m = j["modifier"];
      const std::string mw = "config.modifier";
      CheckKeys(m, {"order", "bounds"}, mw);
      c.crowd_order = Optional<int>(m, "order", c.crowd_order, mw);
      const auto [lo, hi] = ParseBounds(m, {c.crowd_lo, c.crowd_hi}, mw);
      c.crowd_lo = lo;
      c.crowd_hi = hi;
    }
    if (c.crowd_order < 0) throw ConfigError("config.modifier.order: must be >= 0");
    if (j.contains("crowd_trainer")) {
      c.crowd_trainer = CrowdTrainerConfig::FromJson(j["crowd_trainer"]);
    }
    c.eval_episodes = Optional<int>(j, "eval_episodes", c.eval_episodes, w);
    if (c.eval_episodes < 1) throw ConfigError("config.eval_episodes: must be >= 1");
  } else {
    Forbid(j, {"network", "periods", "orders", "world", "targets",
               "crowd_trainer", "eval_episodes"}, e);
    if (j.contains("objective") && j["objective"].contains("kind") &&
        j["objective"]["kind"] != "welfare") {
      throw ConfigError("config.objective.kind: preserve-ne uses welfare");
    }
    c.objective.kind = ObjectiveKind::kWelfare;
    if (j.contains("preserve")) {
      const auto& p = j["preserve"];
      const std::string pw = "config.preserve";
      CheckKeys(p, {"gamma", "init_action", "init_prob"}, pw);
      c.preserve.gamma = Optional<double>(p, "gamma", c.preserve.gamma, pw);
      c.preserve.init_action =
          Optional<int>(p, "init_action", c.preserve.init_action, pw);
      c.preserve.init_prob =
          Optional<double>(p, "init_prob", c.preserve.init_prob, pw);
      if (!(c.preserve.gamma > 0.0 && c.preserve.gamma < 1.0)) {
        throw ConfigError(pw + ".gamma: must be in (0, 1)");
      }
      if (c.preserve.init_action < 0 || c.preserve.init_action > 1) {
        throw ConfigError(pw + ".init_action: must be 0 or 1");
      }
      if (!(c.preserve.init_prob > 0.0 && c.preserve.init_prob < 1.0)) {
        throw ConfigError(pw + ".init_prob: must be in (0, 1)");
      }
    }
    if (j.contains("modifier")) {
      const auto& m = j["modifier"];
      const std::string mw = "config.modifier";
      CheckKeys(m, {"order", "bounds"}, mw);
      c.preserve_order = Optional<int>(m, "order", c.preserve_order, mw);
      const auto [lo, hi] = ParseBounds(m, {c.preserve_lo, c.preserve_hi}, mw);
      c.preserve_lo = lo;
      c.preserve_hi = hi;
    }
    if (c.preserve_order < 0) throw ConfigError("config.modifier.order: must be >= 0");
    if (j.contains("trainer")) c.trainer = TrainerConfigFromJson(j["trainer"]);
  }
  return c;
}

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json j;
  j["version"] = kConfigVersion;
  j["experiment"] = ExperimentName(experiment);
  j["seeds"] = seeds;
  if (output_dir) j["output_dir"] = *output_dir;
  j["objective"] = objective.ToJson();
  j["bo"] = bo.ToJson();
  if (probe) j["probe"] = {{"pairs", probe->pairs}, {"scales", probe->scales}};
  if (IsRouting(experiment)) {
    j["network"] = network.ToJson();
    nlohmann::json edges = nlohmann::json::array();
    for (int e : tolls.edges) edges.push_back(network.edges[e].label());
    j["modifier"] = {{"order", tolls.order}, {"bounds", {tolls.lo, tolls.hi}}};
    if (!edges.empty()) j["modifier"]["toll_edges"] = edges;
    j["trainer"] = TrainerConfigToJson(trainer);
    j["periods"] = periods;
    if (experiment == Experiment::kOrderSweep) j["orders"] = orders;
  } else if (IsCrowd(experiment)) {
    j["world"] = world.ToJson();
    j["targets"] = targets_json;
    j["modifier"] = {{"order", crowd_order}, {"bounds", {crowd_lo, crowd_hi}}};
    j["crowd_trainer"] = crowd_trainer.ToJson();
    j["eval_episodes"] = eval_episodes;
  } else {
    j["preserve"] = {{"gamma", preserve.gamma},
                     {"init_action", preserve.init_action},
                     {"init_prob", preserve.init_prob}};
    j["modifier"] = {{"order", preserve_order},
                     {"bounds", {preserve_lo, preserve_hi}}};
    j["trainer"] = TrainerConfigToJson(trainer);
  }
  return j;
}

std::string RunConfig::Hash() const {
  nlohmann::json j = ToJson();
  j.erase("output_dir");
  return ConfigHash(j);
}

void ApplyOverride(nlohmann::json& j, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "': expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  nlohmann::json* node = &j;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) {
      throw ConfigError("override '" + assignment + "': empty key segment");
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = nlohmann::json::object();
    node = &(*node)[part];
    if (!node->is_object()) {
      throw ConfigError("override '" + assignment + "': " + part +
                        " is not an object");
    }
    start = dot + 1;
  }
}

nlohmann::json ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string ResolveOutputDir(const RunConfig& cfg,
                             const std::string& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (cfg.output_dir) return *cfg.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env) {
    return env;
  }
  return "idesign_out";
}

nlohmann::json RunExperiment(const RunConfig& cfg, const std::string& outdir,
                             std::ostream* log) {
  const fs::path dir = outdir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("output_dir: cannot create " + outdir);
  }
  const std::string hash = cfg.Hash();
  nlohmann::json summary = {{"config_hash", hash},
                            {"experiment", ExperimentName(cfg.experiment)},
                            {"config", cfg.ToJson()}};
  summary["config"].erase("output_dir");
  nlohmann::json body;
  switch (cfg.experiment) {
    case Experiment::kBraess:
    case Experiment::kNetwork:
      body = RunRouting(cfg, dir, hash, log);
      break;
    case Experiment::kCrowdOneShot:
    case Experiment::kCrowdDynamic:
      body = RunCrowd(cfg, dir, hash, log);
      break;
    case Experiment::kOrderSweep:
      body = RunSweep(cfg, dir, hash, log);
      break;
    case Experiment::kPreserveNe:
      body = RunPreserve(cfg, dir, hash, log);
      break;
  }
  summary.update(body);
  WriteJsonFile(dir / "summary.json", summary);
  return summary;
}

bool SummaryInvariantsHold(const nlohmann::json& summary,
                           std::vector<std::string>* failures) {
  bool ok = true;
  auto scan = [&](const nlohmann::json& list, const std::string& label) {
    for (const auto& r : list) {
      if (!r.contains("invariants")) continue;
      for (const auto& [name, value] : r["invariants"].items()) {
        if (value.is_boolean() && !value.get<bool>()) {
          ok = false;
          if (failures != nullptr) {
            failures->push_back(label + " seed " +
                                std::to_string(r.value("seed", 0ULL)) + ": " +
                                name);
          }
        }
      }
    }
  };
  if (summary.contains("runs")) scan(summary["runs"], "run");
  if (summary.contains("reports")) scan(summary["reports"], "sweep");
  return ok;
}

}  // namespace idesign
