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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any failed. The default mode uses reduced design budgets where
// a smoke variant is defined; --full runs the long modes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "idesign/config.h"
#include "idesign/designer.h"
#include "idesign/problems.h"
#include "idesign/routing.h"
#include "idesign/verify.h"

namespace idesign {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  bool full = false;
  bool verbose = false;
  std::set<int> only;
  std::string scratch;
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

const std::string kConfigs = std::string(IDESIGN_FIXTURE_DIR) + "/configs";

std::string Fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::ostream* Log(const Options& o) { return o.verbose ? &std::cerr : nullptr; }

json LoadConfig(const std::string& name, const std::vector<std::string>& sets) {
  json j = ReadConfigFile(kConfigs + "/" + name);
  for (const std::string& s : sets) ApplyOverride(j, s);
  return j;
}

json RunConfigFile(const Options& o, const std::string& name,
                   const std::vector<std::string>& sets, const std::string& tag) {
  const RunConfig cfg = RunConfig::FromJson(LoadConfig(name, sets), kConfigs);
  const fs::path dir = fs::path(o.scratch) / tag;
  fs::remove_all(dir);
  return RunExperiment(cfg, dir.string(), Log(o));
}

Outcome Checks(const std::vector<CheckResult>& checks) {
  Outcome out{true, ""};
  double worst = 0.0;
  for (const CheckResult& c : checks) {
    out.passed = out.passed && c.passed;
    if (!c.passed) out.detail += " failed:" + c.name;
    if (c.threshold > 0) worst = std::max(worst, c.value / c.threshold);
  }
  out.detail = std::to_string(checks.size()) + " checks, worst value/threshold " +
               Fmt("%.3g", worst) + out.detail;
  return out;
}

Outcome Potential(const Options&) { return Checks(VerifyPotentialSuite(100, 1)); }

Outcome Telescoping(const Options&) {
  std::vector<CheckResult> c = VerifyShapingSuite(1000, 100, 2);
  c.erase(std::remove_if(c.begin(), c.end(),
                         [](const CheckResult& r) {
                           return r.name.find("telescop") == std::string::npos;
                         }),
          c.end());
  return Checks(c);
}

Outcome PreserveNe(const Options&) {
  std::vector<CheckResult> c = VerifyShapingSuite(1, 100, 2);
  c.erase(std::remove_if(c.begin(), c.end(),
                         [](const CheckResult& r) {
                           return r.name.find("telescop") != std::string::npos;
                         }),
          c.end());
  Outcome out = Checks(c);
  for (const CheckResult& r : c) out.detail += "; " + r.detail;
  return out;
}

Outcome Gp(const Options&) { return Checks(VerifyGpSuite(100, 1000000, 3)); }

Outcome BraessBaseline(const Options&) {
  const RunConfig cfg =
      RunConfig::FromJson(LoadConfig("braess.json", {}), kConfigs);
  const RoutingDesignProblem problem(cfg.network, cfg.tolls, cfg.trainer);
  const auto t = problem.Train(problem.ZeroToll(), StreamSeed(cfg.seeds[0], {0}));
  const FlowState f = t.env.PeriodFlow(t.result.policy);
  const double shortcut =
      f.per_edge_flow[cfg.network.EdgeIndex("3->2")] /
      cfg.network.total_commodity();
  const double gap = t.env.BestResponseGap(t.result.policy);
  const int m = cfg.trainer.max_iterations;
  Outcome out;
  out.passed = m <= 6000 && t.result.diagnostics.converged && shortcut >= 0.9 &&
               gap <= 5e-2;
  out.detail = "M=" + std::to_string(m) + " converged=" +
               (t.result.diagnostics.converged ? "1" : "0") + " iteration=" +
               std::to_string(t.result.diagnostics.convergence_iteration) +
               " shortcut_share=" + Fmt("%.4f", shortcut) + " (>= 0.9) gap=" +
               Fmt("%.3g", gap) + " (<= 5e-2)";
  return out;
}

Outcome BraessDesign(const Options& o) {
  const int K = o.full ? 150 : 20;
  const double need = o.full ? 0.8 : 0.5;
  const json s = RunConfigFile(o, "braess.json", {"bo.K=" + std::to_string(K)},
                               "c6_braess");
  const json& a = s["aggregate"];
  const double red = a["imbalance_reduction"];
  const double bw = a["baseline_welfare"], ww = a["best_welfare"];
  Outcome out;
  out.passed = red >= need && ww > bw && SummaryInvariantsHold(s, nullptr);
  out.detail = "K=" + std::to_string(K) + " baseline_R_ID=" +
               Fmt("%.4f", a["baseline_flow_reward"]) + " best_R_ID=" +
               Fmt("%.4f", a["best_flow_reward"]) + " reduction=" +
               Fmt("%.3f", red) + " (>= " + Fmt("%.2f", need) + ") welfare " +
               Fmt("%.4f", bw) + " -> " + Fmt("%.4f", ww);
  return out;
}

Outcome City(const Options& o) {
  const int K = o.full ? 150 : 20;
  const double limit = o.full ? 0.5 : 0.8;
  const json s = RunConfigFile(o, "extended_city.json",
                               {"bo.K=" + std::to_string(K)}, "c7_city");
  const json& a = s["aggregate"];
  const double b = a["baseline_flow_reward"], best = a["best_flow_reward"];
  const double ratio = std::abs(best) / std::abs(b);
  Outcome out;
  out.passed = ratio <= limit && SummaryInvariantsHold(s, nullptr);
  out.detail = "K=" + std::to_string(K) + " nodes=8 edges=13 baseline_R_ID=" +
               Fmt("%.4f", b) + " best_R_ID=" + Fmt("%.4f", best) +
               " ratio=" + Fmt("%.3f", ratio) + " (<= " + Fmt("%.2f", limit) + ")";
  return out;
}

Outcome CrowdOneShot(const Options& o) {
  std::vector<std::string> sets;
  if (!o.full) sets.push_back("bo.K=40");
  const json s = RunConfigFile(o, "crowd_oneshot.json", sets, "c8_crowd");
  const json& a = s["aggregate"];
  const double kl = a["best_mean_kl"], ratio = a["kl_ratio"];
  Outcome out;
  out.passed = s["runs"].size() == 4 && kl <= 0.1 && ratio <= 0.25 &&
               SummaryInvariantsHold(s, nullptr);
  out.detail = std::string(o.full ? "K=config" : "K=40") + " seeds=" +
               std::to_string(s["runs"].size()) + " N=200 baseline_kl=" +
               Fmt("%.4f", a["baseline_mean_kl"]) + " best_kl=" +
               Fmt("%.4f", kl) + " (<= 0.1) ratio=" + Fmt("%.4f", ratio) +
               " (<= 0.25)";
  return out;
}

Outcome CrowdDynamic(const Options& o) {
  std::vector<std::string> sets;
  if (!o.full) sets.push_back("bo.K=30");
  const json s = RunConfigFile(o, "crowd_dynamic.json", sets, "c9_dynamic");
  bool monotone = true;
  for (const json& run : s["runs"]) {
    // best_so_far holds -KL, so nonincreasing KL is nondecreasing J.
    const json& b = run["report"]["best_so_far"];
    for (size_t k = 1; k < b.size(); ++k) {
      if (b[k].is_number() && b[k - 1].is_number() &&
          b[k].get<double>() < b[k - 1].get<double>()) {
        monotone = false;
      }
    }
  }
  const double ratio = s["aggregate"]["kl_ratio"];
  Outcome out;
  out.passed = monotone && ratio <= 0.5 && SummaryInvariantsHold(s, nullptr);
  out.detail = std::string(o.full ? "K=config" : "K=30") + " T=3 baseline_kl=" +
               Fmt("%.4f", s["aggregate"]["baseline_mean_kl"]) + " best_kl=" +
               Fmt("%.4f", s["aggregate"]["best_mean_kl"]) +
               " best_so_far_nonincreasing=" + (monotone ? "1" : "0") +
               " ratio=" + Fmt("%.4f", ratio) + " (<= 0.5)";
  return out;
}

// Medians must not drop by more than this fraction of the no-toll |J|, the
// seed-to-seed noise floor of a single design run at these budgets.
constexpr double kSweepTolerance = 0.05;

Outcome Sweep(const Options& o) {
  const int K = o.full ? 150 : 10;
  const json s = RunConfigFile(o, "order_sweep.json",
                               {"bo.K=" + std::to_string(K)}, "c10_sweep");
  const json& sw = s["sweep"];
  const std::vector<double> med = sw["median_best_J"];
  double base = 0.0;
  for (const json& b : s["baselines"]) {
    base += std::abs(b["J"].get<double>()) / s["baselines"].size();
  }
  bool ok = med.size() == 3;
  std::string meds;
  for (size_t i = 0; i < med.size(); ++i) {
    meds += (i ? "," : "") + Fmt("%.4f", med[i]);
    if (i > 0 && med[i] < med[i - 1] - kSweepTolerance * base) ok = false;
  }
  bool inv = true;
  for (const json& r : s["reports"]) {
    for (const auto& [k, v] : r["invariants"].items()) inv = inv && v.get<bool>();
  }
  Outcome out;
  out.passed = ok && inv;
  out.detail = "K=" + std::to_string(K) + " orders=1,3,5 seeds=4 median_best_J=" +
               meds + " baseline_|J|=" + Fmt("%.4f", base) +
               " tolerance=" + Fmt("%.4f", kSweepTolerance * base);
  return out;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> contents for every file under dir.
std::vector<std::pair<std::string, std::string>> Snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      files.emplace_back(fs::relative(e.path(), dir).string(), Slurp(e.path()));
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string ChecksText(const std::vector<CheckResult>& c) {
  std::ostringstream os;
  PrintChecks(c, os);
  return os.str();
}

Outcome Determinism(const Options& o) {
  Outcome out{true, ""};
  int files = 0;
  const std::string a = ChecksText(VerifyPotentialSuite(20, 1)) +
                        ChecksText(VerifyShapingSuite(100, 20, 2)) +
                        ChecksText(VerifyGpSuite(10, 10000, 3));
  const std::string b = ChecksText(VerifyPotentialSuite(20, 1)) +
                        ChecksText(VerifyShapingSuite(100, 20, 2)) +
                        ChecksText(VerifyGpSuite(10, 10000, 3));
  if (a != b) {
    out.passed = false;
    out.detail += " verify";
  }
  const int K = o.full ? 0 : 2;
  for (const char* name : {"braess.json", "extended_city.json", "crowd_oneshot.json",
                           "crowd_dynamic.json", "order_sweep.json",
                           "preserve_ne.json"}) {
    std::vector<std::string> sets;
    if (K > 0) sets.push_back("bo.K=" + std::to_string(K));
    const std::string tag = fs::path(name).stem().string();
    RunConfigFile(o, name, sets, "c11_" + tag + "_a");
    RunConfigFile(o, name, sets, "c11_" + tag + "_b");
    const auto x = Snapshot(fs::path(o.scratch) / ("c11_" + tag + "_a"));
    const auto y = Snapshot(fs::path(o.scratch) / ("c11_" + tag + "_b"));
    files += static_cast<int>(x.size());
    if (x != y || x.empty()) {
      out.passed = false;
      out.detail += " " + tag;
    }
  }
  out.detail = std::string(K > 0 ? "K=2" : "K=config") + " configs=6 files=" +
               std::to_string(files) +
               (out.passed ? " all byte-identical" : " differing:" + out.detail);
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double smoke_limit_s;  // runtime limit, 0 for none
  double full_limit_s;
  std::function<Outcome(const Options&)> fn;
};

int Main(int argc, char** argv) {
  Options o;
  CLI::App app{"Acceptance criteria runner"};
  app.add_flag("--full", o.full, "Run the long modes");
  app.add_flag("-v,--verbose", o.verbose, "Log experiment progress to stderr");
  app.add_option("--only", o.only, "Run only these criteria");
  o.scratch = (fs::temp_directory_path() / "idesign_acceptance").string();
  app.add_option("--scratch", o.scratch, "Directory for experiment outputs");
  CLI11_PARSE(app, argc, argv);

  const double c6_smoke = 15 * 60, c6_full = 2 * 3600;
  const std::vector<Criterion> criteria = {
      {1, "potential_identity", 10, 10, Potential},
      {2, "shaping_telescoping", 10, 10, Telescoping},
      {3, "shaping_preserves_ne", 30, 30, PreserveNe},
      {4, "gp_and_ei", 60, 60, Gp},
      {5, "braess_baseline", 300, 300, BraessBaseline},
      {6, "braess_design", c6_smoke, c6_full, BraessDesign},
      {7, "extended_city", 0, 0, City},
      {8, "crowd_oneshot", 3600, 3600, CrowdOneShot},
      {9, "crowd_dynamic", 2 * 3600, 2 * 3600, CrowdDynamic},
      {10, "order_sweep", 3 * c6_smoke, 3 * c6_full, Sweep},
      {11, "determinism", 0, 0, Determinism},
  };
  std::cout << "acceptance mode=" << (o.full ? "full" : "smoke") << "\n";
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!o.only.empty() && !o.only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.fn(o);
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    const double limit = o.full ? c.full_limit_s : c.smoke_limit_s;
    if (limit > 0 && secs >= limit) {
      r.passed = false;
      r.detail += " runtime over " + Fmt("%.0f", limit) + "s";
    }
    if (!r.passed) ++failed;
    std::cout << (r.passed ? "PASS" : "FAIL") << " " << c.id << " " << c.name
              << ": " << r.detail << " [" << Fmt("%.1f", secs) << "s]"
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) +
                                                       " criteria failed")
            << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace idesign

int main(int argc, char** argv) { return idesign::Main(argc, argv); }
