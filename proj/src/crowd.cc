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

#include "idesign/crowd.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>

#include <Eigen/Dense>

#include "idesign/errors.h"
#include "idesign/json_util.h"
#include "idesign/rng.h"

namespace idesign {
namespace {

bool IsPsd(const Mat2& m) {
  return std::abs(m[1] - m[2]) <= 1e-12 && m[0] >= 0.0 && m[3] >= 0.0 &&
         m[0] * m[3] - m[1] * m[2] >= -1e-12;
}

// Lower Cholesky factor of a PSD 2x2 matrix (zero pivots allowed).
Mat2 Cholesky(const Mat2& s) {
  const double l00 = std::sqrt(std::max(0.0, s[0]));
  const double l10 = l00 > 0.0 ? s[2] / l00 : 0.0;
  const double l11 = std::sqrt(std::max(0.0, s[3] - l10 * l10));
  return {l00, 0.0, l10, l11};
}

Mat2 ReadMat2(const nlohmann::json& j, const std::string& key, Mat2 fallback,
              const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (v.is_number()) {
    const double s = v.get<double>();
    return {s, 0.0, 0.0, s};
  }
  const auto a = Require<std::vector<double>>(j, key, where);
  if (a.size() != 4) throw ConfigError(where + "." + key + ": expected 4 numbers");
  return {a[0], a[1], a[2], a[3]};
}

// Rows of the edge-normalized 1-D Gaussian kernel: k[s * G + j] is the share
// of source cell s moved to cell j.
std::vector<double> KernelRows(int g, double bandwidth) {
  std::vector<double> k(static_cast<size_t>(g) * g, 0.0);
  for (int s = 0; s < g; ++s) {
    if (bandwidth <= 0.0) {
      k[s * g + s] = 1.0;
      continue;
    }
    double total = 0.0;
    for (int j = 0; j < g; ++j) {
      const double d = (j - s) / bandwidth;
      const double w = std::abs(j - s) <= 4.0 * bandwidth + 1.0
                           ? std::exp(-0.5 * d * d)
                           : 0.0;
      k[s * g + j] = w;
      total += w;
    }
    for (int j = 0; j < g; ++j) k[s * g + j] /= total;
  }
  return k;
}

std::vector<double> Smooth(const std::vector<double>& raw, int g,
                           double bandwidth) {
  if (bandwidth <= 0.0) return raw;
  const auto k = KernelRows(g, bandwidth);
  std::vector<double> tmp(raw.size(), 0.0), out(raw.size(), 0.0);
  for (int y = 0; y < g; ++y) {
    for (int sx = 0; sx < g; ++sx) {
      const double v = raw[y * g + sx];
      if (v == 0.0) continue;
      for (int x = 0; x < g; ++x) tmp[y * g + x] += v * k[sx * g + x];
    }
  }
  for (int sy = 0; sy < g; ++sy) {
    for (int y = 0; y < g; ++y) {
      const double w = k[sy * g + y];
      if (w == 0.0) continue;
      for (int x = 0; x < g; ++x) out[y * g + x] += w * tmp[sy * g + x];
    }
  }
  return out;
}

std::array<double, 6> Quadratic(Vec2 x) {
  return {1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1]};
}

}  // namespace

Vec2 Box::Clip(Vec2 p) const {
  return {std::clamp(p[0], x_lo, x_hi), std::clamp(p[1], y_lo, y_hi)};
}

const Vec2& CrowdWorld::Attraction(int t) const {
  return attraction_points.size() == 1 ? attraction_points[0]
                                       : attraction_points.at(t);
}

void CrowdWorld::Validate() const {
  if (n_agents < 1) throw ConfigError("world.n_agents: must be >= 1");
  if (horizon < 1) throw ConfigError("world.horizon: must be >= 1");
  if (attraction_points.size() != 1 &&
      static_cast<int>(attraction_points.size()) != horizon) {
    throw ConfigError("world.attraction_points: need 1 or horizon points");
  }
  if (!IsPsd(noise_cov)) throw ConfigError("world.noise_cov: not symmetric PSD");
  if (!IsPsd(control_cost)) throw ConfigError("world.control_cost: not symmetric PSD");
  if (!(congestion_weight >= 0.0)) {
    throw ConfigError("world.congestion_weight: must be >= 0");
  }
  if (!(arena.x_hi > arena.x_lo) || !(arena.y_hi > arena.y_lo)) {
    throw ConfigError("world.arena: empty box");
  }
  if (grid < 2) throw ConfigError("world.grid: must be >= 2");
  if (!(bandwidth >= 0.0)) throw ConfigError("world.bandwidth: must be >= 0");
  if (!(density_cap > 0.0)) throw ConfigError("world.density_cap: must be > 0");
}

nlohmann::json CrowdWorld::ToJson() const {
  nlohmann::json j;
  j["n_agents"] = n_agents;
  j["horizon"] = horizon;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["noise_cov"] = noise_cov;
  j["attraction_points"] = attraction_points;
  j["congestion_weight"] = congestion_weight;
  j["control_cost"] = control_cost;
  j["arena"] = {arena.x_lo, arena.x_hi, arena.y_lo, arena.y_hi};
  j["grid"] = grid;
  j["bandwidth"] = bandwidth;
  j["density_cap"] = density_cap;
  return j;
}

CrowdWorld CrowdWorld::FromJson(const nlohmann::json& j) {
  const std::string w = "world";
  CheckKeys(j, {"n_agents", "horizon", "alpha", "beta", "noise_cov",
                "attraction_points", "congestion_weight", "control_cost",
                "arena", "grid", "bandwidth", "density_cap"},
            w);
  CrowdWorld c;
  c.n_agents = Optional<int>(j, "n_agents", c.n_agents, w);
  c.horizon = Optional<int>(j, "horizon", c.horizon, w);
  c.alpha = Optional<double>(j, "alpha", c.alpha, w);
  c.beta = Optional<double>(j, "beta", c.beta, w);
  c.noise_cov = ReadMat2(j, "noise_cov", c.noise_cov, w);
  if (j.contains("attraction_points")) {
    c.attraction_points =
        Require<std::vector<Vec2>>(j, "attraction_points", w);
  }
  c.congestion_weight =
      Optional<double>(j, "congestion_weight", c.congestion_weight, w);
  c.control_cost = ReadMat2(j, "control_cost", c.control_cost, w);
  if (j.contains("arena")) {
    const auto a = Require<std::vector<double>>(j, "arena", w);
    if (a.size() != 4) throw ConfigError("world.arena: expected 4 numbers");
    c.arena = {a[0], a[1], a[2], a[3]};
  }
  c.grid = Optional<int>(j, "grid", c.grid, w);
  c.bandwidth = Optional<double>(j, "bandwidth", c.bandwidth, w);
  c.density_cap = Optional<double>(j, "density_cap", c.density_cap, w);
  c.Validate();
  return c;
}

DensityField::DensityField(int grid, Box arena, std::vector<double> cells)
    : grid_(grid), arena_(arena), cells_(std::move(cells)) {
  if (static_cast<int>(cells_.size()) != grid * grid) {
    throw ConfigError("density: expected grid * grid cells");
  }
}

DensityField DensityField::Estimate(const std::vector<Vec2>& positions,
                                    int grid, double bandwidth,
                                    const Box& arena) {
  if (positions.empty()) throw ConfigError("density: no positions");
  std::vector<long> counts(static_cast<size_t>(grid) * grid, 0);
  DensityField probe(grid, arena, std::vector<double>(counts.size(), 0.0));
  for (const Vec2& p : positions) ++counts[probe.CellIndex(p)];
  std::vector<double> raw(counts.size());
  const double n = static_cast<double>(positions.size());
  for (size_t k = 0; k < counts.size(); ++k) raw[k] = counts[k] / n;
  return DensityField(grid, arena, Smooth(raw, grid, bandwidth));
}

DensityField DensityField::FromWeights(int grid, const Box& arena,
                                       std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("density: weights must be finite and >= 0");
    }
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("density: weights sum to zero");
  for (double& w : weights) w /= total;
  return DensityField(grid, arena, std::move(weights));
}

DensityField DensityField::Gaussian(Vec2 center, double std, int grid,
                                    double bandwidth, const Box& arena) {
  if (!(std > 0.0)) throw ConfigError("density: gaussian std must be > 0");
  std::vector<double> w(static_cast<size_t>(grid) * grid);
  const double hx = (arena.x_hi - arena.x_lo) / grid;
  const double hy = (arena.y_hi - arena.y_lo) / grid;
  for (int iy = 0; iy < grid; ++iy) {
    for (int ix = 0; ix < grid; ++ix) {
      const double dx = arena.x_lo + (ix + 0.5) * hx - center[0];
      const double dy = arena.y_lo + (iy + 0.5) * hy - center[1];
      w[iy * grid + ix] = std::exp(-0.5 * (dx * dx + dy * dy) / (std * std));
    }
  }
  DensityField raw = FromWeights(grid, arena, std::move(w));
  return DensityField(grid, arena, Smooth(raw.cells_, grid, bandwidth));
}

int DensityField::CellIndex(Vec2 p) const {
  const auto idx = [&](double v, double lo, double hi) {
    const int k = static_cast<int>(std::floor((v - lo) / (hi - lo) * grid_));
    return std::clamp(k, 0, grid_ - 1);
  };
  return idx(p[1], arena_.y_lo, arena_.y_hi) * grid_ +
         idx(p[0], arena_.x_lo, arena_.x_hi);
}

double DensityField::Density(Vec2 p) const {
  return CellMass(p) * grid_ * grid_ / arena_.area();
}

double DensityField::MaxCell() const {
  return *std::max_element(cells_.begin(), cells_.end());
}

double DensityField::Sum() const {
  double s = 0.0;
  for (double c : cells_) s += c;
  return s;
}

void TargetSchedule::Validate(const CrowdWorld& world) const {
  if (static_cast<int>(targets.size()) != world.horizon) {
    throw ConfigError("targets: need one target per step");
  }
  for (const DensityField& d : targets) {
    if (d.grid() != world.grid) throw ConfigError("targets: grid mismatch");
    if (std::abs(d.Sum() - 1.0) > 1e-9) throw ConfigError("targets: not normalized");
  }
}

TargetSchedule TargetSchedule::FromJson(const nlohmann::json& j,
                                        const CrowdWorld& world) {
  CheckKeys(j, {"steps"}, "targets");
  if (!j.contains("steps") || !j["steps"].is_array()) {
    throw ConfigError("targets.steps: expected an array");
  }
  TargetSchedule s;
  for (size_t t = 0; t < j["steps"].size(); ++t) {
    const auto& js = j["steps"][t];
    const std::string w = "targets.steps[" + std::to_string(t) + "]";
    CheckKeys(js, {"gaussian", "weights"}, w);
    if (js.contains("gaussian") == js.contains("weights")) {
      throw ConfigError(w + ": give exactly one of gaussian or weights");
    }
    if (js.contains("gaussian")) {
      const auto& g = js["gaussian"];
      CheckKeys(g, {"center", "std"}, w + ".gaussian");
      s.targets.push_back(DensityField::Gaussian(
          Require<Vec2>(g, "center", w + ".gaussian"),
          Require<double>(g, "std", w + ".gaussian"), world.grid,
          world.bandwidth, world.arena));
    } else {
      const auto rows =
          Require<std::vector<std::vector<double>>>(js, "weights", w);
      if (static_cast<int>(rows.size()) != world.grid) {
        throw ConfigError(w + ".weights: expected grid rows");
      }
      std::vector<double> flat;
      for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != world.grid) {
          throw ConfigError(w + ".weights: expected grid columns");
        }
        flat.insert(flat.end(), r.begin(), r.end());
      }
      s.targets.push_back(
          DensityField::FromWeights(world.grid, world.arena, std::move(flat)));
    }
  }
  s.Validate(world);
  return s;
}

std::vector<Vec2> CrowdStep(const CrowdWorld& world,
                            const std::vector<Vec2>& positions,
                            const std::vector<Vec2>& actions,
                            const std::vector<Vec2>& noise) {
  const size_t n = positions.size();
  if (actions.size() != n || noise.size() != n) {
    throw ConfigError("crowd step: positions, actions and noise differ in size");
  }
  const Mat2 l = Cholesky(world.noise_cov);
  std::vector<Vec2> next(n);
  for (size_t i = 0; i < n; ++i) {
    const Vec2& u = actions[i];
    if (!std::isfinite(u[0]) || !std::isfinite(u[1])) {
      throw ActionError("crowd step: non-finite action for agent " +
                        std::to_string(i));
    }
    const Vec2& z = noise[i];
    const Vec2 x = {world.alpha * positions[i][0] + world.beta * u[0] +
                        l[0] * z[0],
                    world.alpha * positions[i][1] + world.beta * u[1] +
                        l[2] * z[0] + l[3] * z[1]};
    next[i] = world.arena.Clip(x);
  }
  return next;
}

std::vector<Vec2> CrowdStep(const CrowdWorld& world,
                            const std::vector<Vec2>& positions,
                            const std::vector<Vec2>& actions, uint64_t seed) {
  std::vector<Vec2> noise(positions.size());
  for (size_t i = 0; i < noise.size(); ++i) {
    Rng rng = MakeRng(seed, {i + 1});
    noise[i] = {StandardNormal(rng), StandardNormal(rng)};
  }
  return CrowdStep(world, positions, actions, noise);
}

double Desirability(const CrowdWorld& world, int t, Vec2 x, double m) {
  const Vec2& a = world.Attraction(t);
  const double dx = x[0] - a[0], dy = x[1] - a[1];
  return -(dx * dx + dy * dy) - world.congestion_weight * m * m;
}

double IntrinsicReward(const CrowdWorld& world, int t, Vec2 x, Vec2 u,
                       const DensityField& density) {
  const Mat2& k = world.control_cost;
  const double quad = u[0] * (k[0] * u[0] + k[1] * u[1]) +
                      u[1] * (k[2] * u[0] + k[3] * u[1]);
  return Desirability(world, t, x, density.Density(x)) - 0.5 * quad;
}

double KlDivergence(const std::vector<double>& p, const std::vector<double>& q,
                    double floor) {
  if (p.size() != q.size()) throw ConfigError("kl: grid mismatch");
  double qsum = 0.0;
  for (double v : q) qsum += std::max(v, floor);
  double kl = 0.0;
  for (size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    kl += p[k] * std::log(p[k] * qsum / std::max(q[k], floor));
  }
  return std::max(kl, 0.0);
}

double KlDivergence(const DensityField& p, const DensityField& q,
                    double floor) {
  if (p.grid() != q.grid()) throw ConfigError("kl: grid mismatch");
  return KlDivergence(p.cells(), q.cells(), floor);
}

double DesignerRewardCrowd(const std::vector<DensityField>& densities,
                           const TargetSchedule& targets) {
  if (densities.size() != targets.targets.size()) {
    throw ConfigError("designer_reward_crowd: schedule length mismatch");
  }
  double r = 0.0;
  for (size_t t = 0; t < densities.size(); ++t) {
    r -= KlDivergence(densities[t], targets.targets[t]);
  }
  return r;
}

std::vector<FeatureSpec> CrowdFeatures() {
  return {{"attraction_distance", 0.0, 1.0},
          {"target_mass", 0.0, 1.0},
          {"local_density", 0.0, 1.0}};
}

ModifierParams MakeCrowdParams(int order, double coeff_lo, double coeff_hi) {
  return ModifierParams(CrowdFeatures(), order, coeff_lo, coeff_hi);
}

std::array<double, 3> CrowdFeatureValues(const CrowdWorld& world, int t,
                                         Vec2 x, const DensityField& density,
                                         const DensityField* target) {
  const Vec2& a = world.Attraction(t);
  const double wx = world.arena.x_hi - world.arena.x_lo;
  const double wy = world.arena.y_hi - world.arena.y_lo;
  const double dx = x[0] - a[0], dy = x[1] - a[1];
  const double dist = std::min(1.0, (dx * dx + dy * dy) / (wx * wx + wy * wy));
  const double tm = target ? target->CellMass(x) / target->MaxCell() : 0.0;
  const double dens = std::min(1.0, density.Density(x) / world.density_cap);
  return {dist, tm, dens};
}

GaussianPolicy GaussianPolicy::Zero(int horizon, double std) {
  GaussianPolicy p;
  p.mean.assign(horizon, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  p.log_std.assign(horizon, std::log(std));
  return p;
}

Vec2 GaussianPolicy::Mean(int t, Vec2 x) const {
  const auto& m = mean[t];
  return {m[0] + m[2] * x[0] + m[3] * x[1], m[1] + m[4] * x[0] + m[5] * x[1]};
}

std::vector<double> GaussianPolicy::Flatten() const {
  std::vector<double> v;
  for (size_t t = 0; t < mean.size(); ++t) {
    v.insert(v.end(), mean[t].begin(), mean[t].end());
    v.push_back(log_std[t]);
  }
  return v;
}

CrowdEpisode CrowdRollout(const CrowdWorld& world, const GaussianPolicy& policy,
                          const TargetSchedule* targets,
                          const ModifierParams* modifier, uint64_t seed,
                          const std::vector<uint64_t>& stream_ids) {
  const int n = world.n_agents;
  const int T = world.horizon;
  if (static_cast<int>(policy.mean.size()) != T) {
    throw ConfigError("crowd rollout: policy horizon mismatch");
  }
  if (!stream_ids.empty() && static_cast<int>(stream_ids.size()) != n) {
    throw ConfigError("crowd rollout: need one stream id per agent");
  }
  if (targets && static_cast<int>(targets->targets.size()) != T) {
    throw ConfigError("crowd rollout: target schedule length mismatch");
  }
  std::vector<Rng> rngs;
  rngs.reserve(n);
  const Box& box = world.arena;
  CrowdEpisode ep;
  ep.positions.assign(1, std::vector<Vec2>(n));
  for (int i = 0; i < n; ++i) {
    rngs.push_back(MakeRng(seed, {stream_ids.empty() ? i + 1ULL : stream_ids[i]}));
    const double ux = Uniform01(rngs[i]), uy = Uniform01(rngs[i]);
    ep.positions[0][i] = {box.x_lo + ux * (box.x_hi - box.x_lo),
                          box.y_lo + uy * (box.y_hi - box.y_lo)};
  }
  std::vector<Vec2> noise(n);
  for (int t = 0; t < T; ++t) {
    const auto& x = ep.positions[t];
    const double sigma = std::exp(policy.log_std[t]);
    std::vector<Vec2> u(n);
    for (int i = 0; i < n; ++i) {
      const Vec2 mu = policy.Mean(t, x[i]);
      const double z0 = StandardNormal(rngs[i]), z1 = StandardNormal(rngs[i]);
      u[i] = {mu[0] + sigma * z0, mu[1] + sigma * z1};
      noise[i] = {StandardNormal(rngs[i]), StandardNormal(rngs[i])};
    }
    ep.positions.push_back(CrowdStep(world, x, u, noise));
    const auto& next = ep.positions.back();
    ep.densities.push_back(
        DensityField::Estimate(next, world.grid, world.bandwidth, box));
    const DensityField& dens = ep.densities.back();
    const DensityField* target = targets ? &targets->targets[t] : nullptr;
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) {
      const double intrinsic = IntrinsicReward(world, t, next[i], u[i], dens);
      double theta = 0.0;
      if (modifier) {
        const auto f = CrowdFeatureValues(world, t, next[i], dens, target);
        theta = modifier->Eval(f);
      }
      r[i] = intrinsic + theta;
      ep.incentive += theta;
      ep.intrinsic_welfare += intrinsic / n;
    }
    ep.rewards.push_back(std::move(r));
    ep.actions.push_back(std::move(u));
  }
  return ep;
}

void CrowdTrainerConfig::Validate() const {
  if (max_iterations < 1) throw ConfigError("crowd_trainer.max_iterations: must be >= 1");
  if (batch_episodes < 1) throw ConfigError("crowd_trainer.batch_episodes: must be >= 1");
  if (!(mean_learning_rate > 0.0) || !(std_learning_rate >= 0.0)) {
    throw ConfigError("crowd_trainer: learning rates must be positive");
  }
  if (!(max_mean_step > 0.0)) throw ConfigError("crowd_trainer.max_mean_step: must be > 0");
  if (!(min_std > 0.0) || !(max_std >= min_std) || initial_std < min_std ||
      initial_std > max_std) {
    throw ConfigError("crowd_trainer: need 0 < min_std <= initial_std <= max_std");
  }
  if (convergence_window < 2) {
    throw ConfigError("crowd_trainer.convergence_window: must be >= 2");
  }
}

nlohmann::json CrowdTrainerConfig::ToJson() const {
  return {{"max_iterations", max_iterations},
          {"batch_episodes", batch_episodes},
          {"mean_learning_rate", mean_learning_rate},
          {"std_learning_rate", std_learning_rate},
          {"max_mean_step", max_mean_step},
          {"initial_std", initial_std},
          {"min_std", min_std},
          {"max_std", max_std},
          {"convergence_tol", convergence_tol},
          {"convergence_window", convergence_window},
          {"seed", seed}};
}

CrowdTrainerConfig CrowdTrainerConfig::FromJson(const nlohmann::json& j) {
  const std::string w = "crowd_trainer";
  CheckKeys(j, {"max_iterations", "batch_episodes", "mean_learning_rate",
                "std_learning_rate", "max_mean_step", "initial_std",
                "min_std", "max_std", "convergence_tol",
                "convergence_window", "seed"},
            w);
  CrowdTrainerConfig c;
  c.max_iterations = Optional<int>(j, "max_iterations", c.max_iterations, w);
  c.batch_episodes = Optional<int>(j, "batch_episodes", c.batch_episodes, w);
  c.mean_learning_rate =
      Optional<double>(j, "mean_learning_rate", c.mean_learning_rate, w);
  c.std_learning_rate =
      Optional<double>(j, "std_learning_rate", c.std_learning_rate, w);
  c.max_mean_step = Optional<double>(j, "max_mean_step", c.max_mean_step, w);
  c.initial_std = Optional<double>(j, "initial_std", c.initial_std, w);
  c.min_std = Optional<double>(j, "min_std", c.min_std, w);
  c.max_std = Optional<double>(j, "max_std", c.max_std, w);
  c.convergence_tol =
      Optional<double>(j, "convergence_tol", c.convergence_tol, w);
  c.convergence_window =
      Optional<int>(j, "convergence_window", c.convergence_window, w);
  c.seed = Optional<uint64_t>(j, "seed", c.seed, w);
  c.Validate();
  return c;
}

CrowdTrainResult TrainCrowd(const CrowdWorld& world,
                            const TargetSchedule* targets,
                            const ModifierParams* modifier,
                            const CrowdTrainerConfig& cfg) {
  world.Validate();
  cfg.Validate();
  const int T = world.horizon;
  const int n = world.n_agents;
  CrowdTrainResult res;
  res.policy = GaussianPolicy::Zero(T, cfg.initial_std);
  std::vector<Eigen::Matrix<double, 6, 1>> critic(
      T, Eigen::Matrix<double, 6, 1>::Zero());
  std::deque<std::vector<double>> history;

  for (int m = 0; m < cfg.max_iterations; ++m) {
    const int rows = cfg.batch_episodes * n;
    std::vector<Eigen::MatrixXd> phi(T, Eigen::MatrixXd(rows, 3)),
        quad(T, Eigen::MatrixXd(rows, 6)), dev(T, Eigen::MatrixXd(rows, 2));
    std::vector<Eigen::VectorXd> ret(T, Eigen::VectorXd(rows));
    double mean_return = 0.0;
    for (int e = 0; e < cfg.batch_episodes; ++e) {
      const CrowdEpisode ep =
          CrowdRollout(world, res.policy, targets, modifier,
                       StreamSeed(cfg.seed, {static_cast<uint64_t>(m),
                                             static_cast<uint64_t>(e)}));
      for (int i = 0; i < n; ++i) {
        double g = 0.0;
        for (int t = T - 1; t >= 0; --t) {
          g += ep.rewards[t][i];
          const int r = e * n + i;
          const Vec2& x = ep.positions[t][i];
          const Vec2 mu = res.policy.Mean(t, x);
          const auto q = Quadratic(x);
          phi[t].row(r) << 1.0, x[0], x[1];
          for (int k = 0; k < 6; ++k) quad[t](r, k) = q[k];
          dev[t].row(r) << ep.actions[t][i][0] - mu[0],
              ep.actions[t][i][1] - mu[1];
          ret[t](r) = g;
        }
        mean_return += g / rows;
      }
    }
    res.mean_return.push_back(mean_return);

    for (int t = 0; t < T; ++t) {
      const Eigen::MatrixXd qtq = quad[t].transpose() * quad[t] +
                                  1e-8 * rows * Eigen::MatrixXd::Identity(6, 6);
      const Eigen::Matrix<double, 6, 1> fitted =
          qtq.ldlt().solve(quad[t].transpose() * ret[t]);
      if (m == 0) critic[t] = fitted;
      const Eigen::VectorXd adv = ret[t] - quad[t] * critic[t];
      critic[t] = fitted;

      const double sigma = std::exp(res.policy.log_std[t]);
      const double var = sigma * sigma;
      // Mean: least-squares fit of A (u - mu) / sigma^2 on (1, x), which is
      // the Fisher-preconditioned gradient up to the factor sigma^2.
      const Eigen::MatrixXd target = (dev[t].array().colwise() * adv.array()) / var;
      const Eigen::MatrixXd ptp =
          phi[t].transpose() * phi[t] + 1e-9 * rows * Eigen::MatrixXd::Identity(3, 3);
      Eigen::MatrixXd w = ptp.ldlt().solve(phi[t].transpose() * target);
      w *= cfg.mean_learning_rate;
      const double rms = std::sqrt((phi[t] * w).rowwise().squaredNorm().mean());
      if (rms > cfg.max_mean_step) w *= cfg.max_mean_step / rms;
      auto& mp = res.policy.mean[t];
      mp[0] += w(0, 0);
      mp[1] += w(0, 1);
      mp[2] += w(1, 0);
      mp[3] += w(2, 0);
      mp[4] += w(1, 1);
      mp[5] += w(2, 1);

      const double g_std =
          (adv.array() * (dev[t].rowwise().squaredNorm().array() / var - 2.0))
              .mean() /
          4.0;
      const double step = std::clamp(cfg.std_learning_rate * g_std, -0.1, 0.1);
      res.policy.log_std[t] =
          std::clamp(res.policy.log_std[t] + step, std::log(cfg.min_std),
                     std::log(cfg.max_std));
      for (double v : mp) {
        if (!std::isfinite(v)) throw TrainingError("crowd: non-finite policy", m);
      }
    }
    res.iterations = m + 1;
    history.push_back(res.policy.Flatten());
    if (static_cast<int>(history.size()) > cfg.convergence_window) {
      history.pop_front();
    }
    if (static_cast<int>(history.size()) == cfg.convergence_window) {
      bool still = true;
      for (size_t k = 0; k < history[0].size() && still; ++k) {
        double lo = history[0][k], hi = lo;
        for (const auto& h : history) {
          lo = std::min(lo, h[k]);
          hi = std::max(hi, h[k]);
        }
        still = hi - lo <= cfg.convergence_tol;
      }
      if (still) {
        res.converged = true;
        break;
      }
    }
  }
  return res;
}

CrowdEvaluation EvaluateCrowd(const CrowdWorld& world,
                              const GaussianPolicy& policy,
                              const TargetSchedule& targets,
                              const ModifierParams* modifier, int episodes,
                              uint64_t seed) {
  if (episodes < 1) throw ConfigError("crowd evaluation: need >= 1 episode");
  targets.Validate(world);
  CrowdEvaluation ev;
  std::vector<double> kls;
  for (int e = 0; e < episodes; ++e) {
    CrowdEpisode ep = CrowdRollout(world, policy, &targets, modifier,
                                   StreamSeed(seed, {static_cast<uint64_t>(e)}));
    kls.push_back(-DesignerRewardCrowd(ep.densities, targets));
    ev.welfare += ep.intrinsic_welfare / episodes;
    ev.incentive += ep.incentive / episodes;
    if (e == 0) ev.densities = std::move(ep.densities);
  }
  for (double k : kls) ev.mean_kl += k / episodes;
  if (episodes > 1) {
    double ss = 0.0;
    for (double k : kls) ss += (k - ev.mean_kl) * (k - ev.mean_kl);
    ev.std_kl = std::sqrt(ss / (episodes - 1));
  }
  return ev;
}

void WriteDensityCsv(const std::vector<DensityField>& densities,
                     std::ostream& os) {
  os << "t,ix,iy,mass\n";
  char buf[64];
  for (size_t t = 0; t < densities.size(); ++t) {
    const DensityField& d = densities[t];
    for (int iy = 0; iy < d.grid(); ++iy) {
      for (int ix = 0; ix < d.grid(); ++ix) {
        std::snprintf(buf, sizeof(buf), "%.17g", d.cells()[iy * d.grid() + ix]);
        os << t + 1 << ',' << ix << ',' << iy << ',' << buf << '\n';
      }
    }
  }
}

}  // namespace idesign
