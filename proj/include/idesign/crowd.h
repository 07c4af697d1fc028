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

#ifndef IDESIGN_CROWD_H_
#define IDESIGN_CROWD_H_

// Spatial crowd game: agents with linear-Gaussian dynamics in a planar arena
// are drawn to per-step attraction points, pay for movement and for
// crowding, and are scored against target densities.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "idesign/incentive.h"
#include "json.hpp"

namespace idesign {

using Vec2 = std::array<double, 2>;
// Row-major 2x2 matrix.
using Mat2 = std::array<double, 4>;

struct Box {
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  double area() const { return (x_hi - x_lo) * (y_hi - y_lo); }
  Vec2 Clip(Vec2 p) const;
};

struct CrowdWorld {
  int n_agents = 200;
  int horizon = 1;
  double alpha = 0.9;
  double beta = 1.0;
  Mat2 noise_cov = {0.01, 0.0, 0.0, 0.01};
  // One attraction point per step; a single point applies to every step.
  std::vector<Vec2> attraction_points = {{0.5, 0.5}};
  double congestion_weight = 1e-3;
  Mat2 control_cost = {0.1, 0.0, 0.0, 0.1};
  Box arena;
  int grid = 32;
  double bandwidth = 1.5;  // in cells
  // Density (per unit area) at which the local-density feature saturates.
  double density_cap = 100.0;

  const Vec2& Attraction(int t) const;
  void Validate() const;
  nlohmann::json ToJson() const;
  static CrowdWorld FromJson(const nlohmann::json& j);
};

// Smoothed G x G histogram with total mass 1. cells[iy * G + ix].
class DensityField {
 public:
  DensityField() = default;
  DensityField(int grid, Box arena, std::vector<double> cells);

  // Histogram of `positions` smoothed by a Gaussian kernel of `bandwidth`
  // cells. The kernel is renormalized at the arena edge so no mass is lost.
  static DensityField Estimate(const std::vector<Vec2>& positions, int grid,
                               double bandwidth, const Box& arena);
  // Normalized nonnegative weights; throws ConfigError otherwise.
  static DensityField FromWeights(int grid, const Box& arena,
                                  std::vector<double> weights);
  // Isotropic Gaussian evaluated at cell centres, then smoothed.
  static DensityField Gaussian(Vec2 center, double std, int grid,
                               double bandwidth, const Box& arena);

  int grid() const { return grid_; }
  const Box& arena() const { return arena_; }
  const std::vector<double>& cells() const { return cells_; }
  int CellIndex(Vec2 p) const;
  double CellMass(Vec2 p) const { return cells_[CellIndex(p)]; }
  // Mass per unit area at p.
  double Density(Vec2 p) const;
  double MaxCell() const;
  double Sum() const;

 private:
  int grid_ = 0;
  Box arena_;
  std::vector<double> cells_;
};

struct TargetSchedule {
  std::vector<DensityField> targets;  // one per step

  void Validate(const CrowdWorld& world) const;
  // {"steps": [{"gaussian": {"center": [x, y], "std": s}} | {"weights":
  // [[...], ...]}]}; weights rows are indexed by y.
  static TargetSchedule FromJson(const nlohmann::json& j,
                                 const CrowdWorld& world);
};

// x' = alpha x + beta u + eps, eps ~ N(0, Sigma), clipped to the arena.
// noise[i] supplies agent i's standard-normal pair.
std::vector<Vec2> CrowdStep(const CrowdWorld& world,
                            const std::vector<Vec2>& positions,
                            const std::vector<Vec2>& actions,
                            const std::vector<Vec2>& noise);
// Same, drawing the noise from per-agent streams of `seed`.
std::vector<Vec2> CrowdStep(const CrowdWorld& world,
                            const std::vector<Vec2>& positions,
                            const std::vector<Vec2>& actions, uint64_t seed);

// -|x - x~_t|^2 - c_cong m^2.
double Desirability(const CrowdWorld& world, int t, Vec2 x, double m);
// Desirability at x minus 0.5 u^T K u, with m read from `density`.
double IntrinsicReward(const CrowdWorld& world, int t, Vec2 x, Vec2 u,
                       const DensityField& density);

inline constexpr double kKlFloor = 1e-8;

// sum p log(p / q) with q floored at `floor` and renormalized.
double KlDivergence(const DensityField& p, const DensityField& q,
                    double floor = kKlFloor);
double KlDivergence(const std::vector<double>& p, const std::vector<double>& q,
                    double floor = kKlFloor);

// -sum_t KL(M^a_t || M*_t).
double DesignerRewardCrowd(const std::vector<DensityField>& densities,
                           const TargetSchedule& targets);

// Modifier features, each scaled to [0, 1]: squared distance to the
// attraction point over the squared arena diagonal, target cell mass over
// the largest target cell, and local density over density_cap.
std::vector<FeatureSpec> CrowdFeatures();
ModifierParams MakeCrowdParams(int order, double coeff_lo = -10.0,
                               double coeff_hi = 10.0);
std::array<double, 3> CrowdFeatureValues(const CrowdWorld& world, int t,
                                         Vec2 x, const DensityField& density,
                                         const DensityField* target);

// Shared Gaussian policy u ~ N(a_t + B_t x, sigma_t^2 I).
struct GaussianPolicy {
  // Per step: {a0, a1, B00, B01, B10, B11}.
  std::vector<std::array<double, 6>> mean;
  std::vector<double> log_std;

  static GaussianPolicy Zero(int horizon, double std);
  Vec2 Mean(int t, Vec2 x) const;
  std::vector<double> Flatten() const;
};

struct CrowdEpisode {
  std::vector<std::vector<Vec2>> positions;  // t = 0..T
  std::vector<std::vector<Vec2>> actions;    // t = 0..T-1
  std::vector<std::vector<double>> rewards;  // [t][agent], modified
  std::vector<DensityField> densities;       // after each step, t = 1..T
  double incentive = 0.0;                    // sum over agents and steps
  double intrinsic_welfare = 0.0;            // mean over agents
};

// Agent i draws its start, action noise and dynamics noise from stream
// stream_ids[i] (i + 1 when empty), so relabelling agents together with
// their streams leaves the densities bit-identical.
CrowdEpisode CrowdRollout(const CrowdWorld& world, const GaussianPolicy& policy,
                          const TargetSchedule* targets,
                          const ModifierParams* modifier, uint64_t seed,
                          const std::vector<uint64_t>& stream_ids = {});

struct CrowdTrainerConfig {
  int max_iterations = 150;
  int batch_episodes = 4;
  double mean_learning_rate = 0.5;
  double std_learning_rate = 0.05;
  // Trust region: root-mean-square change of the action mean per update.
  double max_mean_step = 0.05;
  double initial_std = 0.2;
  double min_std = 0.02;
  double max_std = 0.5;
  double convergence_tol = 1e-3;
  int convergence_window = 10;
  uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static CrowdTrainerConfig FromJson(const nlohmann::json& j);
};

struct CrowdTrainResult {
  GaussianPolicy policy;
  std::vector<double> mean_return;
  int iterations = 0;
  bool converged = false;
};

// Mean-field policy gradient on the shared policy with a per-step quadratic
// critic as baseline.
CrowdTrainResult TrainCrowd(const CrowdWorld& world,
                            const TargetSchedule* targets,
                            const ModifierParams* modifier,
                            const CrowdTrainerConfig& cfg);

struct CrowdEvaluation {
  double mean_kl = 0.0;  // mean over episodes of sum_t KL
  double std_kl = 0.0;
  double welfare = 0.0;  // mean intrinsic return per agent
  double incentive = 0.0;
  std::vector<DensityField> densities;  // from the first episode
};

CrowdEvaluation EvaluateCrowd(const CrowdWorld& world,
                              const GaussianPolicy& policy,
                              const TargetSchedule& targets,
                              const ModifierParams* modifier, int episodes,
                              uint64_t seed);

// CSV: t, ix, iy, mass.
void WriteDensityCsv(const std::vector<DensityField>& densities,
                     std::ostream& os);

}  // namespace idesign

#endif  // IDESIGN_CROWD_H_
