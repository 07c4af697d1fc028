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

#ifndef IDESIGN_INCENTIVE_H_
#define IDESIGN_INCENTIVE_H_

// Additive reward modifiers: truncated power series over named scalar
// features, cumulative incentive accounting, and potential-based shaping.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace idesign {

struct FiniteMarkovGame;
struct Trajectory;

struct FeatureSpec {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

// Horner evaluation of sum_k coeffs[k] * x^k.
double EvalPolynomial(std::span<const double> coeffs, double x);

// The parameter vector w of a modifier. Row f holds the order+1 power-series
// coefficients applied to feature f; the flattened row-major layout is the
// search vector seen by the outer optimizer.
class ModifierParams {
 public:
  ModifierParams() = default;
  ModifierParams(std::vector<FeatureSpec> features, int order,
                 double coeff_lo = -10.0, double coeff_hi = 10.0);

  int num_features() const { return static_cast<int>(features_.size()); }
  int order() const { return order_; }
  int dimension() const { return static_cast<int>(coefficients_.size()); }
  const std::vector<FeatureSpec>& features() const { return features_; }
  int FeatureIndex(const std::string& name) const;

  double coefficient(int feature, int power) const {
    return coefficients_[feature * (order_ + 1) + power];
  }
  std::span<const double> coefficients() const { return coefficients_; }
  std::span<const double> row(int feature) const {
    return std::span<const double>(coefficients_).subspan(
        feature * (order_ + 1), order_ + 1);
  }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  // Throws ConfigError on size mismatch or coefficients outside the box.
  void set_coefficients(std::span<const double> coeffs);
  ModifierParams WithCoefficients(std::span<const double> coeffs) const;
  void set_bounds(std::vector<double> lower, std::vector<double> upper);

  bool IsZero() const;

  // Contribution of one feature row; throws EvaluationError naming the
  // feature when `value` is outside its declared range.
  double EvalFeature(int feature, double value) const;
  // Theta = sum over features of the per-feature power series.
  double Eval(std::span<const double> feature_values) const;

  nlohmann::json ToJson() const;
  static ModifierParams FromJson(const nlohmann::json& j);

  friend bool operator==(const ModifierParams&, const ModifierParams&);

 private:
  std::vector<FeatureSpec> features_;
  int order_ = 0;
  std::vector<double> coefficients_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

bool operator==(const FeatureSpec& a, const FeatureSpec& b);

struct IncentiveLedger {
  std::vector<double> per_step_payments;  // sum over agents of Theta at t
  double total = 0.0;                     // Psi

  void Add(double payment) {
    per_step_payments.push_back(payment);
    total += payment;
  }
};

// No net transfer of wealth to the agents: Psi <= 0.
inline bool IsWeaklyBudgetBalanced(const IncentiveLedger& ledger) {
  return ledger.total <= 0.0;
}

// F = gamma * Theta(curr) - Theta(prev). With no previous step Theta(prev) is
// taken as 0, so the first term is gamma * Theta(curr) and the discounted
// episode sum of F collapses to gamma^T * Theta(last step).
inline double ShapingTerm(double gamma, std::optional<double> theta_prev,
                          double theta_curr) {
  return gamma * theta_curr - theta_prev.value_or(0.0);
}
double ShapingTerm(const ModifierParams& w, double gamma,
                   std::optional<std::span<const double>> prev_features,
                   std::span<const double> curr_features);

enum class ModifierMode { kAdditive, kShaping };

// A modifier on a finite game. Feature values are tabulated per
// (state, joint action) so Theta is common to all agents.
struct FiniteModifier {
  ModifierParams params;
  // feature_table[f][state * num_joint_actions + joint]
  std::vector<std::vector<double>> feature_table;
  int num_joint_actions = 0;
  ModifierMode mode = ModifierMode::kAdditive;

  double Theta(int state, int joint) const;
  FiniteModifier WithParams(ModifierParams p) const {
    FiniteModifier m = *this;
    m.params = std::move(p);
    return m;
  }
};

// Returns the game with every agent's reward replaced by R_i + Theta. The
// input game is not modified. Only additive modifiers are accepted.
FiniteMarkovGame ModifiedReward(const FiniteMarkovGame& game,
                                const FiniteModifier& modifier);

// Per-step sum over agents of the incentive actually paid along `traj`
// (Theta in additive mode, F in shaping mode) and the episode total.
IncentiveLedger CumulativeIncentive(const Trajectory& traj,
                                    const FiniteMarkovGame& game,
                                    const FiniteModifier& modifier);

}  // namespace idesign

#endif  // IDESIGN_INCENTIVE_H_
