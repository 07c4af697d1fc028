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

#include "idesign/incentive.h"

#include <algorithm>
#include <cmath>

#include "idesign/errors.h"
#include "idesign/game.h"
#include "idesign/json_util.h"

namespace idesign {

double EvalPolynomial(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (size_t k = coeffs.size(); k-- > 0;) acc = acc * x + coeffs[k];
  return acc;
}

bool operator==(const FeatureSpec& a, const FeatureSpec& b) {
  return a.name == b.name && a.lo == b.lo && a.hi == b.hi;
}

bool operator==(const ModifierParams& a, const ModifierParams& b) {
  return a.features_ == b.features_ && a.order_ == b.order_ &&
         a.coefficients_ == b.coefficients_ && a.lower_ == b.lower_ &&
         a.upper_ == b.upper_;
}

ModifierParams::ModifierParams(std::vector<FeatureSpec> features, int order,
                               double coeff_lo, double coeff_hi)
    : features_(std::move(features)), order_(order) {
  if (order_ < 0) throw ConfigError("modifier: order must be >= 0");
  if (!(coeff_lo <= coeff_hi)) throw ConfigError("modifier: empty bounds");
  const size_t l = features_.size() * (order_ + 1);
  coefficients_.assign(l, 0.0);
  if (coeff_lo > 0.0 || coeff_hi < 0.0) {
    for (double& c : coefficients_) c = coeff_lo;
  }
  lower_.assign(l, coeff_lo);
  upper_.assign(l, coeff_hi);
}

int ModifierParams::FeatureIndex(const std::string& name) const {
  for (int f = 0; f < num_features(); ++f) {
    if (features_[f].name == name) return f;
  }
  return -1;
}

void ModifierParams::set_coefficients(std::span<const double> coeffs) {
  if (coeffs.size() != coefficients_.size()) {
    throw ConfigError("modifier: expected " +
                      std::to_string(coefficients_.size()) +
                      " coefficients, got " + std::to_string(coeffs.size()));
  }
  for (size_t k = 0; k < coeffs.size(); ++k) {
    if (!(coeffs[k] >= lower_[k] && coeffs[k] <= upper_[k])) {
      throw ConfigError("modifier: coefficient " + std::to_string(k) +
                        " outside bounds");
    }
  }
  coefficients_.assign(coeffs.begin(), coeffs.end());
}

ModifierParams ModifierParams::WithCoefficients(
    std::span<const double> coeffs) const {
  ModifierParams p = *this;
  p.set_coefficients(coeffs);
  return p;
}

void ModifierParams::set_bounds(std::vector<double> lower,
                                std::vector<double> upper) {
  if (lower.size() != coefficients_.size() ||
      upper.size() != coefficients_.size()) {
    throw ConfigError("modifier: bounds size mismatch");
  }
  for (size_t k = 0; k < lower.size(); ++k) {
    if (!(lower[k] <= upper[k])) throw ConfigError("modifier: empty bounds");
    coefficients_[k] = std::clamp(coefficients_[k], lower[k], upper[k]);
  }
  lower_ = std::move(lower);
  upper_ = std::move(upper);
}

bool ModifierParams::IsZero() const {
  for (double c : coefficients_) {
    if (c != 0.0) return false;
  }
  return true;
}

double ModifierParams::EvalFeature(int feature, double value) const {
  const FeatureSpec& spec = features_[feature];
  constexpr double kSlack = 1e-9;
  if (!(value >= spec.lo - kSlack && value <= spec.hi + kSlack)) {
    throw EvaluationError("feature '" + spec.name + "' value " +
                          std::to_string(value) + " outside declared range");
  }
  return EvalPolynomial(row(feature), value);
}

double ModifierParams::Eval(std::span<const double> feature_values) const {
  if (static_cast<int>(feature_values.size()) != num_features()) {
    throw EvaluationError("modifier: expected " +
                          std::to_string(num_features()) + " feature values");
  }
  double theta = 0.0;
  for (int f = 0; f < num_features(); ++f) {
    theta += EvalFeature(f, feature_values[f]);
  }
  return theta;
}

nlohmann::json ModifierParams::ToJson() const {
  nlohmann::json feats = nlohmann::json::array();
  for (const FeatureSpec& f : features_) {
    feats.push_back({{"name", f.name}, {"range", {f.lo, f.hi}}});
  }
  nlohmann::json bounds = nlohmann::json::array();
  for (size_t k = 0; k < lower_.size(); ++k) {
    bounds.push_back({lower_[k], upper_[k]});
  }
  return {{"features", feats},
          {"order", order_},
          {"bounds", bounds},
          {"coefficients", coefficients_}};
}

ModifierParams ModifierParams::FromJson(const nlohmann::json& j) {
  const std::string where = "modifier";
  CheckKeys(j, {"features", "order", "bounds", "coefficients"}, where);
  std::vector<FeatureSpec> feats;
  for (const auto& f : Require<nlohmann::json>(j, "features", where)) {
    if (f.is_string()) {
      feats.push_back({f.get<std::string>(), 0.0, 1.0});
      continue;
    }
    CheckKeys(f, {"name", "range"}, where + ".features");
    FeatureSpec spec;
    spec.name = Require<std::string>(f, "name", where + ".features");
    const auto range = Optional<std::vector<double>>(
        f, "range", {0.0, 1.0}, where + ".features");
    if (range.size() != 2 || !(range[0] <= range[1])) {
      throw ConfigError(where + ".features." + spec.name + ".range: invalid");
    }
    spec.lo = range[0];
    spec.hi = range[1];
    feats.push_back(spec);
  }
  const int order = Require<int>(j, "order", where);
  ModifierParams p(std::move(feats), order);
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    std::vector<double> lo, hi;
    // Either one [lo, hi] pair for every coefficient or one pair each.
    if (b.size() == 2 && b[0].is_number()) {
      lo.assign(p.dimension(), b[0].get<double>());
      hi.assign(p.dimension(), b[1].get<double>());
    } else {
      for (const auto& pair : b) {
        if (pair.size() != 2) throw ConfigError(where + ".bounds: invalid pair");
        lo.push_back(pair[0].get<double>());
        hi.push_back(pair[1].get<double>());
      }
    }
    p.set_bounds(std::move(lo), std::move(hi));
  }
  if (j.contains("coefficients")) {
    p.set_coefficients(
        Require<std::vector<double>>(j, "coefficients", where));
  }
  return p;
}

double ShapingTerm(const ModifierParams& w, double gamma,
                   std::optional<std::span<const double>> prev_features,
                   std::span<const double> curr_features) {
  std::optional<double> prev;
  if (prev_features) prev = w.Eval(*prev_features);
  return ShapingTerm(gamma, prev, w.Eval(curr_features));
}

double FiniteModifier::Theta(int state, int joint) const {
  const size_t idx = static_cast<size_t>(state) * num_joint_actions + joint;
  double theta = 0.0;
  for (int f = 0; f < params.num_features(); ++f) {
    theta += params.EvalFeature(f, feature_table[f][idx]);
  }
  return theta;
}

FiniteMarkovGame ModifiedReward(const FiniteMarkovGame& game,
                                const FiniteModifier& modifier) {
  if (modifier.mode != ModifierMode::kAdditive) {
    throw ConfigError("modified_reward: shaping modifiers act on trajectories");
  }
  const int J = game.NumJointActions();
  if (modifier.num_joint_actions != J) {
    throw ConfigError("modified_reward: feature table shape mismatch");
  }
  FiniteMarkovGame g = game;
  if (modifier.params.IsZero()) return g;
  for (int i = 0; i < game.num_agents; ++i) {
    for (int s = 0; s < game.num_states; ++s) {
      for (int j = 0; j < J; ++j) {
        g.rewards[(static_cast<size_t>(i) * game.num_states + s) * J + j] +=
            modifier.Theta(s, j);
      }
    }
  }
  return g;
}

IncentiveLedger CumulativeIncentive(const Trajectory& traj,
                                    const FiniteMarkovGame& game,
                                    const FiniteModifier& modifier) {
  IncentiveLedger ledger;
  std::optional<double> prev;
  for (const Trajectory::Step& st : traj.steps) {
    const double theta = modifier.Theta(st.state, game.JointIndex(st.actions));
    double paid = 0.0;
    for (int i = 0; i < game.num_agents; ++i) {
      paid += modifier.mode == ModifierMode::kAdditive
                  ? theta
                  : ShapingTerm(game.discounts[i], prev, theta);
    }
    prev = theta;
    ledger.Add(paid);
  }
  return ledger;
}

}  // namespace idesign
