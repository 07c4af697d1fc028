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

#ifndef IDESIGN_BAYESOPT_H_
#define IDESIGN_BAYESOPT_H_

// Gaussian-process surrogate with a squared-exponential kernel and
// expected-improvement proposals over a box.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace idesign {

struct DesignerDataset {
  std::vector<std::vector<double>> w;
  std::vector<double> J;  // -infinity marks a failed evaluation
  int best_index = -1;

  int size() const { return static_cast<int>(J.size()); }
  void Add(std::vector<double> point, double value);
  double best_J() const;
  // Columns k, w0.., J.
  void WriteCsv(std::ostream& os) const;
  static DesignerDataset ReadCsv(std::istream& is);
};

struct GpHyper {
  double signal_var = 1.0;
  double lengthscale = 0.2;  // isotropic, on the unit box
  // Per-dimension lengthscales; overrides `lengthscale` when non-empty.
  std::vector<double> lengthscales;
  double noise_var = 1e-6;

  nlohmann::json ToJson() const;
};

struct Posterior {
  double mean = 0.0;
  double var = 0.0;
};

class GpSurrogate {
 public:
  // Fits to the finite entries of (w, J). Inputs are mapped to the unit box
  // by [lower, upper] and targets are centred and scaled. With no `hyper`
  // the hyperparameters maximize the marginal likelihood over a log grid.
  // Throws NumericError if the kernel matrix cannot be factorized.
  static GpSurrogate Fit(const std::vector<std::vector<double>>& w,
                         const std::vector<double>& J,
                         std::vector<double> lower, std::vector<double> upper,
                         std::optional<GpHyper> hyper = {});

  // Predictive distribution of J (original units) at w.
  Posterior Predict(const std::vector<double>& w) const;
  // EI at w on the normalized scale, where xi is applied.
  double ExpectedImprovementAt(const std::vector<double>& w, double J_best,
                               double xi) const;

  const GpHyper& hyper() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  double jitter() const { return jitter_; }
  int num_points() const { return static_cast<int>(x_.size()); }
  double y_mean() const { return y_mean_; }
  double y_scale() const { return y_scale_; }

 private:
  Posterior PredictUnit(const Eigen::VectorXd& u) const;
  Eigen::VectorXd ToUnit(const std::vector<double>& w) const;
  double Kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  // Returns false when even the largest jitter fails.
  bool Factorize();

  std::vector<double> lower_, upper_;
  std::vector<Eigen::VectorXd> x_;
  Eigen::VectorXd y_;  // normalized targets
  double y_mean_ = 0.0, y_scale_ = 1.0;
  GpHyper hyper_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
  double jitter_ = 0.0;
};

// E[max(X - J_best - xi, 0)] for X ~ N(mu, var).
double ExpectedImprovement(double mu, double var, double J_best, double xi);

struct ProposalConfig {
  int n_candidates = 2048;
  int refine_passes = 16;
  double xi = 0.01;
};

// Maximizes EI over a randomly shifted Halton set, then refines the winner
// and the incumbent by coordinate search with halving steps. Ties go to the
// lowest candidate index. With no surrogate (or an empty one) returns a
// uniform point in the box.
std::vector<double> ProposeNext(const GpSurrogate* gp,
                                const std::vector<double>& lower,
                                const std::vector<double>& upper,
                                double J_best, const ProposalConfig& cfg,
                                uint64_t seed,
                                const std::vector<double>* incumbent = nullptr);

// First n points of the Halton sequence in d dimensions, shifted modulo 1.
std::vector<std::vector<double>> HaltonPoints(int n, int d,
                                              const std::vector<double>& shift);

}  // namespace idesign

#endif  // IDESIGN_BAYESOPT_H_
