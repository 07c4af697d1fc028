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

#include "idesign/bayesopt.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "idesign/errors.h"
#include "idesign/rng.h"

namespace idesign {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double NormPdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double NormCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<int> Primes(int n) {
  std::vector<int> p;
  for (int c = 2; static_cast<int>(p.size()) < n; ++c) {
    bool prime = true;
    for (int q : p) {
      if (q * q > c) break;
      if (c % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime) p.push_back(c);
  }
  return p;
}

double RadicalInverse(int i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

}  // namespace

void DesignerDataset::Add(std::vector<double> point, double value) {
  w.push_back(std::move(point));
  J.push_back(value);
  if (best_index < 0 || value > J[best_index]) best_index = size() - 1;
}

double DesignerDataset::best_J() const {
  return best_index < 0 ? -kInf : J[best_index];
}

void DesignerDataset::WriteCsv(std::ostream& os) const {
  const size_t d = w.empty() ? 0 : w[0].size();
  os << "k";
  for (size_t i = 0; i < d; ++i) os << ",w" << i;
  os << ",J\n";
  char buf[64];
  for (int k = 0; k < size(); ++k) {
    os << k;
    for (double x : w[k]) {
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      os << ',' << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", J[k]);
    os << ',' << buf << '\n';
  }
}

DesignerDataset DesignerDataset::ReadCsv(std::istream& is) {
  DesignerDataset d;
  std::string line;
  if (!std::getline(is, line)) return d;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("dataset csv: bad number '" + cell + "'");
      }
    }
    if (row.size() < 2) throw ConfigError("dataset csv: short row");
    const double j = row.back();
    d.Add(std::vector<double>(row.begin() + 1, row.end() - 1), j);
  }
  return d;
}

nlohmann::json GpHyper::ToJson() const {
  nlohmann::json j;
  j["signal_var"] = signal_var;
  if (lengthscales.empty()) {
    j["lengthscale"] = lengthscale;
  } else {
    j["lengthscales"] = lengthscales;
  }
  j["noise_var"] = noise_var;
  return j;
}

double ExpectedImprovement(double mu, double var, double J_best, double xi) {
  const double gain = mu - J_best - xi;
  const double sigma = std::sqrt(std::max(var, 0.0));
  if (sigma <= 0.0) return std::max(gain, 0.0);
  const double z = gain / sigma;
  return std::max(0.0, gain * NormCdf(z) + sigma * NormPdf(z));
}

Eigen::VectorXd GpSurrogate::ToUnit(const std::vector<double>& w) const {
  if (w.size() != lower_.size()) throw ConfigError("gp: dimension mismatch");
  Eigen::VectorXd u(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    const double span = upper_[i] - lower_[i];
    u(i) = span > 0.0 ? (w[i] - lower_[i]) / span : 0.0;
  }
  return u;
}

double GpSurrogate::Kernel(const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b) const {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double l =
        hyper_.lengthscales.empty() ? hyper_.lengthscale : hyper_.lengthscales[i];
    const double d = (a(i) - b(i)) / l;
    s += d * d;
  }
  return hyper_.signal_var * std::exp(-0.5 * s);
}

bool GpSurrogate::Factorize() {
  const int n = num_points();
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) k(i, j) = k(j, i) = Kernel(x_[i], x_[j]);
  }
  k.diagonal().array() += hyper_.noise_var;
  for (double jit : {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jit;
    llt_.compute(kj);
    if (llt_.info() == Eigen::Success) {
      jitter_ = jit;
      alpha_ = llt_.solve(y_);
      const Eigen::MatrixXd l = llt_.matrixL();
      lml_ = -0.5 * y_.dot(alpha_) - l.diagonal().array().log().sum() -
             0.5 * n * std::log(2.0 * std::numbers::pi);
      return true;
    }
  }
  return false;
}

GpSurrogate GpSurrogate::Fit(const std::vector<std::vector<double>>& w,
                             const std::vector<double>& J,
                             std::vector<double> lower,
                             std::vector<double> upper,
                             std::optional<GpHyper> hyper) {
  if (w.size() != J.size()) throw ConfigError("gp: inputs and targets differ in size");
  if (lower.size() != upper.size()) throw ConfigError("gp: bad bounds");
  GpSurrogate gp;
  gp.lower_ = std::move(lower);
  gp.upper_ = std::move(upper);
  std::vector<double> ys;
  for (size_t k = 0; k < w.size(); ++k) {
    if (!std::isfinite(J[k])) continue;
    gp.x_.push_back(gp.ToUnit(w[k]));
    ys.push_back(J[k]);
  }
  const int n = static_cast<int>(ys.size());
  if (n > 0) {
    for (double y : ys) gp.y_mean_ += y / n;
    double ss = 0.0;
    for (double y : ys) ss += (y - gp.y_mean_) * (y - gp.y_mean_);
    const double sd = n > 1 ? std::sqrt(ss / n) : 0.0;
    gp.y_scale_ = sd > 1e-12 ? sd : 1.0;
  }
  gp.y_.resize(n);
  for (int k = 0; k < n; ++k) gp.y_(k) = (ys[k] - gp.y_mean_) / gp.y_scale_;

  if (hyper) {
    gp.hyper_ = *hyper;
    if (!(gp.hyper_.signal_var > 0.0) || !(gp.hyper_.noise_var > 0.0) ||
        !(gp.hyper_.lengthscale > 0.0)) {
      throw ConfigError("gp: hyperparameters must be positive");
    }
    for (double l : gp.hyper_.lengthscales) {
      if (!(l > 0.0)) throw ConfigError("gp: lengthscales must be positive");
    }
    if (!gp.hyper_.lengthscales.empty() &&
        gp.hyper_.lengthscales.size() != gp.lower_.size()) {
      throw ConfigError("gp: one lengthscale per dimension required");
    }
    if (n > 0 && !gp.Factorize()) throw NumericError("gp: factorization failed");
    return gp;
  }
  gp.hyper_ = GpHyper{};
  if (n == 0) return gp;
  GpSurrogate best;
  bool found = false;
  for (double sv : {0.5, 1.0, 2.0}) {
    for (double ls : {0.05, 0.1, 0.2, 0.35, 0.5, 0.8, 1.2, 2.0}) {
      for (double nv : {1e-6, 1e-4, 1e-2, 1e-1}) {
        GpSurrogate cand = gp;
        cand.hyper_.signal_var = sv;
        cand.hyper_.lengthscale = ls;
        cand.hyper_.noise_var = nv;
        if (!cand.Factorize()) continue;
        if (!found || cand.lml_ > best.lml_) {
          best = std::move(cand);
          found = true;
        }
      }
    }
  }
  if (!found) throw NumericError("gp: factorization failed for every grid point");
  return best;
}

Posterior GpSurrogate::PredictUnit(const Eigen::VectorXd& u) const {
  const int n = num_points();
  if (n == 0) return {y_mean_, hyper_.signal_var * y_scale_ * y_scale_};
  Eigen::VectorXd ks(n);
  for (int i = 0; i < n; ++i) ks(i) = Kernel(u, x_[i]);
  const double mu = ks.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(ks);
  const double var = std::max(0.0, hyper_.signal_var - v.squaredNorm());
  return {mu, var};
}

Posterior GpSurrogate::Predict(const std::vector<double>& w) const {
  const Posterior p = PredictUnit(ToUnit(w));
  if (num_points() == 0) return p;
  return {y_mean_ + y_scale_ * p.mean, y_scale_ * y_scale_ * p.var};
}

double GpSurrogate::ExpectedImprovementAt(const std::vector<double>& w,
                                          double J_best, double xi) const {
  const Posterior p = PredictUnit(ToUnit(w));
  const double best = (J_best - y_mean_) / y_scale_;
  return ExpectedImprovement(p.mean, p.var, best, xi);
}

std::vector<std::vector<double>> HaltonPoints(
    int n, int d, const std::vector<double>& shift) {
  const auto primes = Primes(d);
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const double v = RadicalInverse(i + 1, primes[k]) +
                       (shift.empty() ? 0.0 : shift[k]);
      pts[i][k] = v - std::floor(v);
    }
  }
  return pts;
}

std::vector<double> ProposeNext(const GpSurrogate* gp,
                                const std::vector<double>& lower,
                                const std::vector<double>& upper,
                                double J_best, const ProposalConfig& cfg,
                                uint64_t seed,
                                const std::vector<double>* incumbent) {
  if (cfg.n_candidates < 1) throw ConfigError("propose: n_candidates must be >= 1");
  const int d = static_cast<int>(lower.size());
  Rng rng = MakeRng(seed, {0x8a});
  auto from_unit = [&](const std::vector<double>& u) {
    std::vector<double> w(d);
    for (int k = 0; k < d; ++k) w[k] = lower[k] + u[k] * (upper[k] - lower[k]);
    return w;
  };
  std::vector<double> shift(d);
  for (double& s : shift) s = Uniform01(rng);
  if (gp == nullptr || gp->num_points() == 0 || !std::isfinite(J_best)) {
    return from_unit(shift);
  }
  std::vector<std::vector<double>> cands =
      HaltonPoints(cfg.n_candidates, d, shift);
  for (auto& c : cands) c = from_unit(c);
  auto score = [&](const std::vector<double>& w) {
    return gp->ExpectedImprovementAt(w, J_best, cfg.xi);
  };
  int best = 0;
  double best_ei = -1.0;
  for (size_t i = 0; i < cands.size(); ++i) {
    const double ei = score(cands[i]);
    if (ei > best_ei) {
      best_ei = ei;
      best = static_cast<int>(i);
    }
  }
  if (cfg.refine_passes <= 0) return cands[best];

  // Coordinate search from the best candidate and from the incumbent.
  auto refine = [&](std::vector<double> w) {
    double ei = score(w);
    double step = 0.1;
    for (int pass = 0; pass < cfg.refine_passes; ++pass, step *= 0.5) {
      for (int k = 0; k < d; ++k) {
        const double span = upper[k] - lower[k];
        for (double dir : {-1.0, 1.0}) {
          std::vector<double> t = w;
          t[k] = std::clamp(t[k] + dir * step * span, lower[k], upper[k]);
          const double e = score(t);
          if (e > ei) {
            ei = e;
            w = std::move(t);
          }
        }
      }
    }
    return std::make_pair(w, ei);
  };
  auto [w1, e1] = refine(cands[best]);
  if (incumbent != nullptr) {
    auto [w2, e2] = refine(*incumbent);
    if (e2 > e1) return w2;
  }
  return w1;
}

}  // namespace idesign
