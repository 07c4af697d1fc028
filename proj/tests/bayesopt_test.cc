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

#include <cmath>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "idesign/bayesopt.h"
#include "idesign/errors.h"
#include "idesign/rng.h"

namespace idesign {
namespace {

GpHyper Hyper(double lengthscale, double noise) {
  GpHyper h;
  h.signal_var = 1.0;
  h.lengthscale = lengthscale;
  h.noise_var = noise;
  return h;
}

TEST(GpTest, OnePointInterpolates) {
  const GpSurrogate gp =
      GpSurrogate::Fit({{0.4}}, {3.0}, {0.0}, {1.0}, Hyper(0.2, 1e-10));
  const Posterior p = gp.Predict({0.4});
  EXPECT_NEAR(p.mean, 3.0, 1e-6);
  EXPECT_NEAR(p.var, 0.0, 1e-6);
}

TEST(GpTest, PriorWithoutData) {
  const GpSurrogate gp = GpSurrogate::Fit({}, {}, {0.0, 0.0}, {1.0, 1.0},
                                          Hyper(0.2, 1e-6));
  const Posterior p = gp.Predict({0.3, 0.9});
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_NEAR(p.var, 1.0, 1e-12);
}

TEST(GpTest, QuadraticTrainingTargetsRecovered) {
  std::vector<std::vector<double>> w;
  std::vector<double> J;
  for (int k = 0; k < 5; ++k) {
    const double x = -1.0 + 0.5 * k;
    w.push_back({x});
    J.push_back(2.0 * x * x - x + 0.5);
  }
  const GpSurrogate gp = GpSurrogate::Fit(w, J, {-1.0}, {1.0}, Hyper(0.3, 1e-6));
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(gp.Predict(w[k]).mean, J[k], 1e-5);
  const GpSurrogate tight = GpSurrogate::Fit(w, J, {-1.0}, {1.0}, Hyper(0.3, 1e-12));
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(tight.Predict(w[k]).mean, J[k], 1e-6);
}

TEST(GpTest, FarFromDataRevertsToPrior) {
  const GpSurrogate gp = GpSurrogate::Fit({{0.0}, {0.05}}, {1.0, 2.0}, {0.0},
                                          {100.0}, Hyper(0.01, 1e-8));
  const Posterior p = gp.Predict({90.0});
  EXPECT_NEAR(p.mean, gp.y_mean(), 1e-9);
  EXPECT_NEAR(p.var, gp.y_scale() * gp.y_scale(), 1e-9);
}

TEST(GpTest, SymmetricPairMidpoint) {
  const GpSurrogate gp = GpSurrogate::Fit({{0.3}, {0.7}}, {1.0, 3.0}, {0.0},
                                          {1.0}, Hyper(0.25, 1e-6));
  EXPECT_NEAR(gp.Predict({0.5}).mean, 2.0, 1e-12);
}

TEST(GpTest, NonFiniteTargetsSkipped) {
  const double ninf = -INFINITY;
  const GpSurrogate gp = GpSurrogate::Fit({{0.1}, {0.5}, {0.9}}, {1.0, ninf, 2.0},
                                          {0.0}, {1.0}, Hyper(0.2, 1e-6));
  EXPECT_EQ(gp.num_points(), 2);
}

TEST(GpTest, AutoHyperparametersMaximizeLikelihood) {
  std::vector<std::vector<double>> w;
  std::vector<double> J;
  Rng rng = MakeRng(1, {});
  for (int k = 0; k < 15; ++k) {
    const double x = Uniform01(rng), y = Uniform01(rng);
    w.push_back({x, y});
    J.push_back(std::sin(3 * x) + y * y);
  }
  const GpSurrogate gp = GpSurrogate::Fit(w, J, {0, 0}, {1, 1});
  const GpSurrogate fixed = GpSurrogate::Fit(w, J, {0, 0}, {1, 1}, Hyper(0.05, 0.1));
  EXPECT_GE(gp.log_marginal_likelihood(), fixed.log_marginal_likelihood());
}

TEST(ExpectedImprovementTest, ZeroVarianceAtIncumbent) {
  EXPECT_EQ(ExpectedImprovement(1.0, 0.0, 1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(ExpectedImprovement(2.0, 0.0, 1.0, 0.25), 0.75);
}

TEST(ExpectedImprovementTest, StandardNormalDensityAtZero) {
  EXPECT_NEAR(ExpectedImprovement(0.0, 1.0, 0.0, 0.0), 1.0 / std::sqrt(2.0 * M_PI),
              1e-12);
}

TEST(ExpectedImprovementTest, NonnegativeAndMonotoneInSigma) {
  Rng rng = MakeRng(5, {});
  for (int k = 0; k < 200; ++k) {
    const double best = 2.0 * Uniform01(rng);
    const double mu = best - 3.0 * Uniform01(rng);
    double prev = -1.0;
    for (double s = 0.0; s < 3.0; s += 0.1) {
      const double ei = ExpectedImprovement(mu, s * s, best, 0.01);
      EXPECT_GE(ei, 0.0);
      EXPECT_GE(ei, prev - 1e-15);
      prev = ei;
    }
  }
}

TEST(ProposeNextTest, EmptyDatasetGivesUniformPointInBox) {
  const std::vector<double> lo = {-2, 0}, hi = {2, 5};
  const auto w = ProposeNext(nullptr, lo, hi, -INFINITY, {}, 3);
  for (int k = 0; k < 2; ++k) {
    EXPECT_GE(w[k], lo[k]);
    EXPECT_LT(w[k], hi[k]);
  }
  EXPECT_EQ(w, ProposeNext(nullptr, lo, hi, -INFINITY, {}, 3));
  EXPECT_NE(w, ProposeNext(nullptr, lo, hi, -INFINITY, {}, 4));
}

TEST(ProposeNextTest, SingleCandidateIsReturned) {
  const GpSurrogate a = GpSurrogate::Fit({{0.2}}, {1.0}, {0.0}, {1.0}, Hyper(0.2, 1e-6));
  const GpSurrogate b = GpSurrogate::Fit({{0.8}, {0.1}}, {0.0, 5.0}, {0.0}, {1.0},
                                         Hyper(0.1, 1e-6));
  ProposalConfig cfg;
  cfg.n_candidates = 1;
  cfg.refine_passes = 0;
  EXPECT_EQ(ProposeNext(&a, {0.0}, {1.0}, 1.0, cfg, 8),
            ProposeNext(&b, {0.0}, {1.0}, 5.0, cfg, 8));
}

TEST(ProposeNextTest, BimodalSurrogateMatchesGridArgmax) {
  // Two good regions near 0.2 and 0.75, the second slightly better.
  const std::vector<std::vector<double>> w = {{0.0}, {0.2}, {0.45}, {0.75}, {1.0}};
  const std::vector<double> J = {0.0, 1.0, 0.1, 1.2, 0.0};
  const GpSurrogate gp = GpSurrogate::Fit(w, J, {0.0}, {1.0}, Hyper(0.1, 1e-6));
  const double best = 1.2;
  double arg = 0.0, top = -1.0;
  for (int k = 0; k <= 10000; ++k) {
    const double x = k / 10000.0;
    const double ei = gp.ExpectedImprovementAt({x}, best, 0.01);
    if (ei > top) {
      top = ei;
      arg = x;
    }
  }
  const auto p = ProposeNext(&gp, {0.0}, {1.0}, best, {}, 2, &w[3]);
  EXPECT_NEAR(p[0], arg, 0.05);
}

TEST(HaltonTest, PointsInUnitCube) {
  const auto pts = HaltonPoints(100, 3, {0.3, 0.6, 0.9});
  ASSERT_EQ(pts.size(), 100u);
  for (const auto& p : pts) {
    for (double x : p) {
      EXPECT_GE(x, 0.0);
      EXPECT_LT(x, 1.0);
    }
  }
}

TEST(DatasetTest, CsvRoundTripAndBest) {
  DesignerDataset d;
  d.Add({0.1, 0.2}, -1.0);
  d.Add({0.3, -0.4}, -INFINITY);
  d.Add({0.5, 0.6}, 2.5);
  EXPECT_EQ(d.best_index, 2);
  EXPECT_EQ(d.best_J(), 2.5);
  std::stringstream ss;
  d.WriteCsv(ss);
  const DesignerDataset e = DesignerDataset::ReadCsv(ss);
  EXPECT_EQ(e.w, d.w);
  EXPECT_EQ(e.J, d.J);
  EXPECT_EQ(e.best_index, 2);
}

}  // namespace
}  // namespace idesign
