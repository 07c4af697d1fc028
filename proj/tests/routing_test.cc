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
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "idesign/errors.h"
#include "idesign/rng.h"
#include "idesign/routing.h"

namespace idesign {
namespace {

std::string Fixture(const std::string& rel) {
  return std::string(IDESIGN_FIXTURE_DIR) + "/" + rel;
}

// Diamond 1 -> {2, 3} -> 4 with the given latencies on 1->2, 1->3, 2->4,
// 3->4.
RoutingNetwork Diamond(std::vector<Latency> l, int n_agents) {
  RoutingNetwork net;
  net.name = "diamond";
  net.nodes = {1, 2, 3, 4};
  net.edges = {{1, 2, l[0]}, {1, 3, l[1]}, {2, 4, l[2]}, {3, 4, l[3]}};
  net.source = 1;
  net.sink = 4;
  net.monitored_edges = {0, 1};
  net.toll_edges = {0, 1, 2, 3};
  net.n_agents = n_agents;
  net.commodity_per_agent = 1.0 / n_agents;
  net.Validate();
  return net;
}

RoutingNetwork SingleEdge(Latency l) {
  RoutingNetwork net;
  net.name = "single";
  net.nodes = {1, 2};
  net.edges = {{1, 2, l}};
  net.source = 1;
  net.sink = 2;
  net.monitored_edges = {0};
  net.n_agents = 1;
  net.commodity_per_agent = 1.0;
  net.Validate();
  return net;
}

NodeMass AtSource(const RoutingNetwork& net, int n) {
  NodeMass m(n, std::vector<double>(net.num_nodes(), 0.0));
  for (auto& row : m) row[net.NodeIndex(net.source)] = 1.0;
  return m;
}

TEST(StepTest, SymmetricSplitGivesEqualFlowsAndCosts) {
  const RoutingNetwork net =
      Diamond({{1, 1, 1}, {1, 1, 1}, {0, 0, 1}, {0, 0, 1}}, 2);
  NodeSplits splits(2, std::vector<std::map<int, double>>(4));
  for (auto& s : splits) s[0] = {{0, 0.5}, {1, 0.5}};
  const StepResult r = Step(net, AtSource(net, 2), splits, 1);
  EXPECT_DOUBLE_EQ(r.flow.per_edge_flow[0], r.flow.per_edge_flow[1]);
  EXPECT_DOUBLE_EQ(r.costs[0], r.costs[1]);
  EXPECT_DOUBLE_EQ(r.next[0][1], 0.5);
}

TEST(StepTest, SingleEdgeQuadraticLatency) {
  const RoutingNetwork net = SingleEdge({1.0, 1.0, 2.0});
  NodeSplits splits(1, std::vector<std::map<int, double>>(2));
  splits[0][0] = {{0, 1.0}};
  const StepResult r = Step(net, AtSource(net, 1), splits, 1);
  EXPECT_DOUBLE_EQ(r.costs[0], 2.0);
  EXPECT_DOUBLE_EQ(r.next[0][1], 1.0);
}

TEST(StepTest, PigouPair) {
  // l1 = 1 constant, l2 = f.
  const RoutingNetwork net =
      Diamond({{1, 0, 1}, {0, 1, 1}, {0, 0, 1}, {0, 0, 1}}, 1);
  NodeSplits all2(1, std::vector<std::map<int, double>>(4));
  all2[0][0] = {{1, 1.0}};
  EXPECT_DOUBLE_EQ(Step(net, AtSource(net, 1), all2, 1).costs[0], 1.0);
  // Social cost f*f + (1-f)*1 is minimized at f = 1/2.
  double best_f = 0.0, best_cost = INFINITY;
  for (int k = 0; k <= 100; ++k) {
    const double f = k / 100.0;
    NodeSplits s(1, std::vector<std::map<int, double>>(4));
    s[0][0] = {{0, 1.0 - f}, {1, f}};
    const double cost = Step(net, AtSource(net, 1), s, 1).costs[0];
    if (cost < best_cost) {
      best_cost = cost;
      best_f = f;
    }
  }
  EXPECT_DOUBLE_EQ(best_f, 0.5);
}

TEST(StepTest, InvalidSplitsRejected) {
  const RoutingNetwork net = BraessNetwork(1);
  NodeSplits bad(1, std::vector<std::map<int, double>>(4));
  bad[0][0] = {{3, 1.0}};  // 2->4 does not leave node 1
  EXPECT_THROW(Step(net, AtSource(net, 1), bad, 1), ActionError);
  bad[0][0] = {{0, 0.7}, {1, 0.7}};
  EXPECT_THROW(Step(net, AtSource(net, 1), bad, 1), ActionError);
}

TEST(DesignerRewardFlowTest, EvenFlowIsZero) {
  FlowState f{{0.5, 0.5, 0.2}, 1};
  EXPECT_EQ(DesignerRewardFlow({f}, {0, 1}), 0.0);
}

TEST(DesignerRewardFlowTest, TwoEdgeImbalance) {
  FlowState f{{1.0, 0.0}, 1};
  EXPECT_DOUBLE_EQ(DesignerRewardFlow({f}, {0, 1}), -std::sqrt(0.5));
}

TEST(DesignerRewardFlowTest, AdditiveOverSteps) {
  // Per-step imbalance norms 0.3 and 0.4.
  const double d1 = 0.3 / std::sqrt(2.0), d2 = 0.4 / std::sqrt(2.0);
  FlowState a{{0.5 + d1, 0.5 - d1}, 1}, b{{0.5 - d2, 0.5 + d2}, 2};
  EXPECT_NEAR(DesignerRewardFlow({a, b}, {0, 1}), -0.7, 1e-12);
}

TEST(BraessNetworkTest, Topology) {
  const RoutingNetwork net = BraessNetwork();
  EXPECT_EQ(net.num_edges(), 5);
  EXPECT_GE(net.EdgeIndex("3->2"), 0);
  EXPECT_EQ(net.monitored_edges.size(), 4u);
}

TEST(BraessNetworkTest, ShippedFixtureMatches) {
  EXPECT_EQ(LoadNetworkFile(Fixture("networks/braess.json")), BraessNetwork(20));
}

TEST(BraessNetworkTest, LargeShortcutTollMakesEvenSplitAnEquilibrium) {
  const RoutingNetwork net = BraessNetwork(20);
  RoutingNetwork tolled = net;
  tolled.toll_edges = {net.EdgeIndex("3->2")};
  ModifierParams w = MakeTollParams(tolled, 0, -2.0, 2.0);
  w.set_coefficients(std::vector<double>{-0.6});
  const RoutingEnv env(tolled, w);
  std::vector<int> upper, lower;
  for (const auto& p : env.Paths()) {
    if (p.size() != 2) continue;
    (net.edges[p[0]].to == 2 ? upper : lower) = p;
  }
  std::vector<TabularPolicy> even;
  for (int i = 0; i < 20; ++i) even.push_back(env.PathPolicy(i % 2 ? upper : lower));
  const JointPolicy p = JointPolicy::Independent(std::move(even));
  EXPECT_LE(env.BestResponseGap(p), 1e-12);
  EXPECT_NEAR(DesignerRewardFlow({env.PeriodFlow(p)}, net.monitored_edges), 0.0,
              1e-12);
  // Without the toll, switching to the shortcut pays.
  EXPECT_GT(RoutingEnv(net).BestResponseGap(p), 0.1);
}

TEST(BraessNetworkTest, ShortcutTollChangesOnlyShortcutUsersRewards) {
  RoutingNetwork net = BraessNetwork(8);
  const int shortcut = net.EdgeIndex("3->2");
  net.toll_edges = {shortcut};
  ModifierParams w = MakeTollParams(net, 1, -2.0, 2.0);
  w.set_coefficients(std::vector<double>{-0.4, 0.3});
  const RoutingEnv plain(net), tolled(net, w);
  const JointPolicy p = plain.UniformPolicy();
  const PolicyProbs probs(p);
  std::vector<std::vector<AgentTransition>> a(8), b(8);
  plain.SampleEpisode(probs, 5, a);
  tolled.SampleEpisode(probs, 5, b);
  const auto out = net.OutEdges();
  const int node3 = net.NodeIndex(3);
  int changed = 0, unchanged = 0;
  for (int i = 0; i < 8; ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (size_t k = 0; k < a[i].size(); ++k) {
      const bool uses = a[i][k].obs == node3 &&
                        out[node3][a[i][k].action] == shortcut;
      if (uses) {
        EXPECT_NE(a[i][k].reward, b[i][k].reward);
        ++changed;
      } else {
        EXPECT_EQ(a[i][k].reward, b[i][k].reward);
        ++unchanged;
      }
    }
  }
  EXPECT_GT(changed, 0);
  EXPECT_GT(unchanged, 0);
}

TEST(LoadNetworkTest, ExtendedCityFixture) {
  const RoutingNetwork net = LoadNetworkFile(Fixture("networks/extended_city.json"));
  EXPECT_EQ(net.num_nodes(), 8);
  EXPECT_EQ(net.num_edges(), 13);
}

TEST(LoadNetworkTest, NegativeSlopeRejectedWithFieldPath) {
  nlohmann::json j = BraessNetwork().ToJson();
  j["edges"][1]["b"] = -0.5;
  try {
    LoadNetwork(j.dump());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("edges[1].b"), std::string::npos);
  }
}

TEST(LoadNetworkTest, UnreachableSinkRejected) {
  RoutingNetwork net = BraessNetwork();
  net.nodes.push_back(9);
  EXPECT_THROW(net.Validate(), ConfigError);
}

TEST(LoadNetworkTest, SaveLoadRoundTrip) {
  const RoutingNetwork net = LoadNetworkFile(Fixture("networks/extended_city.json"));
  const std::string path =
      (std::filesystem::temp_directory_path() / "idesign_city_roundtrip.json")
          .string();
  SaveNetworkFile(net, path);
  EXPECT_EQ(LoadNetworkFile(path), net);
  std::remove(path.c_str());
}

TEST(BeckmannTest, ZeroFlow) {
  const RoutingNetwork net = BraessNetwork();
  EXPECT_EQ(BeckmannPotential(net, FlowState{std::vector<double>(5, 0.0), 1}), 0.0);
}

TEST(BeckmannTest, SingleEdgeIntegral) {
  const RoutingNetwork net = SingleEdge({1.0, 1.0, 2.0});
  EXPECT_DOUBLE_EQ(BeckmannPotential(net, FlowState{{1.0}, 1}), -4.0 / 3.0);
}

TEST(BeckmannTest, ManyAgentLimitMatchesCostChanges) {
  // Three edges, two routes: 1->2 directly or 1->3->2.
  RoutingNetwork net;
  net.name = "tri";
  net.nodes = {1, 2, 3};
  net.edges = {{1, 2, {1.0, 1.0, 2.0}}, {1, 3, {0.0, 0.5, 1.0}},
               {3, 2, {0.2, 1.0, 2.0}}};
  net.source = 1;
  net.sink = 2;
  net.monitored_edges = {0, 1};
  net.n_agents = 10000000;
  net.commodity_per_agent = 1e-7;
  net.Validate();
  const double c = net.commodity_per_agent;
  const double others = (net.n_agents - 1) * c;
  Rng rng = MakeRng(4, {});
  double worst = 0.0;
  auto value = [&](double x0, double xbar) {
    // Agent 0 sends x0 of its unit along 1->3->2; the others send xbar.
    const double f_direct = others * (1 - xbar) + c * (1 - x0);
    const double f_via = others * xbar + c * x0;
    FlowState fs{{f_direct, f_via, f_via}, 1};
    double v = 0.0;
    for (int e = 0; e < 3; ++e) {
      const double share = e == 0 ? 1 - x0 : x0;
      v -= share * net.edges[e].latency(fs.per_edge_flow[e]);
    }
    return std::make_pair(v, BeckmannPotential(net, fs));
  };
  for (int k = 0; k < 100; ++k) {
    const double xbar = Uniform01(rng);
    const double x0 = 0.1 + 0.8 * Uniform01(rng);
    const double d = 0.05 * (2.0 * Uniform01(rng) - 1.0);
    const auto [v, phi] = value(x0, xbar);
    const auto [v2, phi2] = value(x0 + d, xbar);
    worst = std::max(worst, std::abs((v - v2) - (phi - phi2) / c) / std::abs(d));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(RoutingPotentialTest, FiniteAffineWithLinearTollsIsExact) {
  RoutingNetwork net = BraessNetwork(5);
  ModifierParams w = MakeTollParams(net, 1, -1.0, 1.0);
  std::vector<double> c(w.dimension());
  for (size_t k = 0; k < c.size(); ++k) c[k] = 0.1 * (static_cast<double>(k) - 4.0);
  w.set_coefficients(c);
  const RoutingEnv env(net, w);
  EXPECT_LE(VerifyPotential(RoutingPotentialOracle(env),
                            RandomRoutingDeviationPairs(env, 100, 9)),
            1e-9);
}

TEST(RoutingPotentialTest, NonAffineUnsupported) {
  const RoutingEnv env(LoadNetworkFile(Fixture("networks/extended_city.json")));
  EXPECT_THROW(RoutingPotentialOracle(env), UnsupportedError);
}

TEST(RoutingEnvTest, UsageSumsToOneOverSourceEdges) {
  const RoutingEnv env(BraessNetwork(4));
  const auto usage = env.EdgeUsage(env.UniformPolicy());
  for (const auto& u : usage) EXPECT_NEAR(u[0] + u[1], 1.0, 1e-12);
}

TEST(RoutingEnvTest, EpisodesAreDeterministic) {
  const RoutingEnv env(BraessNetwork(6));
  const PolicyProbs probs(env.UniformPolicy());
  std::vector<std::vector<AgentTransition>> a(6), b(6);
  env.SampleEpisode(probs, 7, a);
  env.SampleEpisode(probs, 7, b);
  for (int i = 0; i < 6; ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (size_t k = 0; k < a[i].size(); ++k) {
      EXPECT_EQ(a[i][k].action, b[i][k].action);
      EXPECT_EQ(a[i][k].reward, b[i][k].reward);
    }
  }
}

}  // namespace
}  // namespace idesign
