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

#ifndef IDESIGN_ROUTING_H_
#define IDESIGN_ROUTING_H_

// Selfish routing over a directed acyclic network with polynomial
// congestion latencies and per-edge tolls.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idesign/game.h"
#include "idesign/incentive.h"
#include "idesign/marl.h"
#include "json.hpp"

namespace idesign {

// l(f) = a + b * f^p.
struct Latency {
  double a = 0.0;
  double b = 0.0;
  double p = 1.0;

  double operator()(double f) const;
  double Derivative(double f) const;
  // integral_0^f l(x) dx
  double Integral(double f) const;
};

struct RoutingEdge {
  int from = 0;
  int to = 0;
  Latency latency;

  std::string label() const;  // "from->to"
};

struct RoutingNetwork {
  std::string name;
  std::vector<int> nodes;  // node labels
  std::vector<RoutingEdge> edges;
  int source = 0;
  int sink = 0;
  std::vector<int> monitored_edges;  // indices into edges
  std::vector<int> toll_edges;       // candidate set for tolls
  int n_agents = 1;
  double commodity_per_agent = 1.0;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  double total_commodity() const { return n_agents * commodity_per_agent; }
  int NodeIndex(int label) const;
  // Throws ConfigError for unknown labels.
  int EdgeIndex(const std::string& label) const;
  int EdgeIndex(int from, int to) const;
  // out_edges()[node index] lists edge indices leaving that node.
  std::vector<std::vector<int>> OutEdges() const;
  // Node indices such that every edge goes forward.
  std::vector<int> TopologicalOrder() const;

  // Throws ConfigError naming the offending field.
  void Validate() const;
  nlohmann::json ToJson() const;
  static RoutingNetwork FromJson(const nlohmann::json& j);
};

bool operator==(const RoutingNetwork& a, const RoutingNetwork& b);

RoutingNetwork LoadNetwork(const std::string& text);
RoutingNetwork LoadNetworkFile(const std::string& path);
void SaveNetworkFile(const RoutingNetwork& net, const std::string& path);

// Diamond 1 -> {2, 3} -> 4 with side links l = f, cross links l = 1 and a
// free shortcut 3 -> 2. Monitored edges are the four branch edges.
RoutingNetwork BraessNetwork(int n_agents = 20);

struct FlowState {
  std::vector<double> per_edge_flow;
  int time = 0;
};

// Per-agent commodity mass at each node, mass[agent][node index], as a
// fraction of the agent's commodity.
using NodeMass = std::vector<std::vector<double>>;
// splits[agent][node index] maps an outgoing edge index to the fraction of
// the agent's mass at that node sent along it.
using NodeSplits = std::vector<std::vector<std::map<int, double>>>;

struct StepResult {
  NodeMass next;
  FlowState flow;
  std::vector<double> costs;  // per agent, sum_e share_e * l_e(f_e)
};

// Moves every agent's mass one hop. Mass that has reached the sink stays
// there. Throws ActionError when a split is not a distribution over the
// outgoing edges of its node.
StepResult Step(const RoutingNetwork& net, const NodeMass& mass,
                const NodeSplits& splits, int time);

// R_ID = -sum_t sqrt(sum_{e in E'} (f*(t) - f_e(t))^2), f* the mean over E'.
double DesignerRewardFlow(const std::vector<FlowState>& flows,
                          const std::vector<int>& monitored);

// -sum_e integral_0^{f_e} l_e.
double BeckmannPotential(const RoutingNetwork& net, const FlowState& flow);

// The toll applied to the agents crossing edge e is a power series
// Theta_e(f_e) in the edge flow; one feature row per toll edge.
ModifierParams MakeTollParams(const RoutingNetwork& net, int order,
                              double coeff_lo = -10.0, double coeff_hi = 10.0);

// Routing game as an episodic environment. Each episode is one period: every
// agent splits its commodity over the network according to its per-node
// policy, latencies are charged on the resulting period flow, and a single
// path is sampled per agent to produce its learning signal. Observations are
// node indices; the sink has a single inert action.
class RoutingEnv : public EpisodicEnv {
 public:
  RoutingEnv(RoutingNetwork net, std::optional<ModifierParams> tolls = {});

  int num_agents() const override { return net_.n_agents; }
  std::vector<int> ActionsPerObservation(int agent) const override;
  double Discount(int) const override { return 1.0; }
  void SampleEpisode(const PolicyProbs& probs, uint64_t seed,
                     std::vector<std::vector<AgentTransition>>& out)
      const override;

  const RoutingNetwork& network() const { return net_; }
  const std::optional<ModifierParams>& tolls() const { return tolls_; }

  // usage[agent][edge]: fraction of the agent's commodity crossing the edge.
  std::vector<std::vector<double>> EdgeUsage(const PolicyProbs& probs) const;
  std::vector<std::vector<double>> EdgeUsage(const JointPolicy& policy) const;
  FlowState PeriodFlow(const std::vector<std::vector<double>>& usage) const;
  FlowState PeriodFlow(const JointPolicy& policy) const;

  // Toll paid or received per unit of commodity on edge e at flow f.
  double Toll(int edge, double flow) const;
  // Per-agent value: sum_e usage_e * (Theta_e(f_e) - l_e(f_e)).
  std::vector<double> ExactValues(const JointPolicy& policy) const;
  // Commodity-weighted latency welfare, -sum_e f_e l_e(f_e); tolls excluded.
  double SocialWelfare(const JointPolicy& policy) const;
  // Commodity-weighted total toll transfer sum_e f_e Theta_e(f_e).
  double CumulativeIncentive(const JointPolicy& policy) const;

  // Max over agents of the gain from switching to the best single path.
  double BestResponseGap(const JointPolicy& policy) const;
  // All source-to-sink paths as edge-index lists.
  std::vector<std::vector<int>> Paths() const;
  // Largest ascent rate of the Beckmann potential when a small amount of
  // aggregate flow is moved between two edges leaving the same node.
  double BeckmannStationarity(const JointPolicy& policy,
                              double eps = 1e-5) const;

  JointPolicy UniformPolicy(bool shared = false) const;
  // Deterministic policy that routes everything along `path`.
  TabularPolicy PathPolicy(const std::vector<int>& path) const;

  void WriteFlowCsv(const std::vector<FlowState>& flows,
                    std::ostream& os) const;

 private:
  RoutingNetwork net_;
  std::optional<ModifierParams> tolls_;
  std::vector<std::vector<int>> out_;
  std::vector<int> order_;
  std::vector<int> head_;  // node index at the end of each edge
  std::vector<int> toll_row_;  // feature row per edge, -1 if untolled
  int source_index_ = 0;
  int sink_index_ = 0;
};

// Exact potential of the finite-population splittable game with affine
// latencies and at most linear tolls:
//   sum_e [-(a f + b f^2 / 2) / c - (b c / 2) sum_i x_ie^2]
// plus the same expression for the toll with (a, b) = -(w0, w1). Throws
// UnsupportedError for non-affine latencies or toll order above 1.
PotentialOracle RoutingPotentialOracle(const RoutingEnv& env);

std::vector<DeviationPair> RandomRoutingDeviationPairs(const RoutingEnv& env,
                                                       int count,
                                                       uint64_t seed,
                                                       double scale = 3.0);

}  // namespace idesign

#endif  // IDESIGN_ROUTING_H_
