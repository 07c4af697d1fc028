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

#include "idesign/routing.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "idesign/errors.h"
#include "idesign/json_util.h"

namespace idesign {

double Latency::operator()(double f) const {
  return a + (b == 0.0 ? 0.0 : b * std::pow(f, p));
}

double Latency::Derivative(double f) const {
  if (b == 0.0) return 0.0;
  return p == 1.0 ? b : b * p * std::pow(f, p - 1.0);
}

double Latency::Integral(double f) const {
  return a * f + (b == 0.0 ? 0.0 : b * std::pow(f, p + 1.0) / (p + 1.0));
}

std::string RoutingEdge::label() const {
  return std::to_string(from) + "->" + std::to_string(to);
}

int RoutingNetwork::NodeIndex(int label) const {
  for (int k = 0; k < num_nodes(); ++k) {
    if (nodes[k] == label) return k;
  }
  throw ConfigError("network: unknown node " + std::to_string(label));
}

int RoutingNetwork::EdgeIndex(const std::string& label) const {
  for (int e = 0; e < num_edges(); ++e) {
    if (edges[e].label() == label) return e;
  }
  throw ConfigError("network: unknown edge " + label);
}

int RoutingNetwork::EdgeIndex(int from, int to) const {
  return EdgeIndex(std::to_string(from) + "->" + std::to_string(to));
}

std::vector<std::vector<int>> RoutingNetwork::OutEdges() const {
  std::vector<std::vector<int>> out(num_nodes());
  for (int e = 0; e < num_edges(); ++e) {
    out[NodeIndex(edges[e].from)].push_back(e);
  }
  return out;
}

std::vector<int> RoutingNetwork::TopologicalOrder() const {
  std::vector<int> indeg(num_nodes(), 0);
  for (const RoutingEdge& e : edges) ++indeg[NodeIndex(e.to)];
  const auto out = OutEdges();
  std::vector<int> order, ready;
  for (int k = num_nodes() - 1; k >= 0; --k) {
    if (indeg[k] == 0) ready.push_back(k);
  }
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    order.push_back(u);
    for (int e : out[u]) {
      const int v = NodeIndex(edges[e].to);
      if (--indeg[v] == 0) ready.push_back(v);
    }
  }
  if (static_cast<int>(order.size()) != num_nodes()) {
    throw ConfigError("network.edges: the network has a directed cycle");
  }
  return order;
}

void RoutingNetwork::Validate() const {
  if (nodes.empty()) throw ConfigError("network.nodes: empty");
  std::set<int> seen_nodes(nodes.begin(), nodes.end());
  if (seen_nodes.size() != nodes.size()) {
    throw ConfigError("network.nodes: duplicate node label");
  }
  std::set<std::string> seen_edges;
  for (int e = 0; e < num_edges(); ++e) {
    const RoutingEdge& ed = edges[e];
    const std::string where = "network.edges[" + std::to_string(e) + "]";
    if (!seen_nodes.count(ed.from)) throw ConfigError(where + ".from: unknown node");
    if (!seen_nodes.count(ed.to)) throw ConfigError(where + ".to: unknown node");
    if (ed.from == ed.to) throw ConfigError(where + ": self loop");
    if (!seen_edges.insert(ed.label()).second) {
      throw ConfigError(where + ": duplicate edge " + ed.label());
    }
    const Latency& l = ed.latency;
    if (!std::isfinite(l.a) || l.a < 0.0) throw ConfigError(where + ".a: must be >= 0");
    if (!std::isfinite(l.b) || l.b < 0.0) throw ConfigError(where + ".b: must be >= 0");
    if (!std::isfinite(l.p) || l.p < 1.0) throw ConfigError(where + ".p: must be >= 1");
  }
  if (!seen_nodes.count(source)) throw ConfigError("network.source: unknown node");
  if (!seen_nodes.count(sink)) throw ConfigError("network.sink: unknown node");
  if (source == sink) throw ConfigError("network.sink: equals the source");
  TopologicalOrder();
  const auto out = OutEdges();
  for (int k = 0; k < num_nodes(); ++k) {
    if (nodes[k] == sink && !out[k].empty()) {
      throw ConfigError("network.sink: the sink has outgoing edges");
    }
    if (nodes[k] != sink && out[k].empty()) {
      throw ConfigError("network.nodes: node " + std::to_string(nodes[k]) +
                        " has no outgoing edge, so the sink is unreachable "
                        "from it");
    }
  }
  if (monitored_edges.empty()) throw ConfigError("network.monitored_edges: empty");
  for (int e : monitored_edges) {
    if (e < 0 || e >= num_edges()) throw ConfigError("network.monitored_edges: bad index");
  }
  for (int e : toll_edges) {
    if (e < 0 || e >= num_edges()) throw ConfigError("network.toll_edges: bad index");
  }
  if (n_agents < 1) throw ConfigError("network.n_agents: must be >= 1");
  if (!std::isfinite(commodity_per_agent) || commodity_per_agent <= 0.0) {
    throw ConfigError("network.commodity_per_agent: must be > 0");
  }
}

nlohmann::json RoutingNetwork::ToJson() const {
  nlohmann::json j;
  j["version"] = 1;
  j["name"] = name;
  j["nodes"] = nodes;
  j["edges"] = nlohmann::json::array();
  for (const RoutingEdge& e : edges) {
    j["edges"].push_back({{"from", e.from},
                          {"to", e.to},
                          {"a", e.latency.a},
                          {"b", e.latency.b},
                          {"p", e.latency.p}});
  }
  j["source"] = source;
  j["sink"] = sink;
  j["monitored_edges"] = nlohmann::json::array();
  for (int e : monitored_edges) j["monitored_edges"].push_back(edges[e].label());
  j["toll_edges"] = nlohmann::json::array();
  for (int e : toll_edges) j["toll_edges"].push_back(edges[e].label());
  j["n_agents"] = n_agents;
  j["commodity_per_agent"] = commodity_per_agent;
  return j;
}

RoutingNetwork RoutingNetwork::FromJson(const nlohmann::json& j) {
  const std::string w = "network";
  CheckKeys(j, {"version", "name", "nodes", "edges", "source", "sink",
                "monitored_edges", "toll_edges", "n_agents",
                "commodity_per_agent"},
            w);
  if (Optional<int>(j, "version", 1, w) != 1) {
    throw ConfigError("network.version: unsupported");
  }
  RoutingNetwork net;
  net.name = Optional<std::string>(j, "name", "", w);
  net.nodes = Require<std::vector<int>>(j, "nodes", w);
  if (!j.contains("edges") || !j["edges"].is_array()) {
    throw ConfigError("network.edges: expected an array");
  }
  for (size_t e = 0; e < j["edges"].size(); ++e) {
    const std::string we = w + ".edges[" + std::to_string(e) + "]";
    const auto& je = j["edges"][e];
    CheckKeys(je, {"from", "to", "a", "b", "p"}, we);
    RoutingEdge ed;
    ed.from = Require<int>(je, "from", we);
    ed.to = Require<int>(je, "to", we);
    ed.latency.a = Optional<double>(je, "a", 0.0, we);
    ed.latency.b = Optional<double>(je, "b", 0.0, we);
    ed.latency.p = Optional<double>(je, "p", 1.0, we);
    net.edges.push_back(ed);
  }
  net.source = Require<int>(j, "source", w);
  net.sink = Require<int>(j, "sink", w);
  net.n_agents = Optional<int>(j, "n_agents", 1, w);
  net.commodity_per_agent =
      Optional<double>(j, "commodity_per_agent",
                       1.0 / std::max(net.n_agents, 1), w);
  auto labels = [&](const std::string& key, bool all_default) {
    std::vector<int> out;
    if (!j.contains(key)) {
      if (all_default) {
        for (int e = 0; e < net.num_edges(); ++e) out.push_back(e);
      }
      return out;
    }
    for (const std::string& l :
         Require<std::vector<std::string>>(j, key, w)) {
      try {
        out.push_back(net.EdgeIndex(l));
      } catch (const ConfigError&) {
        throw ConfigError(w + "." + key + ": unknown edge " + l);
      }
    }
    return out;
  };
  net.monitored_edges = labels("monitored_edges", false);
  net.toll_edges = labels("toll_edges", true);
  net.Validate();
  return net;
}

bool operator==(const RoutingNetwork& a, const RoutingNetwork& b) {
  return a.ToJson() == b.ToJson();
}

RoutingNetwork LoadNetwork(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("network: parse error: ") + e.what());
  }
  return RoutingNetwork::FromJson(j);
}

RoutingNetwork LoadNetworkFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("network: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return LoadNetwork(ss.str());
}

void SaveNetworkFile(const RoutingNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("network: cannot write " + path);
  out << net.ToJson().dump(2) << '\n';
}

RoutingNetwork BraessNetwork(int n_agents) {
  RoutingNetwork net;
  net.name = "braess";
  net.nodes = {1, 2, 3, 4};
  net.edges = {{1, 2, {1.0, 0.0, 1.0}},
               {1, 3, {0.0, 1.0, 1.0}},
               {3, 2, {0.0, 0.0, 1.0}},
               {2, 4, {0.0, 1.0, 1.0}},
               {3, 4, {1.0, 0.0, 1.0}}};
  net.source = 1;
  net.sink = 4;
  net.monitored_edges = {0, 1, 3, 4};
  net.toll_edges = {0, 1, 2, 3, 4};
  net.n_agents = n_agents;
  net.commodity_per_agent = 1.0 / n_agents;
  net.Validate();
  return net;
}

StepResult Step(const RoutingNetwork& net, const NodeMass& mass,
                const NodeSplits& splits, int time) {
  const int N = static_cast<int>(mass.size());
  const int V = net.num_nodes();
  const int sink = net.NodeIndex(net.sink);
  if (static_cast<int>(splits.size()) != N) {
    throw ActionError("step: splits must be given for every agent");
  }
  StepResult r;
  r.next.assign(N, std::vector<double>(V, 0.0));
  r.flow.per_edge_flow.assign(net.num_edges(), 0.0);
  r.flow.time = time;
  r.costs.assign(N, 0.0);
  std::vector<std::vector<double>> share(N,
                                         std::vector<double>(net.num_edges()));
  for (int i = 0; i < N; ++i) {
    if (static_cast<int>(mass[i].size()) != V ||
        static_cast<int>(splits[i].size()) != V) {
      throw ActionError("step: agent " + std::to_string(i) +
                        " has the wrong number of nodes");
    }
    for (int u = 0; u < V; ++u) {
      double total = 0.0;
      for (const auto& [e, w] : splits[i][u]) {
        if (e < 0 || e >= net.num_edges() ||
            net.edges[e].from != net.nodes[u]) {
          throw ActionError("step: agent " + std::to_string(i) +
                            " splits over an edge that does not leave node " +
                            std::to_string(net.nodes[u]));
        }
        if (!(w >= 0.0)) throw ActionError("step: negative split weight");
        total += w;
      }
      if (mass[i][u] <= 0.0) continue;
      if (u == sink) {
        r.next[i][u] += mass[i][u];
        continue;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ActionError("step: agent " + std::to_string(i) +
                          " split at node " + std::to_string(net.nodes[u]) +
                          " does not sum to 1");
      }
      for (const auto& [e, w] : splits[i][u]) {
        const double m = mass[i][u] * w;
        share[i][e] += m;
        r.next[i][net.NodeIndex(net.edges[e].to)] += m;
        r.flow.per_edge_flow[e] += net.commodity_per_agent * m;
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    for (int e = 0; e < net.num_edges(); ++e) {
      if (share[i][e] > 0.0) {
        r.costs[i] += share[i][e] *
                      net.edges[e].latency(r.flow.per_edge_flow[e]);
      }
    }
  }
  return r;
}

double DesignerRewardFlow(const std::vector<FlowState>& flows,
                          const std::vector<int>& monitored) {
  if (monitored.empty()) throw ConfigError("designer_reward_flow: empty monitored set");
  if (flows.empty()) throw ConfigError("designer_reward_flow: need T >= 1");
  double r = 0.0;
  for (const FlowState& fs : flows) {
    double mean = 0.0;
    for (int e : monitored) mean += fs.per_edge_flow.at(e);
    mean /= static_cast<double>(monitored.size());
    double sq = 0.0;
    for (int e : monitored) {
      const double d = mean - fs.per_edge_flow[e];
      sq += d * d;
    }
    r -= std::sqrt(sq);
  }
  return r;
}

double BeckmannPotential(const RoutingNetwork& net, const FlowState& flow) {
  double phi = 0.0;
  for (int e = 0; e < net.num_edges(); ++e) {
    phi -= net.edges[e].latency.Integral(flow.per_edge_flow[e]);
  }
  return phi;
}

ModifierParams MakeTollParams(const RoutingNetwork& net, int order,
                              double coeff_lo, double coeff_hi) {
  std::vector<FeatureSpec> features;
  for (int e : net.toll_edges) {
    features.push_back({net.edges[e].label(), 0.0, net.total_commodity()});
  }
  if (features.empty()) throw ConfigError("tolls: the network has no toll edges");
  return ModifierParams(std::move(features), order, coeff_lo, coeff_hi);
}

RoutingEnv::RoutingEnv(RoutingNetwork net, std::optional<ModifierParams> tolls)
    : net_(std::move(net)), tolls_(std::move(tolls)) {
  net_.Validate();
  out_ = net_.OutEdges();
  order_ = net_.TopologicalOrder();
  source_index_ = net_.NodeIndex(net_.source);
  sink_index_ = net_.NodeIndex(net_.sink);
  for (const RoutingEdge& e : net_.edges) head_.push_back(net_.NodeIndex(e.to));
  toll_row_.assign(net_.num_edges(), -1);
  if (tolls_) {
    for (int f = 0; f < tolls_->num_features(); ++f) {
      const int e = net_.EdgeIndex(tolls_->features()[f].name);
      if (toll_row_[e] >= 0) throw ConfigError("tolls: edge tolled twice");
      toll_row_[e] = f;
    }
  }
}

std::vector<int> RoutingEnv::ActionsPerObservation(int) const {
  std::vector<int> a(net_.num_nodes());
  for (int u = 0; u < net_.num_nodes(); ++u) {
    a[u] = std::max<int>(1, out_[u].size());
  }
  return a;
}

double RoutingEnv::Toll(int edge, double flow) const {
  const int row = toll_row_[edge];
  if (row < 0) return 0.0;
  return tolls_->EvalFeature(row, std::clamp(flow, 0.0, net_.total_commodity()));
}

std::vector<std::vector<double>> RoutingEnv::EdgeUsage(
    const PolicyProbs& probs) const {
  const int N = net_.n_agents;
  std::vector<std::vector<double>> usage(N,
                                         std::vector<double>(net_.num_edges()));
  std::vector<double> m(net_.num_nodes());
  for (int i = 0; i < N; ++i) {
    std::fill(m.begin(), m.end(), 0.0);
    m[source_index_] = 1.0;
    for (int u : order_) {
      if (m[u] == 0.0 || u == sink_index_) continue;
      const auto row = probs.Row(i, u);
      for (size_t k = 0; k < out_[u].size(); ++k) {
        const int e = out_[u][k];
        const double x = m[u] * row[k];
        usage[i][e] = x;
        m[head_[e]] += x;
      }
    }
  }
  return usage;
}

std::vector<std::vector<double>> RoutingEnv::EdgeUsage(
    const JointPolicy& policy) const {
  return EdgeUsage(PolicyProbs(policy));
}

FlowState RoutingEnv::PeriodFlow(
    const std::vector<std::vector<double>>& usage) const {
  FlowState fs;
  fs.time = 1;
  fs.per_edge_flow.assign(net_.num_edges(), 0.0);
  for (const auto& u : usage) {
    for (int e = 0; e < net_.num_edges(); ++e) fs.per_edge_flow[e] += u[e];
  }
  for (double& f : fs.per_edge_flow) f *= net_.commodity_per_agent;
  return fs;
}

FlowState RoutingEnv::PeriodFlow(const JointPolicy& policy) const {
  return PeriodFlow(EdgeUsage(policy));
}

void RoutingEnv::SampleEpisode(
    const PolicyProbs& probs, uint64_t seed,
    std::vector<std::vector<AgentTransition>>& out) const {
  const FlowState fs = PeriodFlow(EdgeUsage(probs));
  std::vector<double> reward(net_.num_edges());
  for (int e = 0; e < net_.num_edges(); ++e) {
    const double f = fs.per_edge_flow[e];
    reward[e] = Toll(e, f) - net_.edges[e].latency(f);
  }
  for (int i = 0; i < net_.n_agents; ++i) {
    Rng rng = MakeRng(seed, {static_cast<uint64_t>(i) + 1});
    int u = source_index_;
    while (u != sink_index_) {
      const int k = SampleIndex(probs.Row(i, u), rng);
      const int e = out_[u][k];
      const int v = head_[e];
      out[i].push_back({u, k, reward[e], v == sink_index_ ? -1 : v});
      u = v;
    }
  }
}

std::vector<double> RoutingEnv::ExactValues(const JointPolicy& policy) const {
  const auto usage = EdgeUsage(policy);
  const FlowState fs = PeriodFlow(usage);
  std::vector<double> r(net_.num_edges());
  for (int e = 0; e < net_.num_edges(); ++e) {
    const double f = fs.per_edge_flow[e];
    r[e] = Toll(e, f) - net_.edges[e].latency(f);
  }
  std::vector<double> v(net_.n_agents, 0.0);
  for (int i = 0; i < net_.n_agents; ++i) {
    for (int e = 0; e < net_.num_edges(); ++e) v[i] += usage[i][e] * r[e];
  }
  return v;
}

double RoutingEnv::SocialWelfare(const JointPolicy& policy) const {
  const FlowState fs = PeriodFlow(policy);
  double w = 0.0;
  for (int e = 0; e < net_.num_edges(); ++e) {
    const double f = fs.per_edge_flow[e];
    w -= f * net_.edges[e].latency(f);
  }
  return w;
}

double RoutingEnv::CumulativeIncentive(const JointPolicy& policy) const {
  const FlowState fs = PeriodFlow(policy);
  double psi = 0.0;
  for (int e = 0; e < net_.num_edges(); ++e) {
    psi += fs.per_edge_flow[e] * Toll(e, fs.per_edge_flow[e]);
  }
  return psi;
}

std::vector<std::vector<int>> RoutingEnv::Paths() const {
  std::vector<std::vector<int>> paths;
  std::vector<int> cur;
  std::function<void(int)> dfs = [&](int u) {
    if (u == sink_index_) {
      paths.push_back(cur);
      if (paths.size() > 100000) throw UnsupportedError("routing: too many paths");
      return;
    }
    for (int e : out_[u]) {
      cur.push_back(e);
      dfs(net_.NodeIndex(net_.edges[e].to));
      cur.pop_back();
    }
  };
  dfs(source_index_);
  return paths;
}

double RoutingEnv::BestResponseGap(const JointPolicy& policy) const {
  const auto usage = EdgeUsage(policy);
  const FlowState fs = PeriodFlow(usage);
  const auto paths = Paths();
  const double c = net_.commodity_per_agent;
  double gap = 0.0;
  std::vector<double> f(net_.num_edges());
  for (int i = 0; i < net_.n_agents; ++i) {
    double vi = 0.0;
    for (int e = 0; e < net_.num_edges(); ++e) {
      const double fe = fs.per_edge_flow[e];
      vi += usage[i][e] * (Toll(e, fe) - net_.edges[e].latency(fe));
    }
    for (int e = 0; e < net_.num_edges(); ++e) {
      f[e] = std::max(0.0, fs.per_edge_flow[e] - c * usage[i][e]);
    }
    for (const auto& p : paths) {
      double v = 0.0;
      for (int e : p) {
        const double fe = f[e] + c;
        v += Toll(e, fe) - net_.edges[e].latency(fe);
      }
      gap = std::max(gap, v - vi);
    }
  }
  return gap;
}

double RoutingEnv::BeckmannStationarity(const JointPolicy& policy,
                                        double eps) const {
  const auto usage = EdgeUsage(policy);
  const FlowState fs = PeriodFlow(usage);
  const int V = net_.num_nodes();
  // Aggregate split at each node: mass-weighted mean of the agents' splits.
  const PolicyProbs probs(policy);
  std::vector<std::vector<double>> split(V);
  for (int u = 0; u < V; ++u) {
    if (u == sink_index_) continue;
    split[u].assign(out_[u].size(), 0.0);
    double wsum = 0.0;
    for (int i = 0; i < net_.n_agents; ++i) {
      double w = 0.0;
      for (int e : out_[u]) w += usage[i][e];
      w = std::max(w, 1e-300);
      const auto row = probs.Row(i, u);
      for (size_t k = 0; k < out_[u].size(); ++k) split[u][k] += w * row[k];
      wsum += w;
    }
    for (double& s : split[u]) s /= wsum;
  }
  // Change in edge flow when one unit enters at node u and follows the
  // aggregate splits downstream.
  auto downstream = [&](int u) {
    std::vector<double> d(net_.num_edges(), 0.0), m(V, 0.0);
    m[u] = 1.0;
    for (int x : order_) {
      if (m[x] == 0.0 || x == sink_index_) continue;
      for (size_t k = 0; k < out_[x].size(); ++k) {
        const int e = out_[x][k];
        d[e] += m[x] * split[x][k];
        m[net_.NodeIndex(net_.edges[e].to)] += m[x] * split[x][k];
      }
    }
    return d;
  };
  const double phi0 = BeckmannPotential(net_, fs);
  double worst = 0.0;
  for (int u = 0; u < V; ++u) {
    if (u == sink_index_ || out_[u].size() < 2) continue;
    for (int e1 : out_[u]) {
      const double room = fs.per_edge_flow[e1];
      if (room <= 1e-12) continue;
      const double step = std::min(eps, room);
      const auto d1 = downstream(net_.NodeIndex(net_.edges[e1].to));
      for (int e2 : out_[u]) {
        if (e2 == e1) continue;
        const auto d2 = downstream(net_.NodeIndex(net_.edges[e2].to));
        FlowState moved = fs;
        for (int e = 0; e < net_.num_edges(); ++e) {
          moved.per_edge_flow[e] = std::max(
              0.0, moved.per_edge_flow[e] + step * (d2[e] - d1[e]));
        }
        moved.per_edge_flow[e1] = std::max(0.0, moved.per_edge_flow[e1] - step);
        moved.per_edge_flow[e2] += step;
        worst = std::max(worst, (BeckmannPotential(net_, moved) - phi0) / step);
      }
    }
  }
  return worst;
}

JointPolicy RoutingEnv::UniformPolicy(bool shared) const {
  const TabularPolicy p(ActionsPerObservation(0));
  if (shared) return JointPolicy::Shared(p, net_.n_agents);
  return JointPolicy::Independent(std::vector<TabularPolicy>(net_.n_agents, p));
}

TabularPolicy RoutingEnv::PathPolicy(const std::vector<int>& path) const {
  std::vector<int> choice(net_.num_nodes(), 0);
  for (int e : path) {
    const int u = net_.NodeIndex(net_.edges[e].from);
    const auto it = std::find(out_[u].begin(), out_[u].end(), e);
    if (it == out_[u].end()) throw ConfigError("path_policy: bad path");
    choice[u] = static_cast<int>(it - out_[u].begin());
  }
  return TabularPolicy::Deterministic(ActionsPerObservation(0), choice);
}

void RoutingEnv::WriteFlowCsv(const std::vector<FlowState>& flows,
                              std::ostream& os) const {
  os << "t,edge,flow\n";
  char buf[64];
  for (const FlowState& fs : flows) {
    for (int e = 0; e < net_.num_edges(); ++e) {
      std::snprintf(buf, sizeof(buf), "%.17g", fs.per_edge_flow[e]);
      os << fs.time << ',' << net_.edges[e].label() << ',' << buf << '\n';
    }
  }
}

PotentialOracle RoutingPotentialOracle(const RoutingEnv& env) {
  const RoutingNetwork& net = env.network();
  std::vector<double> a(net.num_edges()), b(net.num_edges());
  for (int e = 0; e < net.num_edges(); ++e) {
    const Latency& l = net.edges[e].latency;
    if (l.b != 0.0 && l.p != 1.0) {
      throw UnsupportedError("routing potential: latency on " +
                             net.edges[e].label() + " is not affine");
    }
    a[e] = l.a;
    b[e] = l.b;
  }
  if (env.tolls()) {
    const ModifierParams& w = *env.tolls();
    if (w.order() > 1 && !w.IsZero()) {
      for (int f = 0; f < w.num_features(); ++f) {
        for (int k = 2; k <= w.order(); ++k) {
          if (w.coefficient(f, k) != 0.0) {
            throw UnsupportedError("routing potential: toll order above 1");
          }
        }
      }
    }
    for (int f = 0; f < w.num_features(); ++f) {
      const int e = net.EdgeIndex(w.features()[f].name);
      a[e] -= w.coefficient(f, 0);
      if (w.order() >= 1) b[e] -= w.coefficient(f, 1);
    }
  }
  const double c = net.commodity_per_agent;
  PotentialOracle oracle;
  oracle.values = [&env](const JointPolicy& p) { return env.ExactValues(p); };
  oracle.potential = [&env, a, b, c](const JointPolicy& p) {
    const auto usage = env.EdgeUsage(p);
    const FlowState fs = env.PeriodFlow(usage);
    double phi = 0.0;
    for (size_t e = 0; e < a.size(); ++e) {
      const double f = fs.per_edge_flow[e];
      double sq = 0.0;
      for (const auto& x : usage) sq += x[e] * x[e];
      phi -= (a[e] * f + 0.5 * b[e] * f * f) / c + 0.5 * b[e] * c * sq;
    }
    return phi;
  };
  return oracle;
}

std::vector<DeviationPair> RandomRoutingDeviationPairs(const RoutingEnv& env,
                                                       int count,
                                                       uint64_t seed,
                                                       double scale) {
  Rng rng = MakeRng(seed, {0x40});
  const int N = env.num_agents();
  auto random_policy = [&]() {
    TabularPolicy p(env.ActionsPerObservation(0));
    for (int o = 0; o < p.num_observations(); ++o) {
      for (double& x : p.mutable_logits(o)) x = scale * (2.0 * Uniform01(rng) - 1.0);
    }
    return p;
  };
  std::vector<DeviationPair> pairs;
  for (int k = 0; k < count; ++k) {
    std::vector<TabularPolicy> ps;
    for (int i = 0; i < N; ++i) ps.push_back(random_policy());
    DeviationPair d;
    d.agent = static_cast<int>(Uniform01(rng) * N);
    d.base = JointPolicy::Independent(ps);
    ps[d.agent] = random_policy();
    d.deviated = JointPolicy::Independent(std::move(ps));
    pairs.push_back(std::move(d));
  }
  return pairs;
}

}  // namespace idesign
