#include "mesres/netmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <utility>

namespace mesres {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double floored(double w) { return w > 0.0 ? w : kMetricWeightFloor; }

struct SsspResult {
  std::vector<double> dist;
  std::vector<double> sigma;
  std::vector<std::vector<int>> pred;  // incoming shortest-path edge indices
  std::vector<int> order;              // settled order, nondecreasing distance
};

SsspResult sssp(const WeightedMultigraph& g, int source, int skip = -1) {
  const int n = int(g.nodes.size());
  SsspResult r;
  r.dist.assign(n, kInf);
  r.sigma.assign(n, 0.0);
  r.pred.assign(n, {});
  if (source < 0 || source >= n || source == skip) return r;
  r.dist[source] = 0.0;
  r.sigma[source] = 1.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  queue.push({0.0, source});
  std::vector<char> settled(n, 0);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (settled[u] || d != r.dist[u]) continue;
    settled[u] = 1;
    r.order.push_back(u);
    for (int ei : g.out_edges[u]) {
      const MesEdge& e = g.edges[ei];
      if (e.to == skip) continue;
      const double nd = d + floored(e.weight);
      if (nd < r.dist[e.to]) {
        r.dist[e.to] = nd;
        r.sigma[e.to] = r.sigma[u];
        r.pred[e.to].assign(1, ei);
        queue.push({nd, e.to});
      } else if (nd == r.dist[e.to]) {
        r.sigma[e.to] += r.sigma[u];
        r.pred[e.to].push_back(ei);
      }
    }
  }
  return r;
}

void check_node(const WeightedMultigraph& g, int node) {
  if (node < 0 || std::size_t(node) >= g.nodes.size())
    throw ConfigError("node index outside the graph");
}

void check_edge(const WeightedMultigraph& g, int edge) {
  if (edge < 0 || std::size_t(edge) >= g.edges.size())
    throw ConfigError("edge index outside the graph");
}

std::vector<int> degrees(const WeightedMultigraph& g) {
  std::vector<int> deg(g.nodes.size(), 0);
  for (const MesEdge& e : g.edges) {
    ++deg[e.from];
    ++deg[e.to];
  }
  return deg;
}

double wiener_of(const std::vector<SsspResult>& all, int skip = -1) {
  double sum = 0.0;
  for (int s = 0; s < int(all.size()); ++s) {
    if (s == skip) continue;
    for (int t = 0; t < int(all[s].dist.size()); ++t) {
      if (t == s || t == skip) continue;
      if (all[s].dist[t] < kInf) sum += all[s].dist[t];
    }
  }
  return sum;
}

VitalityValue vitality_against_base(const WeightedMultigraph& g, int node,
                                    const std::vector<SsspResult>& base) {
  const int n = int(g.nodes.size());
  VitalityValue out;
  double removed_wiener = 0.0;
  bool cut = false;
  for (int s = 0; s < n && !cut; ++s) {
    if (s == node) continue;
    const SsspResult r = sssp(g, s, node);
    for (int t = 0; t < n; ++t) {
      if (t == s || t == node) continue;
      if (r.dist[t] < kInf) {
        removed_wiener += r.dist[t];
      } else if (base[s].dist[t] < kInf) {
        cut = true;
        break;
      }
    }
  }
  if (cut) {
    out.value = kInf;
    out.disconnects = true;
    return out;
  }
  out.value = wiener_of(base) - removed_wiener;
  return out;
}

}  // namespace

ShortestPaths shortest_paths(const WeightedMultigraph& graph) {
  const int n = int(graph.nodes.size());
  ShortestPaths out;
  out.dist.reserve(n);
  out.sigma.reserve(n);
  for (int s = 0; s < n; ++s) {
    SsspResult r = sssp(graph, s);
    out.dist.push_back(std::move(r.dist));
    out.sigma.push_back(std::move(r.sigma));
  }
  return out;
}

BetweennessResult betweenness(const WeightedMultigraph& graph) {
  const int n = int(graph.nodes.size());
  BetweennessResult out;
  out.node.assign(n, 0.0);
  out.edge.assign(graph.edges.size(), 0.0);
  std::vector<double> delta(n, 0.0);
  for (int s = 0; s < n; ++s) {
    const SsspResult r = sssp(graph, s);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = r.order.rbegin(); it != r.order.rend(); ++it) {
      const int w = *it;
      for (int ei : r.pred[w]) {
        const MesEdge& e = graph.edges[ei];
        const double share = r.sigma[e.from] / r.sigma[w] * (1.0 + delta[w]);
        out.edge[ei] += share;
        delta[e.from] += share;
      }
      if (w != s) out.node[w] += delta[w];
    }
  }
  return out;
}

double node_betweenness(const WeightedMultigraph& graph, int node) {
  check_node(graph, node);
  return betweenness(graph).node[node];
}

double edge_betweenness(const WeightedMultigraph& graph, int edge) {
  check_edge(graph, edge);
  return betweenness(graph).edge[edge];
}

int node_degree(const WeightedMultigraph& graph, int node) {
  check_node(graph, node);
  return degrees(graph)[node];
}

int edge_degree(const WeightedMultigraph& graph, int edge) {
  check_edge(graph, edge);
  const auto deg = degrees(graph);
  return deg[graph.edges[edge].from] + deg[graph.edges[edge].to];
}

double wiener_index(const WeightedMultigraph& graph) {
  std::vector<SsspResult> all;
  all.reserve(graph.nodes.size());
  for (int s = 0; s < int(graph.nodes.size()); ++s) all.push_back(sssp(graph, s));
  return wiener_of(all);
}

VitalityValue closeness_vitality(const WeightedMultigraph& graph, int node) {
  check_node(graph, node);
  std::vector<SsspResult> base;
  base.reserve(graph.nodes.size());
  for (int s = 0; s < int(graph.nodes.size()); ++s) base.push_back(sssp(graph, s));
  return vitality_against_base(graph, node, base);
}

std::vector<double> katz_centrality(const WeightedMultigraph& graph, double alpha,
                                    double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw ConfigError("katz parameters must be finite");
  const int n = int(graph.nodes.size());
  std::vector<double> x(n, beta);
  std::vector<double> next(n, 0.0);
  for (int iter = 0; iter < 100000; ++iter) {
    for (int v = 0; v < n; ++v) {
      double acc = 0.0;
      for (int ei : graph.out_edges[v]) acc += x[graph.edges[ei].to];
      next[v] = beta + alpha * acc;
    }
    double diff = 0.0;
    for (int v = 0; v < n; ++v) diff = std::max(diff, std::abs(next[v] - x[v]));
    x.swap(next);
    if (!std::isfinite(diff) || diff > 1e100)
      throw DivergenceError("katz iteration diverged; attenuation too large");
    if (diff < 1e-10) return x;
  }
  throw DivergenceError("katz iteration did not converge; attenuation too large");
}

std::string node_label(const MesNode& node) {
  switch (node.carrier) {
    case Carrier::Electricity: return "el.bus." + std::to_string(node.unit);
    case Carrier::Gas: return "gas.junction." + std::to_string(node.unit);
    case Carrier::Heat: return "heat.junction." + std::to_string(node.unit);
  }
  return "node." + std::to_string(node.unit);
}

MetricTable compute_metrics(const WeightedMultigraph& graph, double katz_alpha,
                            double katz_beta) {
  const int n = int(graph.nodes.size());
  MetricTable table;
  const BetweennessResult bw = betweenness(graph);
  const std::vector<int> deg = degrees(graph);
  const std::vector<double> katz = katz_centrality(graph, katz_alpha, katz_beta);
  std::vector<SsspResult> base;
  base.reserve(n);
  for (int s = 0; s < n; ++s) base.push_back(sssp(graph, s));

  table.nodes.reserve(n);
  for (int v = 0; v < n; ++v) {
    NodeMetricsRow row;
    row.node = v;
    row.label = node_label(graph.nodes[v]);
    row.betweenness = bw.node[v];
    row.degree = deg[v];
    const VitalityValue vit = vitality_against_base(graph, v, base);
    row.vitality = vit.value;
    row.disconnects = vit.disconnects;
    row.katz = katz[v];
    table.nodes.push_back(std::move(row));
  }

  table.edges.reserve(graph.edges.size());
  std::map<std::string, GroupMetricsRow> groups;
  for (int ei = 0; ei < int(graph.edges.size()); ++ei) {
    const MesEdge& e = graph.edges[ei];
    EdgeMetricsRow row;
    row.edge = ei;
    row.component = e.component;
    row.betweenness = bw.edge[ei];
    row.degree = deg[e.from] + deg[e.to];
    table.edges.push_back(std::move(row));
    if (e.type == EdgeType::Coupling) {
      GroupMetricsRow& group = groups[e.component];
      group.component = e.component;
      group.betweenness += bw.edge[ei];
      ++group.edges;
    }
  }
  for (auto& kv : groups) table.groups.push_back(std::move(kv.second));
  return table;
}

CorrelationData export_correlation_data(const MetricTable& table, const ImpactReport& report,
                                        const MultiEnergyNetwork& net) {
  CorrelationData out;
  if (report.sci.empty()) return out;
  if (report.sci.size() != net.registry.size())
    throw ConfigError("impact table does not match the component registry");

  struct BranchAgg {
    double betweenness = 0.0;
    int degree = 0;
    int edges = 0;
  };
  std::map<std::string, BranchAgg> branches;
  for (const EdgeMetricsRow& row : table.edges) {
    const int idx = net.component_index(row.component);
    if (idx < 0) {
      out.unmatched.push_back(row.component + ": metric row without a registry component");
      continue;
    }
    if (net.registry[idx].kind == ComponentKind::Coupling) continue;
    BranchAgg& agg = branches[row.component];
    agg.betweenness += row.betweenness;
    agg.degree = row.degree;
    ++agg.edges;
  }
  std::map<std::string, const GroupMetricsRow*> groups;
  for (const GroupMetricsRow& row : table.groups) groups[row.component] = &row;

  auto emit = [&](const std::string& component, GridClass grid_class, int registry_index,
                  const std::string& metric, double value) {
    for (int c = 0; c < kCarrierCount; ++c) {
      const SciEntry& entry = report.sci[registry_index][c];
      if (entry.mark == SciMark::Defined) {
        out.rows.push_back({component, grid_class, metric, value, c, entry.value,
                            entry.centered()});
      } else if (entry.mark != SciMark::NotObserved) {
        out.unmatched.push_back(component + " carrier " + std::to_string(c) + ": " +
                                sci_mark_name(entry.mark) + " impact left out");
      }
    }
  };

  for (std::size_t j = 0; j < net.registry.size(); ++j) {
    const ComponentInfo& info = net.registry[j];
    if (info.kind == ComponentKind::Coupling) {
      const auto it = groups.find(info.id);
      if (it == groups.end()) {
        out.unmatched.push_back(info.id + ": no graph element");
        continue;
      }
      emit(info.id, info.grid_class, int(j), "group-betweenness", it->second->betweenness);
      continue;
    }
    const auto it = branches.find(info.id);
    if (it == branches.end()) {
      out.unmatched.push_back(info.id + ": no graph element");
      continue;
    }
    emit(info.id, info.grid_class, int(j), "edge-betweenness", it->second.betweenness);
    emit(info.id, info.grid_class, int(j), "edge-degree", double(it->second.degree));
  }
  return out;
}

}  // namespace mesres
