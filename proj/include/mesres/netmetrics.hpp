#pragma once

#include <string>
#include <vector>

#include "mesres/graph.hpp"
#include "mesres/montecarlo.hpp"
#include "mesres/network.hpp"

namespace mesres {

// Zero-weight edges are lifted to this floor before any shortest-path work so
// path counting stays well defined; a weightless graph degrades to hop counts.
inline constexpr double kMetricWeightFloor = 1e-12;

// All-pairs shortest-path distances and path multiplicities over the floored
// weights. Unreachable pairs carry an infinite distance and zero count.
struct ShortestPaths {
  std::vector<std::vector<double>> dist;   // [source][target]
  std::vector<std::vector<double>> sigma;  // [source][target] shortest-path count
};

ShortestPaths shortest_paths(const WeightedMultigraph& graph);

// Betweenness of every node and every directed edge: the sum over ordered
// node pairs of the fraction of shortest paths running through the element,
// endpoints excluded for nodes. Parallel edges with tied weights split the
// per-pair fraction evenly.
struct BetweennessResult {
  std::vector<double> node;
  std::vector<double> edge;
};

BetweennessResult betweenness(const WeightedMultigraph& graph);
double node_betweenness(const WeightedMultigraph& graph, int node);
double edge_betweenness(const WeightedMultigraph& graph, int edge);

// Incident directed-edge count of a node; for an edge the sum of its endpoint
// degrees. Parallel edges count individually.
int node_degree(const WeightedMultigraph& graph, int node);
int edge_degree(const WeightedMultigraph& graph, int edge);

// Sum of finite shortest-path distances over ordered node pairs.
double wiener_index(const WeightedMultigraph& graph);

// Drop of the Wiener index when the node is removed. When the removal cuts a
// pair that was reachable without touching the node, the value is flagged and
// set to infinity.
struct VitalityValue {
  double value = 0.0;
  bool disconnects = false;
};

VitalityValue closeness_vitality(const WeightedMultigraph& graph, int node);

// Fixed point of x_v = alpha * sum_u A[v][u] * x_u + beta on the unweighted
// multiplicity adjacency, iterated to 1e-10. Throws DivergenceError when the
// iteration fails to contract (alpha at or beyond the spectral bound).
std::vector<double> katz_centrality(const WeightedMultigraph& graph, double alpha = 0.1,
                                    double beta = 1.0);

std::string node_label(const MesNode& node);

// Per-element metric rows over one graph. Every node and every directed edge
// gets a row; coupling components additionally get one group row summing the
// betweenness of their conversion edges.
struct NodeMetricsRow {
  int node = -1;
  std::string label;
  double betweenness = 0.0;
  int degree = 0;
  double vitality = 0.0;
  bool disconnects = false;
  double katz = 0.0;
};

struct EdgeMetricsRow {
  int edge = -1;
  std::string component;  // owning component id, shared by both directions
  double betweenness = 0.0;
  int degree = 0;
};

struct GroupMetricsRow {
  std::string component;
  double betweenness = 0.0;
  int edges = 0;
};

struct MetricTable {
  std::vector<NodeMetricsRow> nodes;
  std::vector<EdgeMetricsRow> edges;
  std::vector<GroupMetricsRow> groups;
};

MetricTable compute_metrics(const WeightedMultigraph& graph, double katz_alpha = 0.1,
                            double katz_beta = 1.0);

// One scatter point: a component's metric value against its impact ratio on
// one carrier. Only defined (finite) impact entries produce rows; branch
// components aggregate their two directed edges (betweenness summed, shared
// degree), coupling components use their group betweenness.
struct CorrelationRow {
  std::string component;
  GridClass grid_class = GridClass::Electricity;
  std::string metric;
  double metric_value = 0.0;
  int carrier = 0;
  double impact = 0.0;    // signed ratio as recorded
  double centered = 0.0;  // sign(impact) * (|impact| - 1)
};

struct CorrelationData {
  std::vector<CorrelationRow> rows;
  std::vector<std::string> unmatched;  // elements skipped and why
};

CorrelationData export_correlation_data(const MetricTable& table, const ImpactReport& report,
                                        const MultiEnergyNetwork& net);

}  // namespace mesres
