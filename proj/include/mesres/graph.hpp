#pragma once

#include <string>
#include <vector>

#include "mesres/network.hpp"
#include "mesres/state.hpp"

namespace mesres {

// --- edge weight laws --------------------------------------------------------
// All weights are relative losses in [0, 1]; 0 means lossless transport.

// (P_in - P_out) / P_in for an electric branch, powers at the sending and
// receiving end along the flow direction.
double edge_weight_power(double p_in_w, double p_out_w);

// (p_i - p_j) / p_i for a gas pipe, i the upstream (higher pressure) end.
double edge_weight_gas(double p_i_pa, double p_j_pa);

// |H_loss| / (M rho C |T_in - T_out|) for a water pipe; M is the water volume
// of the pipe and rho converts it to mass. Throws on a zero temperature
// gradient; the graph builder substitutes the weight floor in that case.
double edge_weight_heat(double h_loss_w, double volume_m3, double density_kg_m3,
                        double specific_heat, double t_in_k, double t_out_k);

// 1 - eta for a coupling edge.
double edge_weight_coupling(double eta);

// --- weighted directed multigraph ---------------------------------------------

struct MesNode {
  Carrier carrier = Carrier::Electricity;
  int unit = -1;  // bus or junction id within the carrier
};

enum class EdgeType : std::uint8_t { IntraCarrier = 0, Coupling = 1 };

struct MesEdge {
  int from = -1;  // node index
  int to = -1;
  double weight = 0.0;
  EdgeType type = EdgeType::IntraCarrier;
  Carrier carrier = Carrier::Electricity;  // carrier of intra edges; source carrier for couplings
  std::string component;                   // owning component id ("el.line.3", "cp.1", ...)
};

struct WeightedMultigraph {
  std::vector<MesNode> nodes;
  std::vector<MesEdge> edges;
  std::vector<std::vector<int>> out_edges;  // node index -> edge indices

  int node_index(Carrier c, int unit) const;  // -1 when absent
  int add_node(Carrier c, int unit);
  int add_edge(int from, int to, double weight, EdgeType type, Carrier carrier,
               std::string component);
};

// Builds the coupled-topology graph of a network. Every physical branch
// yields two opposite directed edges of equal weight; every coupling point
// yields its directed conversion edge(s) with weight 1 - eta. With a solved
// base state the intra-carrier weights follow the flow solution (frozen
// healthy-state weights); without one they are zero. Weights are rounded to
// 12 decimals; branches without throughput get weight 0.
WeightedMultigraph build_topology_graph(const MultiEnergyNetwork& net,
                                        const SteadyState* base_state = nullptr);

}  // namespace mesres
