#include "mesres/graph.hpp"

#include <cmath>
#include <unordered_map>

namespace mesres {

namespace {

double round12(double w) {
  return std::round(w * 1e12) / 1e12;
}

double checked_weight(double w, const std::string& what) {
  if (std::isnan(w)) throw Error(what + ": weight is NaN");
  if (w < -1e-9 || w > 1.0 + 1e-9) throw Error(what + ": weight " + std::to_string(w) + " outside [0, 1]");
  return round12(std::min(std::max(w, 0.0), 1.0));
}

}  // namespace

double edge_weight_power(double p_in_w, double p_out_w) {
  if (!(p_in_w > 0.0)) throw Error("edge_weight_power: P_in must be positive");
  if (p_out_w > p_in_w) throw Error("edge_weight_power: P_out exceeds P_in, flip the orientation");
  if (p_out_w < 0.0) throw Error("edge_weight_power: P_out is negative");
  return (p_in_w - p_out_w) / p_in_w;
}

double edge_weight_gas(double p_i_pa, double p_j_pa) {
  if (!(p_i_pa > 0.0)) throw Error("edge_weight_gas: upstream pressure must be positive");
  if (p_j_pa > p_i_pa) throw Error("edge_weight_gas: downstream pressure exceeds upstream, flip the orientation");
  if (p_j_pa < 0.0) throw Error("edge_weight_gas: downstream pressure is negative");
  return (p_i_pa - p_j_pa) / p_i_pa;
}

double edge_weight_heat(double h_loss_w, double volume_m3, double density_kg_m3,
                        double specific_heat, double t_in_k, double t_out_k) {
  if (!(volume_m3 > 0.0) || !(density_kg_m3 > 0.0) || !(specific_heat > 0.0))
    throw Error("edge_weight_heat: pipe water mass must be positive");
  double grad = std::abs(t_in_k - t_out_k);
  if (grad == 0.0) throw Error("edge_weight_heat: zero temperature gradient");
  return std::abs(h_loss_w) / (volume_m3 * density_kg_m3 * specific_heat * grad);
}

double edge_weight_coupling(double eta) {
  if (!(eta > 0.0) || eta > 1.0) throw Error("edge_weight_coupling: eta outside (0, 1]");
  return 1.0 - eta;
}

int WeightedMultigraph::node_index(Carrier c, int unit) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].carrier == c && nodes[i].unit == unit) return static_cast<int>(i);
  return -1;
}

int WeightedMultigraph::add_node(Carrier c, int unit) {
  nodes.push_back(MesNode{c, unit});
  out_edges.emplace_back();
  return static_cast<int>(nodes.size()) - 1;
}

int WeightedMultigraph::add_edge(int from, int to, double weight, EdgeType type,
                                 Carrier carrier, std::string component) {
  MesEdge e;
  e.from = from;
  e.to = to;
  e.weight = weight;
  e.type = type;
  e.carrier = carrier;
  e.component = std::move(component);
  edges.push_back(std::move(e));
  int idx = static_cast<int>(edges.size()) - 1;
  out_edges[from].push_back(idx);
  return idx;
}

WeightedMultigraph build_topology_graph(const MultiEnergyNetwork& net, const SteadyState* base) {
  WeightedMultigraph g;

  // Node lookup keyed by (carrier, unit). Units of different carriers may
  // share ids (co-location), so the carrier is part of the key.
  std::unordered_map<long long, int> index;
  auto key = [](Carrier c, int unit) {
    return (static_cast<long long>(c) << 32) | static_cast<unsigned int>(unit);
  };
  auto node = [&](Carrier c, int unit) {
    auto it = index.find(key(c, unit));
    if (it != index.end()) return it->second;
    int idx = g.add_node(c, unit);
    index.emplace(key(c, unit), idx);
    return idx;
  };

  for (const auto& b : net.electricity.buses) node(Carrier::Electricity, b.id);
  for (const auto& j : net.gas.junctions) node(Carrier::Gas, j.id);
  for (const auto& j : net.heat.junctions) node(Carrier::Heat, j.id);

  auto add_pair = [&](Carrier c, int u, int v, double w, const std::string& comp) {
    int a = node(c, u);
    int b = node(c, v);
    g.add_edge(a, b, w, EdgeType::IntraCarrier, c, comp);
    g.add_edge(b, a, w, EdgeType::IntraCarrier, c, comp);
  };

  for (size_t i = 0; i < net.electricity.lines.size(); ++i) {
    const auto& l = net.electricity.lines[i];
    double w = 0.0;
    if (base && i < base->line_flow_from_va.size()) {
      double p_from = base->line_flow_from_va[i].real();
      double p_to = base->line_flow_to_va[i].real();
      // Orient along the solved flow: the sending end has positive injection
      // into the line. Receiving power is the negative of the arrival term.
      double p_in = 0.0, p_out = 0.0;
      if (p_from > 0.0 && -p_to < p_from) {
        p_in = p_from;
        p_out = -p_to;
      } else if (p_to > 0.0) {
        p_in = p_to;
        p_out = -p_from;
      }
      if (std::isnan(p_from) || std::isnan(p_to)) {
        w = 0.0;  // dead branch
      } else if (p_in > 1e-9) {
        w = checked_weight(edge_weight_power(p_in, std::max(p_out, 0.0)), "line " + std::to_string(l.id));
      }
    }
    add_pair(Carrier::Electricity, l.from, l.to, w, "el.line." + std::to_string(l.id));
  }

  for (size_t i = 0; i < net.gas.pipes.size(); ++i) {
    const auto& p = net.gas.pipes[i];
    double w = 0.0;
    if (base && !base->gas_pressure_pa.empty()) {
      double pa = base->gas_pressure_pa[net.gas_junction_at(p.from)];
      double pb = base->gas_pressure_pa[net.gas_junction_at(p.to)];
      double f = i < base->gas_pipe_flow_kg_s.size() ? base->gas_pipe_flow_kg_s[i] : 0.0;
      if (!std::isnan(pa) && !std::isnan(pb) && std::abs(f) > 1e-12) {
        double hi = std::max(pa, pb), lo = std::min(pa, pb);
        w = checked_weight(edge_weight_gas(hi, lo), "gas pipe " + std::to_string(p.id));
      }
    }
    add_pair(Carrier::Gas, p.from, p.to, w, "gas.pipe." + std::to_string(p.id));
  }

  for (size_t i = 0; i < net.heat.pipes.size(); ++i) {
    const auto& p = net.heat.pipes[i];
    double w = 0.0;
    if (base && !base->heat_temperature_k.empty()) {
      double ta = base->heat_temperature_k[net.heat_junction_at(p.from)];
      double tb = base->heat_temperature_k[net.heat_junction_at(p.to)];
      double f = i < base->water_pipe_flow_kg_s.size() ? base->water_pipe_flow_kg_s[i] : 0.0;
      double loss = i < base->water_pipe_loss_w.size() ? base->water_pipe_loss_w[i] : 0.0;
      if (!std::isnan(ta) && !std::isnan(tb) && std::abs(f) > 1e-12) {
        double volume = 0.25 * M_PI * p.inner_diameter_m * p.inner_diameter_m * p.length_m;
        double w_raw;
        try {
          w_raw = edge_weight_heat(loss, volume, net.heat.constants.water_density,
                                   net.heat.constants.specific_heat, ta, tb);
        } catch (const Error&) {
          w_raw = 0.0;  // zero gradient: substitute the weight floor
        }
        w = checked_weight(w_raw, "water pipe " + std::to_string(p.id));
      }
    }
    add_pair(Carrier::Heat, p.from, p.to, w, "heat.pipe." + std::to_string(p.id));
  }

  for (const auto& cp : net.coupling_points) {
    std::string comp = "cp." + std::to_string(cp.id);
    switch (cp.kind) {
      case CouplingKind::Chp: {
        int from = node(Carrier::Gas, cp.gas_junction);
        g.add_edge(from, node(Carrier::Electricity, cp.bus), round12(edge_weight_coupling(cp.eta_el)),
                   EdgeType::Coupling, Carrier::Gas, comp);
        g.add_edge(from, node(Carrier::Heat, cp.heat_junction_b), round12(edge_weight_coupling(cp.eta_heat)),
                   EdgeType::Coupling, Carrier::Gas, comp);
        break;
      }
      case CouplingKind::PowerToHeat:
        g.add_edge(node(Carrier::Electricity, cp.bus), node(Carrier::Heat, cp.heat_junction_b),
                   round12(edge_weight_coupling(cp.eta_el)), EdgeType::Coupling, Carrier::Electricity, comp);
        break;
      case CouplingKind::PowerToGas:
        g.add_edge(node(Carrier::Electricity, cp.bus), node(Carrier::Gas, cp.gas_junction),
                   round12(edge_weight_coupling(cp.eta_gas)), EdgeType::Coupling, Carrier::Electricity, comp);
        break;
    }
  }

  return g;
}

}  // namespace mesres
