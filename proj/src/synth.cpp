#include "mesres/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mesres/flow.hpp"
#include "mesres/rng.hpp"
#include "mesres/vitality.hpp"

namespace mesres {

namespace {

// distinct sampling streams per decision
constexpr std::uint64_t kGasStream = 1;
constexpr std::uint64_t kHeatStream = 2;
constexpr std::uint64_t kChpStream = 3;
constexpr std::uint64_t kP2hStream = 4;
constexpr std::uint64_t kP2gStream = 5;

constexpr double kPi = 3.14159265358979323846;

struct TreeEdge {
  int parent = -1;  // bus container index
  int child = -1;
  int line = -1;          // base line container index
  double demand = 0.0;    // scheduled demand carried toward the child side
};

// Selected demand buses plus the corridor tree that joins them to the slack.
struct Backbone {
  std::vector<int> selected;          // bus container indices, ascending id
  std::vector<int> junctions;         // bus container indices, ascending id
  std::vector<TreeEdge> edges;        // ordered by child bus id
  std::vector<double> demand_w;       // electric demand per bus container index
};

std::string join_issues(const char* what, const std::vector<std::string>& issues) {
  std::ostringstream out;
  out << what << ":";
  for (const auto& i : issues) out << "\n  - " << i;
  return out.str();
}

// Quota sampling ordered by a per-node priority hash: the k lowest priorities
// win, so the selection at a lower density is a subset of the selection at a
// higher one for the same seed.
std::vector<int> pick_quota(const std::vector<int>& candidates, const ElectricGrid& el,
                            double density, std::uint64_t seed, std::uint64_t stream) {
  std::vector<int> order = candidates;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const std::uint64_t pa = mix64(seed, mix64(stream, std::uint64_t(el.buses[a].id)));
    const std::uint64_t pb = mix64(seed, mix64(stream, std::uint64_t(el.buses[b].id)));
    if (pa != pb) return pa < pb;
    return el.buses[a].id < el.buses[b].id;
  });
  const auto k = std::lround(density * double(order.size()));
  order.resize(std::size_t(std::min<long>(k, long(order.size()))));
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return el.buses[a].id < el.buses[b].id; });
  return order;
}

Backbone lay_backbone(const MultiEnergyNetwork& base, double density, std::uint64_t seed,
                      std::uint64_t stream, const char* carrier) {
  const ElectricGrid& el = base.electricity;
  if (!(density > 0.0) || density > 1.0)
    throw SynthError(std::string(carrier) + " deployment density must be in (0, 1]");
  if (el.buses.empty()) throw SynthError("base network has no buses");

  std::unordered_map<int, int> idx;
  for (std::size_t i = 0; i < el.buses.size(); ++i) idx[el.buses[i].id] = int(i);
  const auto slack = idx.find(el.slack_bus);
  if (slack == idx.end()) throw SynthError("base network has no slack bus");
  const int root = slack->second;

  Backbone bb;
  bb.demand_w.assign(el.buses.size(), 0.0);
  for (const auto& d : el.demands) bb.demand_w[std::size_t(idx.at(d.bus))] += d.p_w;

  std::vector<int> candidates;
  for (std::size_t i = 0; i < el.buses.size(); ++i)
    if (bb.demand_w[i] > 0.0 && int(i) != root) candidates.push_back(int(i));
  if (candidates.empty())
    throw SynthError("base network has no demand buses to deploy on");

  bb.selected = pick_quota(candidates, el, density, seed, stream);
  if (bb.selected.empty())
    throw SynthError(std::string(carrier) + " deployment density " + std::to_string(density) +
                     " rounds to an empty network");

  // adjacency over line corridors; parallel lines collapse to the lowest id
  std::vector<std::vector<std::pair<int, int>>> adj(el.buses.size());
  for (std::size_t li = 0; li < el.lines.size(); ++li) {
    const auto& ln = el.lines[li];
    adj[std::size_t(idx.at(ln.from))].push_back({idx.at(ln.to), int(li)});
    adj[std::size_t(idx.at(ln.to))].push_back({idx.at(ln.from), int(li)});
  }
  for (auto& a : adj)
    std::sort(a.begin(), a.end(), [&](auto x, auto y) {
      if (el.buses[std::size_t(x.first)].id != el.buses[std::size_t(y.first)].id)
        return el.buses[std::size_t(x.first)].id < el.buses[std::size_t(y.first)].id;
      return el.lines[std::size_t(x.second)].id < el.lines[std::size_t(y.second)].id;
    });

  std::vector<int> parent(el.buses.size(), -1);
  std::vector<int> parent_line(el.buses.size(), -1);
  std::vector<bool> seen(el.buses.size(), false);
  std::deque<int> queue{root};
  seen[std::size_t(root)] = true;
  while (!queue.empty()) {
    const int n = queue.front();
    queue.pop_front();
    for (auto [m, li] : adj[std::size_t(n)]) {
      if (seen[std::size_t(m)]) continue;
      seen[std::size_t(m)] = true;
      parent[std::size_t(m)] = n;
      parent_line[std::size_t(m)] = li;
      queue.push_back(m);
    }
  }

  std::unordered_map<int, TreeEdge> edge_of;  // keyed by child bus index
  std::set<int> nodes{root};
  for (int s : bb.selected) {
    if (!seen[std::size_t(s)])
      throw SynthError("bus " + std::to_string(el.buses[std::size_t(s)].id) +
                       " is not connected to the slack bus");
    for (int n = s; n != root; n = parent[std::size_t(n)]) {
      nodes.insert(n);
      auto [it, fresh] = edge_of.try_emplace(n);
      if (fresh) {
        it->second.parent = parent[std::size_t(n)];
        it->second.child = n;
        it->second.line = parent_line[std::size_t(n)];
      }
      it->second.demand += bb.demand_w[std::size_t(s)];
    }
  }

  bb.junctions.assign(nodes.begin(), nodes.end());
  std::sort(bb.junctions.begin(), bb.junctions.end(),
            [&](int a, int b) { return el.buses[std::size_t(a)].id < el.buses[std::size_t(b)].id; });
  for (auto& kv : edge_of) bb.edges.push_back(kv.second);
  std::sort(bb.edges.begin(), bb.edges.end(), [&](const TreeEdge& a, const TreeEdge& b) {
    return el.buses[std::size_t(a.child)].id < el.buses[std::size_t(b.child)].id;
  });
  return bb;
}

double gas_pipe_drop(const GasConstants& c, double length_m, double diameter_m,
                     double roughness_m, double flow_kg_s) {
  GasPipe p;
  p.length_m = length_m;
  p.diameter_m = diameter_m;
  p.inner_diameter_m = diameter_m;
  p.roughness_m = roughness_m;
  return std::abs(weymouth_residual(p, c, 0.0, 0.0, flow_kg_s));
}

double water_pipe_drop(const HeatConstants& c, double length_m, double diameter_m,
                       double roughness_m, double flow_kg_s) {
  WaterPipe p;
  p.length_m = length_m;
  p.diameter_m = diameter_m;
  p.inner_diameter_m = diameter_m;
  p.roughness_m = roughness_m;
  return std::abs(darcy_weisbach_residual(p, c, 0.0, 0.0, flow_kg_s));
}

}  // namespace

std::vector<std::string> validate_synth_config(const SynthConfig& cfg) {
  std::vector<std::string> issues;
  auto bad = [&](const std::string& msg) { issues.push_back(msg); };
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(cfg.gas_density)) bad("gas density must be in [0, 1]");
  if (!in_unit(cfg.heat_density)) bad("heat density must be in [0, 1]");
  const std::pair<double, const char*> coupling[] = {
      {cfg.chp_density, "chp"}, {cfg.p2h_density, "p2h"}, {cfg.p2g_density, "p2g"}};
  for (auto [v, name] : coupling)
    if (!std::isfinite(v) || v < 0.0) bad(std::string(name) + " density must be nonnegative");

  const ParamTable& p = cfg.params;
  if (p.diameters_m.empty()) bad("diameter catalog is empty");
  if (!std::is_sorted(p.diameters_m.begin(), p.diameters_m.end()))
    bad("diameter catalog must be ascending");
  for (double d : p.diameters_m)
    if (!(d > 0.0)) bad("diameter catalog entries must be positive");
  if (!(p.gas_energy_ratio > 0.0)) bad("gas energy ratio must be positive");
  if (!(p.heat_energy_ratio > 0.0)) bad("heat energy ratio must be positive");
  if (!(p.sizing_headroom >= 1.0)) bad("sizing headroom must be at least 1");
  if (!(p.source_headroom >= 1.0)) bad("source headroom must be at least 1");
  if (!(p.gas_drop_budget_pa > 0.0)) bad("gas drop budget must be positive");
  if (!(p.heat_drop_budget_pa > 0.0)) bad("heat drop budget must be positive");
  if (!(p.water_velocity_max_m_s > 0.0)) bad("water velocity limit must be positive");
  if (!(p.gas_pressure_min_pa < p.gas_slack_pressure_pa &&
        p.gas_slack_pressure_pa < p.gas_pressure_max_pa))
    bad("gas slack pressure must sit inside the pressure window");
  if (!(p.heat_temp_min_k < p.heat_temp_max_k)) bad("heat temperature window is empty");
  if (!(p.dispatch_fraction >= 0.0 && p.dispatch_fraction <= 1.0))
    bad("dispatch fraction must be in [0, 1]");
  const std::pair<double, const char*> etas[] = {{p.chp_eta_el, "chp electric"},
                                                 {p.chp_eta_heat, "chp heat"},
                                                 {p.p2h_eta, "p2h"},
                                                 {p.p2g_eta, "p2g"}};
  for (auto [v, name] : etas)
    if (!(v >= 0.0 && v <= 1.0)) bad(std::string(name) + " efficiency must be in [0, 1]");
  if (!(p.chp_rating_kg_s >= 0.0 && p.p2h_rating_w >= 0.0 && p.p2g_rating_w >= 0.0))
    bad("coupling ratings must be nonnegative");
  return issues;
}

GasGrid derive_gas_network(const MultiEnergyNetwork& base, const SynthConfig& cfg) {
  const ParamTable& par = cfg.params;
  Backbone bb = lay_backbone(base, cfg.gas_density, cfg.seed, kGasStream, "gas");
  const ElectricGrid& el = base.electricity;

  GasGrid gas;
  gas.slack_junction = el.slack_bus;
  gas.slack_pressure_pa = par.gas_slack_pressure_pa;
  for (int n : bb.junctions)
    gas.junctions.push_back(
        {el.buses[std::size_t(n)].id, par.gas_pressure_min_pa, par.gas_pressure_max_pa});

  const double hhv_w = gas.constants.energy_per_kwh * gas.constants.hhv_kwh_per_kg;
  double total = 0.0;
  int did = 0;
  for (int s : bb.selected) {
    const double flow = par.gas_energy_ratio * bb.demand_w[std::size_t(s)] / hhv_w;
    gas.demands.push_back({did++, el.buses[std::size_t(s)].id, flow});
    total += flow;
  }

  int pid = 0;
  for (const TreeEdge& e : bb.edges) {
    GasPipe p;
    p.id = pid++;
    p.from = el.buses[std::size_t(e.parent)].id;
    p.to = el.buses[std::size_t(e.child)].id;
    p.length_m = el.lines[std::size_t(e.line)].length_km * 1000.0;
    p.roughness_m = par.roughness_m;
    const double design = par.sizing_headroom * par.gas_energy_ratio * e.demand / hhv_w;
    p.diameter_m = par.diameters_m.back();
    for (double d : par.diameters_m)
      if (gas_pipe_drop(gas.constants, p.length_m, d, p.roughness_m, design) <=
          par.gas_drop_budget_pa) {
        p.diameter_m = d;
        break;
      }
    p.inner_diameter_m = p.diameter_m;
    gas.pipes.push_back(p);
  }

  gas.sources = {{0, gas.slack_junction, 0.0, par.source_headroom * total}};
  return gas;
}

HeatGrid derive_heat_network(const MultiEnergyNetwork& base, const SynthConfig& cfg) {
  const ParamTable& par = cfg.params;
  Backbone bb = lay_backbone(base, cfg.heat_density, cfg.seed, kHeatStream, "heat");
  const ElectricGrid& el = base.electricity;

  HeatGrid heat;
  heat.slack_junction = el.slack_bus;
  for (int n : bb.junctions)
    heat.junctions.push_back(
        {el.buses[std::size_t(n)].id, par.heat_temp_min_k, par.heat_temp_max_k});

  const double mass_per_w =
      1.0 / (heat.constants.specific_heat * heat.constants.hx_delta_t_k);
  double total_mass = 0.0;
  int did = 0;
  for (int s : bb.selected) {
    const double power = par.heat_energy_ratio * bb.demand_w[std::size_t(s)];
    heat.demands.push_back({did++, el.buses[std::size_t(s)].id, power});
    total_mass += power * mass_per_w;
  }

  int pid = 0;
  for (const TreeEdge& e : bb.edges) {
    WaterPipe p;
    p.id = pid++;
    p.from = el.buses[std::size_t(e.parent)].id;
    p.to = el.buses[std::size_t(e.child)].id;
    p.length_m = el.lines[std::size_t(e.line)].length_km * 1000.0;
    p.roughness_m = par.roughness_m;
    p.insulation_w_mk = par.insulation_w_mk;
    const double design =
        par.sizing_headroom * par.heat_energy_ratio * e.demand * mass_per_w;
    p.diameter_m = par.diameters_m.back();
    for (double d : par.diameters_m) {
      const double velocity =
          design / (heat.constants.water_density * 0.25 * kPi * d * d);
      if (velocity <= par.water_velocity_max_m_s &&
          water_pipe_drop(heat.constants, p.length_m, d, p.roughness_m, design) <=
              par.heat_drop_budget_pa) {
        p.diameter_m = d;
        break;
      }
    }
    p.inner_diameter_m = p.diameter_m;
    heat.pipes.push_back(p);
  }

  heat.sources = {{0, heat.slack_junction, par.source_headroom * total_mass}};
  return heat;
}

void place_coupling_points(MultiEnergyNetwork& mes, const SynthConfig& cfg) {
  const ParamTable& par = cfg.params;

  std::unordered_set<int> buses;
  for (const auto& b : mes.electricity.buses) buses.insert(b.id);
  std::unordered_set<int> gas_sites;
  for (const auto& j : mes.gas.junctions)
    if (j.id != mes.gas.slack_junction) gas_sites.insert(j.id);
  std::unordered_set<int> heat_sites;
  for (const auto& j : mes.heat.junctions)
    if (j.id != mes.heat.slack_junction) heat_sites.insert(j.id);
  std::unordered_map<int, int> heat_parent;
  for (const auto& p : mes.heat.pipes) heat_parent[p.to] = p.from;

  std::set<int> heat_demand_nodes;
  for (const auto& d : mes.heat.demands) heat_demand_nodes.insert(d.junction);
  const auto ref_heat = long(heat_demand_nodes.size());
  const auto ref_gas = long(gas_sites.size());

  struct Placement {
    CouplingKind kind;
    long count;
    std::uint64_t stream;
    std::vector<int> sites;
  };
  std::vector<Placement> plan(3);
  plan[0].kind = CouplingKind::Chp;
  plan[0].count = std::lround(cfg.chp_density * double(ref_heat));
  plan[0].stream = kChpStream;
  plan[1].kind = CouplingKind::PowerToHeat;
  plan[1].count = std::lround(cfg.p2h_density * double(ref_heat));
  plan[1].stream = kP2hStream;
  plan[2].kind = CouplingKind::PowerToGas;
  plan[2].count = std::lround(cfg.p2g_density * double(ref_gas));
  plan[2].stream = kP2gStream;

  for (int id : heat_sites) {
    if (!buses.count(id) || !heat_parent.count(id)) continue;
    if (gas_sites.count(id)) plan[0].sites.push_back(id);
    plan[1].sites.push_back(id);
  }
  for (int id : gas_sites)
    if (buses.count(id)) plan[2].sites.push_back(id);

  int next_id = 0;
  for (const auto& cp : mes.coupling_points) next_id = std::max(next_id, cp.id + 1);
  double added_gas_draw = 0.0;
  for (auto& pl : plan) {
    if (pl.count <= 0) continue;
    if (pl.sites.empty())
      throw SynthError(std::string("cannot place ") + std::to_string(pl.count) + " " +
                       coupling_kind_name(pl.kind) +
                       " units: no co-located candidate site");
    std::sort(pl.sites.begin(), pl.sites.end(), [&](int a, int b) {
      const std::uint64_t pa = mix64(cfg.seed, mix64(pl.stream, std::uint64_t(a)));
      const std::uint64_t pb = mix64(cfg.seed, mix64(pl.stream, std::uint64_t(b)));
      if (pa != pb) return pa < pb;
      return a < b;
    });
    for (long i = 0; i < pl.count; ++i) {
      const int site = pl.sites[std::size_t(i) % pl.sites.size()];
      CouplingPoint cp;
      cp.id = next_id++;
      cp.kind = pl.kind;
      cp.bus = site;
      switch (pl.kind) {
        case CouplingKind::Chp:
          cp.eta_el = par.chp_eta_el;
          cp.eta_heat = par.chp_eta_heat;
          cp.gas_junction = site;
          cp.heat_junction_a = heat_parent.at(site);
          cp.heat_junction_b = site;
          cp.rating = par.chp_rating_kg_s;
          added_gas_draw += par.chp_rating_kg_s;
          break;
        case CouplingKind::PowerToHeat:
          cp.eta_el = par.p2h_eta;
          cp.heat_junction_a = heat_parent.at(site);
          cp.heat_junction_b = site;
          cp.rating = par.p2h_rating_w;
          break;
        case CouplingKind::PowerToGas:
          cp.eta_gas = par.p2g_eta;
          cp.gas_junction = site;
          cp.rating = par.p2g_rating_w;
          break;
      }
      cp.dispatch = par.dispatch_fraction * cp.rating;
      mes.coupling_points.push_back(cp);
    }
  }
  if (added_gas_draw > 0.0 && !mes.gas.sources.empty())
    mes.gas.sources.front().max_flow_kg_s += added_gas_draw;
  mes.finalize();
}

MultiEnergyNetwork generate_mes(const MultiEnergyNetwork& base, const SynthConfig& cfg) {
  if (auto issues = validate_synth_config(cfg); !issues.empty())
    throw SynthError(join_issues("invalid generation config", issues));
  if (!base.gas.junctions.empty() || !base.heat.junctions.empty() ||
      !base.coupling_points.empty())
    throw SynthError("base network must be electricity-only");
  if (auto issues = validate_network(base); !issues.empty())
    throw SynthError(join_issues("base network is not well-formed", issues));

  MultiEnergyNetwork mes;
  mes.name = base.name;
  mes.schema_version = base.schema_version;
  mes.electricity = base.electricity;
  if (cfg.gas_density > 0.0) mes.gas = derive_gas_network(base, cfg);
  if (cfg.heat_density > 0.0) mes.heat = derive_heat_network(base, cfg);
  place_coupling_points(mes, cfg);
  if (auto issues = validate_network(mes); !issues.empty())
    throw SynthError(join_issues("generated network is not well-formed", issues));

  const SteadyState st = solve_multi_energy_flow(mes, FlowOptions{});
  std::vector<std::string> issues;
  if (!st.converged || !(st.residual_inf < 1e-6))
    issues.push_back("base flow did not converge");
  const ElectricGrid& el = mes.electricity;
  for (std::size_t i = 0; i < el.buses.size(); ++i) {
    const double v = std::abs(st.bus_voltage_pu[i]);
    if (v < el.buses[i].vmin_pu - 1e-7 || v > el.buses[i].vmax_pu + 1e-7)
      issues.push_back("bus " + std::to_string(el.buses[i].id) + " voltage " +
                       std::to_string(v) + " outside its window");
  }
  for (std::size_t i = 0; i < el.lines.size(); ++i) {
    if (el.lines[i].rating_va <= 0.0) continue;
    const double s = std::max(std::abs(st.line_flow_from_va[i]), std::abs(st.line_flow_to_va[i]));
    if (s > el.lines[i].rating_va * (1.0 + 1e-7))
      issues.push_back("line " + std::to_string(el.lines[i].id) + " overloaded at base flow");
  }
  for (std::size_t i = 0; i < mes.gas.junctions.size(); ++i) {
    const auto& j = mes.gas.junctions[i];
    if (st.gas_pressure_pa[i] < j.pmin_pa - 1.0 || st.gas_pressure_pa[i] > j.pmax_pa + 1.0)
      issues.push_back("gas junction " + std::to_string(j.id) + " pressure " +
                       std::to_string(st.gas_pressure_pa[i]) + " outside its window");
  }
  for (std::size_t i = 0; i < mes.heat.junctions.size(); ++i) {
    const auto& j = mes.heat.junctions[i];
    if (st.heat_temperature_k[i] < j.tmin_k - 1e-6 || st.heat_temperature_k[i] > j.tmax_k + 1e-6)
      issues.push_back("heat junction " + std::to_string(j.id) + " temperature " +
                       std::to_string(st.heat_temperature_k[i]) + " outside its window");
  }
  if (!mes.gas.junctions.empty()) {
    if (st.gas_slack_flow_kg_s < -1e-9)
      issues.push_back("gas slack source absorbs flow at base dispatch");
    if (!mes.gas.sources.empty() &&
        st.gas_slack_flow_kg_s > mes.gas.sources.front().max_flow_kg_s)
      issues.push_back("gas slack source exceeds its rating at base dispatch");
  }
  if (!mes.heat.junctions.empty()) {
    if (st.heat_slack_flow_kg_s < -1e-9)
      issues.push_back("heat slack source absorbs flow at base dispatch");
    if (!mes.heat.sources.empty() &&
        st.heat_slack_flow_kg_s > mes.heat.sources.front().max_flow_kg_s)
      issues.push_back("heat slack source exceeds its rating at base dispatch");
  }
  if (!issues.empty())
    throw SynthError(join_issues("generated network fails its base operating check", issues));

  mes.schedule = {true, st.slack_injection_va.real(), st.slack_injection_va.imag(),
                  st.gas_slack_flow_kg_s, st.heat_slack_flow_kg_s};
  return mes;
}

}  // namespace mesres
