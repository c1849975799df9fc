#include "mesres/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace mesres {

const char* carrier_name(Carrier c) {
  switch (c) {
    case Carrier::Electricity: return "electricity";
    case Carrier::Gas: return "gas";
    case Carrier::Heat: return "heat";
  }
  return "?";
}

const char* grid_class_name(GridClass g) {
  switch (g) {
    case GridClass::Electricity: return "electricity";
    case GridClass::Heat: return "heat";
    case GridClass::Gas: return "gas";
    case GridClass::Coupling: return "cp";
  }
  return "?";
}

const char* coupling_kind_name(CouplingKind k) {
  switch (k) {
    case CouplingKind::Chp: return "chp";
    case CouplingKind::PowerToHeat: return "p2h";
    case CouplingKind::PowerToGas: return "p2g";
  }
  return "?";
}

const char* component_kind_name(ComponentKind k) {
  switch (k) {
    case ComponentKind::Line: return "line";
    case ComponentKind::Generator: return "generator";
    case ComponentKind::GasPipe: return "gas-pipe";
    case ComponentKind::GasSource: return "gas-source";
    case ComponentKind::WaterPipe: return "water-pipe";
    case ComponentKind::HeatSource: return "heat-source";
    case ComponentKind::Coupling: return "cp";
  }
  return "?";
}

void MultiEnergyNetwork::finalize() {
  bus_index.clear();
  gas_junction_index.clear();
  heat_junction_index.clear();
  for (size_t i = 0; i < electricity.buses.size(); ++i) {
    if (!bus_index.emplace(electricity.buses[i].id, static_cast<int>(i)).second)
      throw StructuralError("duplicate bus id " + std::to_string(electricity.buses[i].id));
  }
  for (size_t i = 0; i < gas.junctions.size(); ++i) {
    if (!gas_junction_index.emplace(gas.junctions[i].id, static_cast<int>(i)).second)
      throw StructuralError("duplicate gas junction id " + std::to_string(gas.junctions[i].id));
  }
  for (size_t i = 0; i < heat.junctions.size(); ++i) {
    if (!heat_junction_index.emplace(heat.junctions[i].id, static_cast<int>(i)).second)
      throw StructuralError("duplicate heat junction id " + std::to_string(heat.junctions[i].id));
  }

  registry.clear();
  auto add = [this](ComponentKind kind, GridClass gc, int unit, const std::string& tag, int id) {
    ComponentInfo info;
    info.kind = kind;
    info.grid_class = gc;
    info.unit = unit;
    info.id = tag + std::to_string(id);
    registry.push_back(std::move(info));
  };
  for (size_t i = 0; i < electricity.lines.size(); ++i)
    add(ComponentKind::Line, GridClass::Electricity, static_cast<int>(i), "el.line.", electricity.lines[i].id);
  for (size_t i = 0; i < electricity.generators.size(); ++i)
    add(ComponentKind::Generator, GridClass::Electricity, static_cast<int>(i), "el.gen.", electricity.generators[i].id);
  for (size_t i = 0; i < gas.pipes.size(); ++i)
    add(ComponentKind::GasPipe, GridClass::Gas, static_cast<int>(i), "gas.pipe.", gas.pipes[i].id);
  for (size_t i = 0; i < gas.sources.size(); ++i) {
    if (gas.sources[i].junction == gas.slack_junction) continue;
    add(ComponentKind::GasSource, GridClass::Gas, static_cast<int>(i), "gas.source.", gas.sources[i].id);
  }
  for (size_t i = 0; i < heat.pipes.size(); ++i)
    add(ComponentKind::WaterPipe, GridClass::Heat, static_cast<int>(i), "heat.pipe.", heat.pipes[i].id);
  for (size_t i = 0; i < heat.sources.size(); ++i) {
    if (heat.sources[i].junction == heat.slack_junction) continue;
    add(ComponentKind::HeatSource, GridClass::Heat, static_cast<int>(i), "heat.source.", heat.sources[i].id);
  }
  for (size_t i = 0; i < coupling_points.size(); ++i)
    add(ComponentKind::Coupling, GridClass::Coupling, static_cast<int>(i), "cp.", coupling_points[i].id);

  std::unordered_set<std::string> seen;
  for (const auto& info : registry) {
    if (!seen.insert(info.id).second)
      throw StructuralError("duplicate component id " + info.id);
  }
}

int MultiEnergyNetwork::bus_at(int id) const {
  auto it = bus_index.find(id);
  if (it == bus_index.end()) throw StructuralError("unknown bus id " + std::to_string(id));
  return it->second;
}

int MultiEnergyNetwork::gas_junction_at(int id) const {
  auto it = gas_junction_index.find(id);
  if (it == gas_junction_index.end()) throw StructuralError("unknown gas junction id " + std::to_string(id));
  return it->second;
}

int MultiEnergyNetwork::heat_junction_at(int id) const {
  auto it = heat_junction_index.find(id);
  if (it == heat_junction_index.end()) throw StructuralError("unknown heat junction id " + std::to_string(id));
  return it->second;
}

int MultiEnergyNetwork::component_index(const std::string& component_id) const {
  for (size_t i = 0; i < registry.size(); ++i)
    if (registry[i].id == component_id) return static_cast<int>(i);
  return -1;
}

double gas_demand_power_w(const GasGrid& gas, const GasDemand& d) {
  return d.flow_kg_s * gas.constants.energy_per_kwh * gas.constants.hhv_kwh_per_kg;
}

namespace {

template <typename T>
void check_unique_ids(const std::vector<T>& items, const char* what, std::vector<std::string>& issues) {
  std::unordered_set<int> ids;
  for (const auto& item : items) {
    if (!ids.insert(item.id).second) {
      std::ostringstream os;
      os << "duplicate " << what << " id " << item.id;
      issues.push_back(os.str());
    }
  }
}

void check_positive(double v, const std::string& what, std::vector<std::string>& issues) {
  if (!(v > 0.0)) issues.push_back(what + " must be positive");
}

}  // namespace

std::vector<std::string> validate_network(const MultiEnergyNetwork& net) {
  std::vector<std::string> issues;
  const auto& el = net.electricity;
  const auto& gas = net.gas;
  const auto& heat = net.heat;

  if (net.schema_version != 1) issues.push_back("unsupported schema_version");

  check_unique_ids(el.buses, "bus", issues);
  check_unique_ids(el.lines, "line", issues);
  check_unique_ids(el.generators, "generator", issues);
  check_unique_ids(el.demands, "electric demand", issues);
  check_unique_ids(gas.junctions, "gas junction", issues);
  check_unique_ids(gas.pipes, "gas pipe", issues);
  check_unique_ids(gas.sources, "gas source", issues);
  check_unique_ids(gas.demands, "gas demand", issues);
  check_unique_ids(heat.junctions, "heat junction", issues);
  check_unique_ids(heat.pipes, "water pipe", issues);
  check_unique_ids(heat.sources, "heat source", issues);
  check_unique_ids(heat.demands, "heat demand", issues);
  check_unique_ids(net.coupling_points, "coupling point", issues);

  std::unordered_set<int> bus_ids, gas_ids, heat_ids;
  for (const auto& b : el.buses) bus_ids.insert(b.id);
  for (const auto& j : gas.junctions) gas_ids.insert(j.id);
  for (const auto& j : heat.junctions) heat_ids.insert(j.id);

  auto has_bus = [&](int id) { return bus_ids.count(id) > 0; };
  auto has_gas = [&](int id) { return gas_ids.count(id) > 0; };
  auto has_heat = [&](int id) { return heat_ids.count(id) > 0; };

  if (el.buses.empty()) {
    issues.push_back("electric grid has no buses");
  } else if (!has_bus(el.slack_bus)) {
    issues.push_back("slack bus " + std::to_string(el.slack_bus) + " is not a bus");
  }
  check_positive(el.base_va, "electric power base", issues);
  check_positive(el.base_v, "electric voltage base", issues);

  for (const auto& b : el.buses) {
    if (!(b.vmin_pu < b.vmax_pu))
      issues.push_back("bus " + std::to_string(b.id) + " voltage bounds are not ordered");
  }
  for (const auto& l : el.lines) {
    std::string tag = "line " + std::to_string(l.id);
    if (!has_bus(l.from) || !has_bus(l.to)) issues.push_back(tag + " references unknown bus");
    if (l.from == l.to) issues.push_back(tag + " is a self loop");
    if (l.r_ohm < 0.0 || std::abs(l.r_ohm) + std::abs(l.x_ohm) == 0.0)
      issues.push_back(tag + " has no usable series impedance");
    check_positive(l.rating_va, tag + " rating", issues);
    check_positive(l.tap, tag + " tap", issues);
  }
  for (const auto& g : el.generators) {
    std::string tag = "generator " + std::to_string(g.id);
    if (!has_bus(g.bus)) issues.push_back(tag + " references unknown bus");
    if (g.p_w < 0.0) issues.push_back(tag + " scheduled dispatch is negative");
    check_positive(g.p_max_w, tag + " rating", issues);
    if (g.p_w > g.p_max_w) issues.push_back(tag + " dispatch exceeds rating");
  }
  for (const auto& d : el.demands) {
    std::string tag = "electric demand " + std::to_string(d.id);
    if (!has_bus(d.bus)) issues.push_back(tag + " references unknown bus");
    if (d.p_w < 0.0) issues.push_back(tag + " active power is negative");
  }

  if (!gas.junctions.empty()) {
    if (!has_gas(gas.slack_junction)) issues.push_back("gas slack junction is not a junction");
    check_positive(gas.slack_pressure_pa, "gas slack pressure", issues);
    check_positive(gas.constants.z, "gas compressibility", issues);
    check_positive(gas.constants.molar_mass, "gas molar mass", issues);
    check_positive(gas.constants.viscosity, "gas viscosity", issues);
    check_positive(gas.constants.hhv_kwh_per_kg, "gas heating value", issues);
    for (const auto& j : gas.junctions) {
      if (!(j.pmin_pa < j.pmax_pa))
        issues.push_back("gas junction " + std::to_string(j.id) + " pressure bounds are not ordered");
    }
    for (const auto& p : gas.pipes) {
      std::string tag = "gas pipe " + std::to_string(p.id);
      if (!has_gas(p.from) || !has_gas(p.to)) issues.push_back(tag + " references unknown junction");
      if (p.from == p.to) issues.push_back(tag + " is a self loop");
      check_positive(p.length_m, tag + " length", issues);
      check_positive(p.diameter_m, tag + " diameter", issues);
      check_positive(p.inner_diameter_m, tag + " inner diameter", issues);
      check_positive(p.roughness_m, tag + " roughness", issues);
    }
    for (const auto& s : gas.sources) {
      std::string tag = "gas source " + std::to_string(s.id);
      if (!has_gas(s.junction)) issues.push_back(tag + " references unknown junction");
      if (s.flow_kg_s < 0.0) issues.push_back(tag + " scheduled flow is negative");
      check_positive(s.max_flow_kg_s, tag + " rating", issues);
    }
    for (const auto& d : gas.demands) {
      std::string tag = "gas demand " + std::to_string(d.id);
      if (!has_gas(d.junction)) issues.push_back(tag + " references unknown junction");
      if (d.flow_kg_s < 0.0) issues.push_back(tag + " flow is negative");
    }
  } else if (!gas.pipes.empty() || !gas.demands.empty() || !gas.sources.empty()) {
    issues.push_back("gas grid has elements but no junctions");
  }

  if (!heat.junctions.empty()) {
    if (!has_heat(heat.slack_junction)) issues.push_back("heat slack junction is not a junction");
    check_positive(heat.constants.water_density, "water density", issues);
    check_positive(heat.constants.specific_heat, "water specific heat", issues);
    check_positive(heat.constants.hx_delta_t_k, "exchanger temperature drop", issues);
    for (const auto& j : heat.junctions) {
      if (!(j.tmin_k < j.tmax_k))
        issues.push_back("heat junction " + std::to_string(j.id) + " temperature bounds are not ordered");
    }
    if (heat.constants.supply_temp_k <= heat.constants.t_ext_k)
      issues.push_back("heat supply temperature is not above ambient");
    for (const auto& p : heat.pipes) {
      std::string tag = "water pipe " + std::to_string(p.id);
      if (!has_heat(p.from) || !has_heat(p.to)) issues.push_back(tag + " references unknown junction");
      if (p.from == p.to) issues.push_back(tag + " is a self loop");
      check_positive(p.length_m, tag + " length", issues);
      check_positive(p.diameter_m, tag + " diameter", issues);
      check_positive(p.inner_diameter_m, tag + " inner diameter", issues);
      check_positive(p.insulation_w_mk, tag + " loss coefficient", issues);
    }
    for (const auto& s : heat.sources) {
      std::string tag = "heat source " + std::to_string(s.id);
      if (!has_heat(s.junction)) issues.push_back(tag + " references unknown junction");
      check_positive(s.max_flow_kg_s, tag + " rating", issues);
    }
    for (const auto& d : heat.demands) {
      std::string tag = "heat demand " + std::to_string(d.id);
      if (!has_heat(d.junction)) issues.push_back(tag + " references unknown junction");
      if (d.heat_w < 0.0) issues.push_back(tag + " heat power is negative");
    }
  } else if (!heat.pipes.empty() || !heat.demands.empty() || !heat.sources.empty()) {
    issues.push_back("heat grid has elements but no junctions");
  }

  for (const auto& cp : net.coupling_points) {
    std::string tag = std::string(coupling_kind_name(cp.kind)) + " " + std::to_string(cp.id);
    auto check_eta = [&](double eta, const char* name) {
      if (!(eta > 0.0) || eta > 1.0) issues.push_back(tag + " " + name + " outside (0, 1]");
    };
    check_positive(cp.rating, tag + " rating", issues);
    if (cp.dispatch < 0.0 || cp.dispatch > cp.rating)
      issues.push_back(tag + " dispatch outside [0, rating]");
    switch (cp.kind) {
      case CouplingKind::Chp:
        check_eta(cp.eta_el, "eta_el");
        check_eta(cp.eta_heat, "eta_heat");
        if (cp.eta_el + cp.eta_heat > 1.0) issues.push_back(tag + " total efficiency above 1");
        if (!has_bus(cp.bus)) issues.push_back(tag + " references unknown bus");
        if (!has_gas(cp.gas_junction)) issues.push_back(tag + " references unknown gas junction");
        if (!has_heat(cp.heat_junction_b)) issues.push_back(tag + " references unknown heat junction");
        if (cp.heat_junction_a >= 0 && !has_heat(cp.heat_junction_a))
          issues.push_back(tag + " exchanger upstream junction unknown");
        break;
      case CouplingKind::PowerToHeat:
        check_eta(cp.eta_el, "eta_el");
        if (!has_bus(cp.bus)) issues.push_back(tag + " references unknown bus");
        if (!has_heat(cp.heat_junction_b)) issues.push_back(tag + " references unknown heat junction");
        if (cp.heat_junction_a >= 0 && !has_heat(cp.heat_junction_a))
          issues.push_back(tag + " exchanger upstream junction unknown");
        break;
      case CouplingKind::PowerToGas:
        check_eta(cp.eta_gas, "eta_gas");
        if (!has_bus(cp.bus)) issues.push_back(tag + " references unknown bus");
        if (!has_gas(cp.gas_junction)) issues.push_back(tag + " references unknown gas junction");
        break;
    }
  }

  return issues;
}

void require_valid(const MultiEnergyNetwork& net) {
  auto issues = validate_network(net);
  if (issues.empty()) return;
  std::ostringstream os;
  os << "network validation failed with " << issues.size() << " issue(s):";
  for (const auto& issue : issues) os << "\n  - " << issue;
  throw ValidationError(os.str());
}

}  // namespace mesres
