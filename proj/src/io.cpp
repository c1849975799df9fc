#include "mesres/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "json_reader.hpp"

namespace mesres {

using nlohmann::json;

namespace {

using detail::Reader;

json bus_to_json(const Bus& b) {
  json j{{"id", b.id}, {"vmin_pu", b.vmin_pu}, {"vmax_pu", b.vmax_pu}};
  if (b.shunt_g_s != 0.0) j["shunt_g_s"] = b.shunt_g_s;
  if (b.shunt_b_s != 0.0) j["shunt_b_s"] = b.shunt_b_s;
  return j;
}

json line_to_json(const Line& l) {
  json j{{"id", l.id},         {"from", l.from},           {"to", l.to},
         {"r_ohm", l.r_ohm},   {"x_ohm", l.x_ohm},         {"b_s", l.b_s},
         {"rating_va", l.rating_va}, {"length_km", l.length_km}};
  if (l.tap != 1.0) j["tap"] = l.tap;
  if (l.shift_rad != 0.0) j["shift_rad"] = l.shift_rad;
  return j;
}

json generator_to_json(const Generator& g) {
  return json{{"id", g.id}, {"bus", g.bus}, {"p_w", g.p_w}, {"q_var", g.q_var}, {"p_max_w", g.p_max_w}};
}

json electric_demand_to_json(const ElectricDemand& d) {
  return json{{"id", d.id}, {"bus", d.bus}, {"p_w", d.p_w}, {"q_var", d.q_var}};
}

json gas_pipe_to_json(const GasPipe& p) {
  return json{{"id", p.id},
              {"from", p.from},
              {"to", p.to},
              {"length_m", p.length_m},
              {"diameter_m", p.diameter_m},
              {"inner_diameter_m", p.inner_diameter_m},
              {"roughness_m", p.roughness_m}};
}

json water_pipe_to_json(const WaterPipe& p) {
  return json{{"id", p.id},
              {"from", p.from},
              {"to", p.to},
              {"length_m", p.length_m},
              {"diameter_m", p.diameter_m},
              {"inner_diameter_m", p.inner_diameter_m},
              {"roughness_m", p.roughness_m},
              {"insulation_w_mk", p.insulation_w_mk}};
}

json coupling_to_json(const CouplingPoint& cp) {
  json j{{"id", cp.id}, {"kind", coupling_kind_name(cp.kind)}, {"rating", cp.rating}, {"dispatch", cp.dispatch}};
  switch (cp.kind) {
    case CouplingKind::Chp:
      j["eta_el"] = cp.eta_el;
      j["eta_heat"] = cp.eta_heat;
      j["bus"] = cp.bus;
      j["gas_junction"] = cp.gas_junction;
      j["heat_junction_a"] = cp.heat_junction_a;
      j["heat_junction_b"] = cp.heat_junction_b;
      break;
    case CouplingKind::PowerToHeat:
      j["eta_el"] = cp.eta_el;
      j["bus"] = cp.bus;
      j["heat_junction_a"] = cp.heat_junction_a;
      j["heat_junction_b"] = cp.heat_junction_b;
      break;
    case CouplingKind::PowerToGas:
      j["eta_gas"] = cp.eta_gas;
      j["bus"] = cp.bus;
      j["gas_junction"] = cp.gas_junction;
      break;
  }
  return j;
}

Bus bus_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  Bus b;
  b.id = r.required<int>("id");
  b.vmin_pu = r.optional<double>("vmin_pu", b.vmin_pu);
  b.vmax_pu = r.optional<double>("vmax_pu", b.vmax_pu);
  b.shunt_g_s = r.optional<double>("shunt_g_s", b.shunt_g_s);
  b.shunt_b_s = r.optional<double>("shunt_b_s", b.shunt_b_s);
  r.finish();
  return b;
}

Line line_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  Line l;
  l.id = r.required<int>("id");
  l.from = r.required<int>("from");
  l.to = r.required<int>("to");
  l.r_ohm = r.required<double>("r_ohm");
  l.x_ohm = r.required<double>("x_ohm");
  l.b_s = r.optional<double>("b_s", 0.0);
  l.tap = r.optional<double>("tap", 1.0);
  l.shift_rad = r.optional<double>("shift_rad", 0.0);
  l.rating_va = r.required<double>("rating_va");
  l.length_km = r.optional<double>("length_km", 1.0);
  r.finish();
  return l;
}

Generator generator_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  Generator g;
  g.id = r.required<int>("id");
  g.bus = r.required<int>("bus");
  g.p_w = r.required<double>("p_w");
  g.q_var = r.optional<double>("q_var", 0.0);
  g.p_max_w = r.required<double>("p_max_w");
  r.finish();
  return g;
}

ElectricDemand electric_demand_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  ElectricDemand d;
  d.id = r.required<int>("id");
  d.bus = r.required<int>("bus");
  d.p_w = r.required<double>("p_w");
  d.q_var = r.optional<double>("q_var", 0.0);
  r.finish();
  return d;
}

GasPipe gas_pipe_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  GasPipe p;
  p.id = r.required<int>("id");
  p.from = r.required<int>("from");
  p.to = r.required<int>("to");
  p.length_m = r.required<double>("length_m");
  p.diameter_m = r.required<double>("diameter_m");
  p.inner_diameter_m = r.optional<double>("inner_diameter_m", p.diameter_m);
  p.roughness_m = r.optional<double>("roughness_m", 1e-4);
  r.finish();
  return p;
}

WaterPipe water_pipe_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  WaterPipe p;
  p.id = r.required<int>("id");
  p.from = r.required<int>("from");
  p.to = r.required<int>("to");
  p.length_m = r.required<double>("length_m");
  p.diameter_m = r.required<double>("diameter_m");
  p.inner_diameter_m = r.optional<double>("inner_diameter_m", p.diameter_m);
  p.roughness_m = r.optional<double>("roughness_m", 1e-4);
  p.insulation_w_mk = r.required<double>("insulation_w_mk");
  r.finish();
  return p;
}

CouplingPoint coupling_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  CouplingPoint cp;
  cp.id = r.required<int>("id");
  std::string kind = r.required<std::string>("kind");
  if (kind == "chp") cp.kind = CouplingKind::Chp;
  else if (kind == "p2h") cp.kind = CouplingKind::PowerToHeat;
  else if (kind == "p2g") cp.kind = CouplingKind::PowerToGas;
  else throw ParseError(where + ": unknown coupling kind '" + kind + "'");
  cp.rating = r.required<double>("rating");
  cp.dispatch = r.optional<double>("dispatch", 0.0);
  cp.eta_el = r.optional<double>("eta_el", 0.0);
  cp.eta_heat = r.optional<double>("eta_heat", 0.0);
  cp.eta_gas = r.optional<double>("eta_gas", 0.0);
  cp.bus = r.optional<int>("bus", -1);
  cp.gas_junction = r.optional<int>("gas_junction", -1);
  cp.heat_junction_a = r.optional<int>("heat_junction_a", -1);
  cp.heat_junction_b = r.optional<int>("heat_junction_b", -1);
  r.finish();
  return cp;
}

}  // namespace

std::string network_to_json(const MultiEnergyNetwork& net, int indent) {
  json j;
  j["schema_version"] = net.schema_version;
  j["name"] = net.name;

  json el;
  el["base_va"] = net.electricity.base_va;
  el["base_v"] = net.electricity.base_v;
  el["slack_bus"] = net.electricity.slack_bus;
  el["buses"] = json::array();
  for (const auto& b : net.electricity.buses) el["buses"].push_back(bus_to_json(b));
  el["lines"] = json::array();
  for (const auto& l : net.electricity.lines) el["lines"].push_back(line_to_json(l));
  el["generators"] = json::array();
  for (const auto& g : net.electricity.generators) el["generators"].push_back(generator_to_json(g));
  el["demands"] = json::array();
  for (const auto& d : net.electricity.demands) el["demands"].push_back(electric_demand_to_json(d));
  j["electricity"] = el;

  if (!net.gas.junctions.empty()) {
    json g;
    const auto& c = net.gas.constants;
    g["constants"] = json{{"z", c.z},
                          {"r", c.r},
                          {"t_k", c.t_k},
                          {"molar_mass", c.molar_mass},
                          {"viscosity", c.viscosity},
                          {"hhv_kwh_per_kg", c.hhv_kwh_per_kg},
                          {"energy_per_kwh", c.energy_per_kwh}};
    g["slack_junction"] = net.gas.slack_junction;
    g["slack_pressure_pa"] = net.gas.slack_pressure_pa;
    g["junctions"] = json::array();
    for (const auto& jn : net.gas.junctions)
      g["junctions"].push_back(json{{"id", jn.id}, {"pmin_pa", jn.pmin_pa}, {"pmax_pa", jn.pmax_pa}});
    g["pipes"] = json::array();
    for (const auto& p : net.gas.pipes) g["pipes"].push_back(gas_pipe_to_json(p));
    g["sources"] = json::array();
    for (const auto& s : net.gas.sources)
      g["sources"].push_back(json{{"id", s.id},
                                  {"junction", s.junction},
                                  {"flow_kg_s", s.flow_kg_s},
                                  {"max_flow_kg_s", s.max_flow_kg_s}});
    g["demands"] = json::array();
    for (const auto& d : net.gas.demands)
      g["demands"].push_back(json{{"id", d.id}, {"junction", d.junction}, {"flow_kg_s", d.flow_kg_s}});
    j["gas"] = g;
  }

  if (!net.heat.junctions.empty()) {
    json h;
    const auto& c = net.heat.constants;
    h["constants"] = json{{"water_density", c.water_density},
                          {"water_viscosity", c.water_viscosity},
                          {"specific_heat", c.specific_heat},
                          {"t_ext_k", c.t_ext_k},
                          {"supply_temp_k", c.supply_temp_k},
                          {"hx_delta_t_k", c.hx_delta_t_k},
                          {"ref_pressure_pa", c.ref_pressure_pa}};
    h["slack_junction"] = net.heat.slack_junction;
    h["junctions"] = json::array();
    for (const auto& jn : net.heat.junctions)
      h["junctions"].push_back(json{{"id", jn.id}, {"tmin_k", jn.tmin_k}, {"tmax_k", jn.tmax_k}});
    h["pipes"] = json::array();
    for (const auto& p : net.heat.pipes) h["pipes"].push_back(water_pipe_to_json(p));
    h["sources"] = json::array();
    for (const auto& s : net.heat.sources)
      h["sources"].push_back(json{{"id", s.id}, {"junction", s.junction}, {"max_flow_kg_s", s.max_flow_kg_s}});
    h["demands"] = json::array();
    for (const auto& d : net.heat.demands)
      h["demands"].push_back(json{{"id", d.id}, {"junction", d.junction}, {"heat_w", d.heat_w}});
    j["heat"] = h;
  }

  if (!net.coupling_points.empty()) {
    j["coupling_points"] = json::array();
    for (const auto& cp : net.coupling_points) j["coupling_points"].push_back(coupling_to_json(cp));
  }

  if (net.schedule.valid) {
    j["schedule"] = json{{"slack_p_w", net.schedule.slack_p_w},
                         {"slack_q_var", net.schedule.slack_q_var},
                         {"gas_slack_kg_s", net.schedule.gas_slack_kg_s},
                         {"heat_slack_kg_s", net.schedule.heat_slack_kg_s}};
  }

  return j.dump(indent) + "\n";
}

MultiEnergyNetwork network_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  Reader root(j, "network");
  MultiEnergyNetwork net;
  net.schema_version = root.required<int>("schema_version");
  if (net.schema_version != 1)
    throw ParseError("unsupported schema_version " + std::to_string(net.schema_version));
  net.name = root.optional<std::string>("name", "");

  const json* el = root.find("electricity");
  if (!el) throw ParseError("network: missing field 'electricity'");
  {
    Reader r(*el, "electricity");
    net.electricity.base_va = r.optional<double>("base_va", 1e6);
    net.electricity.base_v = r.optional<double>("base_v", 20e3);
    net.electricity.slack_bus = r.required<int>("slack_bus");
    const json* arr = r.find("buses");
    if (!arr) throw ParseError("electricity: missing field 'buses'");
    for (const auto& e : *arr) net.electricity.buses.push_back(bus_from_json(e, "bus"));
    if ((arr = r.find("lines")))
      for (const auto& e : *arr) net.electricity.lines.push_back(line_from_json(e, "line"));
    if ((arr = r.find("generators")))
      for (const auto& e : *arr) net.electricity.generators.push_back(generator_from_json(e, "generator"));
    if ((arr = r.find("demands")))
      for (const auto& e : *arr) net.electricity.demands.push_back(electric_demand_from_json(e, "demand"));
    r.finish();
  }

  if (const json* g = root.find("gas")) {
    Reader r(*g, "gas");
    if (const json* c = r.find("constants")) {
      Reader rc(*c, "gas constants");
      auto& gc = net.gas.constants;
      gc.z = rc.optional<double>("z", gc.z);
      gc.r = rc.optional<double>("r", gc.r);
      gc.t_k = rc.optional<double>("t_k", gc.t_k);
      gc.molar_mass = rc.optional<double>("molar_mass", gc.molar_mass);
      gc.viscosity = rc.optional<double>("viscosity", gc.viscosity);
      gc.hhv_kwh_per_kg = rc.optional<double>("hhv_kwh_per_kg", gc.hhv_kwh_per_kg);
      gc.energy_per_kwh = rc.optional<double>("energy_per_kwh", gc.energy_per_kwh);
      rc.finish();
    }
    net.gas.slack_junction = r.required<int>("slack_junction");
    net.gas.slack_pressure_pa = r.required<double>("slack_pressure_pa");
    const json* arr = r.find("junctions");
    if (!arr) throw ParseError("gas: missing field 'junctions'");
    for (const auto& e : *arr) {
      Reader rj(e, "gas junction");
      GasJunction jn;
      jn.id = rj.required<int>("id");
      jn.pmin_pa = rj.required<double>("pmin_pa");
      jn.pmax_pa = rj.required<double>("pmax_pa");
      rj.finish();
      net.gas.junctions.push_back(jn);
    }
    if ((arr = r.find("pipes")))
      for (const auto& e : *arr) net.gas.pipes.push_back(gas_pipe_from_json(e, "gas pipe"));
    if ((arr = r.find("sources"))) {
      for (const auto& e : *arr) {
        Reader rs(e, "gas source");
        GasSource s;
        s.id = rs.required<int>("id");
        s.junction = rs.required<int>("junction");
        s.flow_kg_s = rs.required<double>("flow_kg_s");
        s.max_flow_kg_s = rs.required<double>("max_flow_kg_s");
        rs.finish();
        net.gas.sources.push_back(s);
      }
    }
    if ((arr = r.find("demands"))) {
      for (const auto& e : *arr) {
        Reader rd(e, "gas demand");
        GasDemand d;
        d.id = rd.required<int>("id");
        d.junction = rd.required<int>("junction");
        d.flow_kg_s = rd.required<double>("flow_kg_s");
        rd.finish();
        net.gas.demands.push_back(d);
      }
    }
    r.finish();
  }

  if (const json* h = root.find("heat")) {
    Reader r(*h, "heat");
    if (const json* c = r.find("constants")) {
      Reader rc(*c, "heat constants");
      auto& hc = net.heat.constants;
      hc.water_density = rc.optional<double>("water_density", hc.water_density);
      hc.water_viscosity = rc.optional<double>("water_viscosity", hc.water_viscosity);
      hc.specific_heat = rc.optional<double>("specific_heat", hc.specific_heat);
      hc.t_ext_k = rc.optional<double>("t_ext_k", hc.t_ext_k);
      hc.supply_temp_k = rc.optional<double>("supply_temp_k", hc.supply_temp_k);
      hc.hx_delta_t_k = rc.optional<double>("hx_delta_t_k", hc.hx_delta_t_k);
      hc.ref_pressure_pa = rc.optional<double>("ref_pressure_pa", hc.ref_pressure_pa);
      rc.finish();
    }
    net.heat.slack_junction = r.required<int>("slack_junction");
    const json* arr = r.find("junctions");
    if (!arr) throw ParseError("heat: missing field 'junctions'");
    for (const auto& e : *arr) {
      Reader rj(e, "heat junction");
      HeatJunction jn;
      jn.id = rj.required<int>("id");
      jn.tmin_k = rj.required<double>("tmin_k");
      jn.tmax_k = rj.required<double>("tmax_k");
      rj.finish();
      net.heat.junctions.push_back(jn);
    }
    if ((arr = r.find("pipes")))
      for (const auto& e : *arr) net.heat.pipes.push_back(water_pipe_from_json(e, "water pipe"));
    if ((arr = r.find("sources"))) {
      for (const auto& e : *arr) {
        Reader rs(e, "heat source");
        HeatSource s;
        s.id = rs.required<int>("id");
        s.junction = rs.required<int>("junction");
        s.max_flow_kg_s = rs.required<double>("max_flow_kg_s");
        rs.finish();
        net.heat.sources.push_back(s);
      }
    }
    if ((arr = r.find("demands"))) {
      for (const auto& e : *arr) {
        Reader rd(e, "heat demand");
        HeatDemand d;
        d.id = rd.required<int>("id");
        d.junction = rd.required<int>("junction");
        d.heat_w = rd.required<double>("heat_w");
        rd.finish();
        net.heat.demands.push_back(d);
      }
    }
    r.finish();
  }

  if (const json* cps = root.find("coupling_points"))
    for (const auto& e : *cps) net.coupling_points.push_back(coupling_from_json(e, "coupling point"));

  if (const json* s = root.find("schedule")) {
    Reader r(*s, "schedule");
    net.schedule.valid = true;
    net.schedule.slack_p_w = r.required<double>("slack_p_w");
    net.schedule.slack_q_var = r.required<double>("slack_q_var");
    net.schedule.gas_slack_kg_s = r.optional<double>("gas_slack_kg_s", 0.0);
    net.schedule.heat_slack_kg_s = r.optional<double>("heat_slack_kg_s", 0.0);
    r.finish();
  }

  root.finish();
  net.finalize();
  return net;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

void save_network(const MultiEnergyNetwork& net, const std::string& path) {
  write_text_file(path, network_to_json(net));
}

MultiEnergyNetwork load_network(const std::string& path) {
  try {
    return network_from_json(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace mesres
