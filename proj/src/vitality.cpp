#include "mesres/vitality.hpp"

#include <algorithm>
#include <queue>

namespace mesres {

namespace {

// Breadth-first reachability over in-service branches from a set of roots.
// nodes and branches are container-indexed; ends maps a branch to its two
// node container indices.
std::vector<bool> reach(int node_count, const std::vector<std::pair<int, int>>& ends,
                        const std::vector<bool>& branch_live, const std::vector<int>& roots) {
  std::vector<std::vector<std::pair<int, int>>> adj(node_count);  // node -> (branch, other)
  for (size_t b = 0; b < ends.size(); ++b) {
    if (!branch_live[b]) continue;
    adj[ends[b].first].push_back({static_cast<int>(b), ends[b].second});
    adj[ends[b].second].push_back({static_cast<int>(b), ends[b].first});
  }
  std::vector<bool> seen(node_count, false);
  std::queue<int> q;
  for (int r : roots) {
    if (r >= 0 && !seen[r]) {
      seen[r] = true;
      q.push(r);
    }
  }
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [b, v] : adj[u]) {
      (void)b;
      if (!seen[v]) {
        seen[v] = true;
        q.push(v);
      }
    }
  }
  return seen;
}

}  // namespace

bool DegradedNetwork::fully_dead(Carrier c) const {
  switch (c) {
    case Carrier::Electricity:
      return std::none_of(bus_live.begin(), bus_live.end(), [](bool b) { return b; });
    case Carrier::Gas:
      return std::none_of(gas_junction_live.begin(), gas_junction_live.end(), [](bool b) { return b; });
    case Carrier::Heat:
      return std::none_of(heat_junction_live.begin(), heat_junction_live.end(), [](bool b) { return b; });
  }
  return true;
}

VitalityVector healthy_vitality(const MultiEnergyNetwork& net) {
  return VitalityVector(net.registry.size(), Vitality::Functional);
}

DegradedNetwork apply_vitality(const MultiEnergyNetwork& net, const VitalityVector& theta) {
  if (theta.size() != net.registry.size())
    throw StructuralError("vitality vector length " + std::to_string(theta.size()) +
                          " does not match registry size " + std::to_string(net.registry.size()));

  DegradedNetwork d;
  d.net = &net;
  d.vitality = theta;

  const auto& el = net.electricity;
  const auto& gas = net.gas;
  const auto& heat = net.heat;

  d.line_live.assign(el.lines.size(), true);
  d.generator_live.assign(el.generators.size(), true);
  d.gas_pipe_live.assign(gas.pipes.size(), true);
  d.water_pipe_live.assign(heat.pipes.size(), true);
  d.gas_source_live.assign(gas.sources.size(), true);
  d.heat_source_live.assign(heat.sources.size(), true);
  auto& heat_source_live = d.heat_source_live;
  d.cp_operable.assign(net.coupling_points.size(), true);

  for (size_t i = 0; i < net.registry.size(); ++i) {
    if (in_service(theta[i])) continue;
    const auto& info = net.registry[i];
    switch (info.kind) {
      case ComponentKind::Line: d.line_live[info.unit] = false; break;
      case ComponentKind::Generator: d.generator_live[info.unit] = false; break;
      case ComponentKind::GasPipe: d.gas_pipe_live[info.unit] = false; break;
      case ComponentKind::GasSource: d.gas_source_live[info.unit] = false; break;
      case ComponentKind::WaterPipe: d.water_pipe_live[info.unit] = false; break;
      case ComponentKind::HeatSource: heat_source_live[info.unit] = false; break;
      case ComponentKind::Coupling: d.cp_operable[info.unit] = false; break;
    }
  }

  // Electricity: only parts connected to the slack bus can be operated.
  {
    std::vector<std::pair<int, int>> ends;
    ends.reserve(el.lines.size());
    for (const auto& l : el.lines) ends.push_back({net.bus_at(l.from), net.bus_at(l.to)});
    d.bus_live = reach(static_cast<int>(el.buses.size()), ends, d.line_live,
                       {el.buses.empty() ? -1 : net.bus_at(el.slack_bus)});
    for (size_t i = 0; i < el.lines.size(); ++i)
      if (d.line_live[i] && !d.bus_live[net.bus_at(el.lines[i].from)]) d.line_live[i] = false;
    for (size_t i = 0; i < el.generators.size(); ++i)
      if (d.generator_live[i] && !d.bus_live[net.bus_at(el.generators[i].bus)]) d.generator_live[i] = false;
  }

  // Gas: only parts connected to the slack source junction can be operated.
  if (!gas.junctions.empty()) {
    std::vector<std::pair<int, int>> ends;
    ends.reserve(gas.pipes.size());
    for (const auto& p : gas.pipes) ends.push_back({net.gas_junction_at(p.from), net.gas_junction_at(p.to)});
    d.gas_junction_live = reach(static_cast<int>(gas.junctions.size()), ends, d.gas_pipe_live,
                                {net.gas_junction_at(gas.slack_junction)});
    for (size_t i = 0; i < gas.pipes.size(); ++i)
      if (d.gas_pipe_live[i] && !d.gas_junction_live[net.gas_junction_at(gas.pipes[i].from)])
        d.gas_pipe_live[i] = false;
    for (size_t i = 0; i < gas.sources.size(); ++i)
      if (d.gas_source_live[i] && !d.gas_junction_live[net.gas_junction_at(gas.sources[i].junction)])
        d.gas_source_live[i] = false;
  }

  // Coupling input sides decide operability; delivery legs are settled after
  // heat reachability below.
  d.cp_el_leg.assign(net.coupling_points.size(), false);
  d.cp_heat_leg.assign(net.coupling_points.size(), false);
  d.cp_gas_leg.assign(net.coupling_points.size(), false);
  for (size_t i = 0; i < net.coupling_points.size(); ++i) {
    const auto& cp = net.coupling_points[i];
    if (!d.cp_operable[i]) continue;
    switch (cp.kind) {
      case CouplingKind::Chp:
        d.cp_operable[i] = d.gas_junction_live[net.gas_junction_at(cp.gas_junction)];
        break;
      case CouplingKind::PowerToHeat:
      case CouplingKind::PowerToGas:
        d.cp_operable[i] = d.bus_live[net.bus_at(cp.bus)];
        break;
    }
  }

  // Heat: parts connected to the slack source or to a live heat-feeding
  // coupling point stay operable; each such part forms an island around a
  // deterministic reference.
  d.heat_island_of.assign(heat.junctions.size(), -1);
  if (!heat.junctions.empty()) {
    std::vector<std::pair<int, int>> ends;
    ends.reserve(heat.pipes.size());
    for (const auto& p : heat.pipes) ends.push_back({net.heat_junction_at(p.from), net.heat_junction_at(p.to)});

    // Candidate feed-ins with their heat capacity for reference selection.
    struct Feed {
      HeatIslandSource src;
      double capacity_w;
    };
    std::vector<Feed> feeds;
    {
      int slack_idx = net.heat_junction_at(heat.slack_junction);
      Feed f;
      f.src.kind = HeatSourceKind::Slack;
      f.src.junction = slack_idx;
      f.capacity_w = 0.0;
      for (size_t i = 0; i < heat.sources.size(); ++i)
        if (heat_source_live[i] && heat.sources[i].junction == heat.slack_junction)
          f.capacity_w += heat.sources[i].max_flow_kg_s * heat.constants.specific_heat *
                          heat.constants.hx_delta_t_k;
      feeds.push_back(f);
    }
    const auto& gc = net.gas.constants;
    for (size_t i = 0; i < net.coupling_points.size(); ++i) {
      const auto& cp = net.coupling_points[i];
      if (!d.cp_operable[i]) continue;
      if (cp.kind == CouplingKind::Chp) {
        Feed f;
        f.src = {HeatSourceKind::Cp, static_cast<int>(i), net.heat_junction_at(cp.heat_junction_b)};
        f.capacity_w = cp.eta_heat * cp.rating * gc.energy_per_kwh * gc.hhv_kwh_per_kg;
        feeds.push_back(f);
      } else if (cp.kind == CouplingKind::PowerToHeat) {
        Feed f;
        f.src = {HeatSourceKind::Cp, static_cast<int>(i), net.heat_junction_at(cp.heat_junction_b)};
        f.capacity_w = cp.eta_el * cp.rating;
        feeds.push_back(f);
      }
    }

    // Union of reachability from all feeds, then island decomposition.
    std::vector<int> roots;
    for (const auto& f : feeds) roots.push_back(f.src.junction);
    d.heat_junction_live = reach(static_cast<int>(heat.junctions.size()), ends, d.water_pipe_live, roots);

    std::vector<std::vector<std::pair<int, int>>> adj(heat.junctions.size());
    for (size_t b = 0; b < ends.size(); ++b) {
      if (!d.water_pipe_live[b]) continue;
      adj[ends[b].first].push_back({static_cast<int>(b), ends[b].second});
      adj[ends[b].second].push_back({static_cast<int>(b), ends[b].first});
    }
    for (size_t j = 0; j < heat.junctions.size(); ++j) {
      if (!d.heat_junction_live[j] || d.heat_island_of[j] >= 0) continue;
      HeatIsland island;
      std::queue<int> q;
      q.push(static_cast<int>(j));
      d.heat_island_of[j] = static_cast<int>(d.heat_islands.size());
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        island.junctions.push_back(u);
        for (auto [b, v] : adj[u]) {
          (void)b;
          if (d.heat_island_of[v] < 0) {
            d.heat_island_of[v] = static_cast<int>(d.heat_islands.size());
            q.push(v);
          }
        }
      }
      std::sort(island.junctions.begin(), island.junctions.end());
      d.heat_islands.push_back(std::move(island));
    }

    // Attach feeds to their island; the reference feed is the slack if
    // present, otherwise the largest capacity, ties by junction index.
    std::vector<std::vector<Feed>> island_feeds(d.heat_islands.size());
    for (const auto& f : feeds) {
      int isl = d.heat_island_of[f.src.junction];
      if (isl >= 0) island_feeds[isl].push_back(f);
    }
    for (size_t k = 0; k < d.heat_islands.size(); ++k) {
      auto& island = d.heat_islands[k];
      const auto& fs = island_feeds[k];
      size_t ref = 0;
      for (size_t i = 1; i < fs.size(); ++i) {
        const Feed& a = fs[i];
        const Feed& b = fs[ref];
        bool a_slack = a.src.kind == HeatSourceKind::Slack;
        bool b_slack = b.src.kind == HeatSourceKind::Slack;
        if (a_slack != b_slack) {
          if (a_slack) ref = i;
        } else if (a.capacity_w != b.capacity_w) {
          if (a.capacity_w > b.capacity_w) ref = i;
        } else if (a.src.junction < b.src.junction) {
          ref = i;
        }
      }
      island.has_slack = std::any_of(fs.begin(), fs.end(), [](const Feed& f) {
        return f.src.kind == HeatSourceKind::Slack;
      });
      island.ref_junction = fs[ref].src.junction;
      island.sources.push_back(fs[ref].src);
      for (size_t i = 0; i < fs.size(); ++i)
        if (i != ref) island.sources.push_back(fs[i].src);
    }

    for (size_t i = 0; i < heat.pipes.size(); ++i)
      if (d.water_pipe_live[i] && !d.heat_junction_live[net.heat_junction_at(heat.pipes[i].from)])
        d.water_pipe_live[i] = false;
  }

  // Delivery legs.
  for (size_t i = 0; i < net.coupling_points.size(); ++i) {
    const auto& cp = net.coupling_points[i];
    if (!d.cp_operable[i]) continue;
    switch (cp.kind) {
      case CouplingKind::Chp:
        d.cp_el_leg[i] = d.bus_live[net.bus_at(cp.bus)];
        d.cp_heat_leg[i] = d.heat_junction_live[net.heat_junction_at(cp.heat_junction_b)];
        // A CHP with both outlets dead has no reason to burn fuel.
        if (!d.cp_el_leg[i] && !d.cp_heat_leg[i]) d.cp_operable[i] = false;
        break;
      case CouplingKind::PowerToHeat:
        d.cp_heat_leg[i] = d.heat_junction_live[net.heat_junction_at(cp.heat_junction_b)];
        if (!d.cp_heat_leg[i]) d.cp_operable[i] = false;
        break;
      case CouplingKind::PowerToGas:
        d.cp_gas_leg[i] = d.gas_junction_live[net.gas_junction_at(cp.gas_junction)];
        if (!d.cp_gas_leg[i]) d.cp_operable[i] = false;
        break;
    }
  }

  // Demand liveness and dropped power per carrier.
  d.el_demand_live.assign(el.demands.size(), true);
  for (size_t i = 0; i < el.demands.size(); ++i) {
    d.el_demand_live[i] = d.bus_live[net.bus_at(el.demands[i].bus)];
    if (!d.el_demand_live[i]) d.dropped_w[static_cast<int>(Carrier::Electricity)] += el.demands[i].p_w;
  }
  d.gas_demand_live.assign(gas.demands.size(), true);
  for (size_t i = 0; i < gas.demands.size(); ++i) {
    d.gas_demand_live[i] = d.gas_junction_live[net.gas_junction_at(gas.demands[i].junction)];
    if (!d.gas_demand_live[i])
      d.dropped_w[static_cast<int>(Carrier::Gas)] += gas_demand_power_w(gas, gas.demands[i]);
  }
  d.heat_demand_live.assign(heat.demands.size(), true);
  for (size_t i = 0; i < heat.demands.size(); ++i) {
    d.heat_demand_live[i] = d.heat_junction_live[net.heat_junction_at(heat.demands[i].junction)];
    if (!d.heat_demand_live[i]) d.dropped_w[static_cast<int>(Carrier::Heat)] += heat.demands[i].heat_w;
  }

  return d;
}

}  // namespace mesres
