#pragma once

#include <vector>

#include "mesres/network.hpp"

namespace mesres {

// One vitality code per registry component, indexed like net.registry.
using VitalityVector = std::vector<Vitality>;

enum class HeatSourceKind : std::uint8_t { Slack = 0, Cp = 1 };

struct HeatIslandSource {
  HeatSourceKind kind = HeatSourceKind::Slack;
  int cp = -1;        // coupling point container index when kind == Cp
  int junction = -1;  // heat junction container index of the feed-in
};

// A live connected part of the heat network. The reference junction fixes
// temperature and hydraulic pressure; its mass balance is released and the
// implied feed flow is tied to the reference source.
struct HeatIsland {
  bool has_slack = false;
  int ref_junction = -1;                 // container index
  std::vector<int> junctions;            // container indices, ascending
  std::vector<HeatIslandSource> sources; // reference source first
};

// Result of overlaying a vitality vector on a network: what is in service,
// what is reachable from its references, and which demands are dropped
// outright. Parts of a carrier with no path to a feeding reference cannot be
// operated and count as fully shed.
struct DegradedNetwork {
  const MultiEnergyNetwork* net = nullptr;
  VitalityVector vitality;

  std::vector<bool> line_live;
  std::vector<bool> generator_live;
  std::vector<bool> gas_pipe_live;
  std::vector<bool> water_pipe_live;

  std::vector<bool> bus_live;
  std::vector<bool> gas_junction_live;
  std::vector<bool> heat_junction_live;

  std::vector<bool> el_demand_live;
  std::vector<bool> gas_demand_live;
  std::vector<bool> heat_demand_live;
  std::vector<bool> gas_source_live;   // non-slack scheduled sources
  std::vector<bool> heat_source_live;  // feed units at the slack junction

  // Coupling point operability and per-leg delivery. A leg whose carrier side
  // is dead is curtailed without disabling the whole unit.
  std::vector<bool> cp_operable;
  std::vector<bool> cp_el_leg;
  std::vector<bool> cp_heat_leg;
  std::vector<bool> cp_gas_leg;

  std::vector<HeatIsland> heat_islands;
  std::vector<int> heat_island_of;  // junction container index -> island index, -1 when dropped

  double dropped_w[kCarrierCount] = {0.0, 0.0, 0.0};

  bool fully_dead(Carrier c) const;
  double dropped_total_w() const { return dropped_w[0] + dropped_w[1] + dropped_w[2]; }
};

// Overlay theta on the network. Pure: same inputs give the same result, and
// reapplying the same vector is idempotent. Throws StructuralError when the
// vector length does not match the registry.
DegradedNetwork apply_vitality(const MultiEnergyNetwork& net, const VitalityVector& theta);

// All-functional vector for a network.
VitalityVector healthy_vitality(const MultiEnergyNetwork& net);

}  // namespace mesres
