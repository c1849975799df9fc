#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mesres/network.hpp"

namespace mesres {

struct SynthError : Error {
  using Error::Error;
};

// Physical defaults of generated gas and heat equipment. Every generated
// network draws from this one table.
struct ParamTable {
  // end demand energy per unit of electric demand energy at the same node
  double gas_energy_ratio = 1.5;
  double heat_energy_ratio = 2.0;

  // pipe catalog and sizing targets
  std::vector<double> diameters_m{0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2};
  double sizing_headroom = 1.5;         // design flow margin over scheduled demand
  double gas_drop_budget_pa = 2e5;      // pressure drop target per gas pipe
  double heat_drop_budget_pa = 5e5;     // hydraulic drop target per water pipe
  double water_velocity_max_m_s = 1.5;  // velocity ceiling for water pipes
  double roughness_m = 1e-4;
  double insulation_w_mk = 0.035;

  // operating windows of generated junctions
  double gas_slack_pressure_pa = 50e5;
  double gas_pressure_min_pa = 25e5;
  double gas_pressure_max_pa = 65e5;
  double heat_temp_min_k = 328.15;
  double heat_temp_max_k = 368.15;
  double source_headroom = 3.0;  // slack source rating margin over total demand

  // coupling point equipment
  double chp_eta_el = 0.30;
  double chp_eta_heat = 0.55;
  double p2h_eta = 0.95;
  double p2g_eta = 0.60;
  double chp_rating_kg_s = 0.01;   // gas input rating
  double p2h_rating_w = 250e3;     // electric input rating
  double p2g_rating_w = 150e3;     // electric input rating
  double dispatch_fraction = 0.3;  // scheduled input share of the rating
};

// Knobs of one synthetic multi-energy network. Carrier densities set the
// share of electric demand buses that also take the carrier; coupling
// densities set units per reference site. The seed fixes every sampling
// decision, so equal (base, config) pairs regenerate bit-identically.
struct SynthConfig {
  double gas_density = 1.0;   // in [0, 1]; 0 leaves the carrier empty
  double heat_density = 1.0;  // in [0, 1]; 0 leaves the carrier empty
  double chp_density = 1.0;   // units per heat demand node, >= 0
  double p2h_density = 1.0;   // units per heat demand node, >= 0
  double p2g_density = 1.0;   // units per gas junction, >= 0
  std::uint64_t seed = 0;
  ParamTable params;
};

std::vector<std::string> validate_synth_config(const SynthConfig& cfg);

// Lays a carrier network over the electric topology: a deterministic quota of
// demand buses is selected at the carrier density, joined to a slack junction
// at the electric slack bus by a tree of pipes along existing line corridors,
// and sized from the diameter catalog. Junction ids equal bus ids. Raising
// the density never drops a previously selected bus for the same seed.
GasGrid derive_gas_network(const MultiEnergyNetwork& base, const SynthConfig& cfg);
HeatGrid derive_heat_network(const MultiEnergyNetwork& base, const SynthConfig& cfg);

// Adds coupling points at co-located carrier nodes. Unit counts are
// round(density x reference count): heat demand nodes for CHP and
// power-to-heat, gas junctions for power-to-gas. Sites cycle when the count
// exceeds the candidates. Raises the gas slack source rating by the added
// draw of the placed CHP units.
void place_coupling_points(MultiEnergyNetwork& mes, const SynthConfig& cfg);

// Full pipeline: copies the electric base, derives both carrier networks,
// places coupling points, verifies that the healthy flow solution stays
// inside every operating window and writes the reference schedule from it.
MultiEnergyNetwork generate_mes(const MultiEnergyNetwork& base, const SynthConfig& cfg);

}  // namespace mesres
