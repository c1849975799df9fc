#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mesres {

// Energy carriers of the coupled system. Coupling points are not a carrier;
// they bridge two of them and form their own failure class.
enum class Carrier : std::uint8_t { Electricity = 0, Gas = 1, Heat = 2 };
inline constexpr int kCarrierCount = 3;
const char* carrier_name(Carrier c);

// Failure classes used by the event generator (grid multipliers) and by the
// carrier-pair impact tables. Carriers plus the coupling-point class.
enum class GridClass : std::uint8_t { Electricity = 0, Heat = 1, Gas = 2, Coupling = 3 };
inline constexpr int kGridClassCount = 4;
const char* grid_class_name(GridClass g);

// Component vitality codes. Broken components are out of service, repaired
// ones are back in service and keep the distinct label.
enum class Vitality : std::uint8_t { Broken = 0, Functional = 1, Repaired = 2 };
inline bool in_service(Vitality v) { return v != Vitality::Broken; }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct StructuralError : Error {
  using Error::Error;
};
struct DivergenceError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

// --- electricity -----------------------------------------------------------

struct Bus {
  int id = -1;
  double vmin_pu = 0.9;
  double vmax_pu = 1.1;
  double shunt_g_s = 0.0;  // bus shunt admittance, siemens
  double shunt_b_s = 0.0;
};

struct Line {
  int id = -1;
  int from = -1;
  int to = -1;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double b_s = 0.0;        // total line charging susceptance, split per end
  double tap = 1.0;        // transformer magnitude on the from side
  double shift_rad = 0.0;  // transformer phase shift on the from side
  double rating_va = 0.0;  // apparent-power rating for loading percent
  double length_km = 1.0;
};

struct Generator {
  int id = -1;
  int bus = -1;
  double p_w = 0.0;  // scheduled active dispatch
  double q_var = 0.0;
  double p_max_w = 0.0;
};

struct ElectricDemand {
  int id = -1;
  int bus = -1;
  double p_w = 0.0;
  double q_var = 0.0;
};

struct ElectricGrid {
  double base_va = 1e6;
  double base_v = 20e3;
  int slack_bus = -1;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<ElectricDemand> demands;
};

// --- gas --------------------------------------------------------------------

struct GasConstants {
  double z = 0.9;                  // compressibility
  double r = 8.314;                // universal gas constant, J/(mol K)
  double t_k = 288.15;             // gas temperature
  double molar_mass = 0.0175;      // kg/mol
  double viscosity = 1.1e-5;       // dynamic viscosity, Pa s
  double hhv_kwh_per_kg = 14.0;    // higher heating value
  double energy_per_kwh = 3.6e6;   // J per kWh, unit constant of the CP laws
};

struct GasJunction {
  int id = -1;
  double pmin_pa = 0.0;
  double pmax_pa = 0.0;
};

struct GasPipe {
  int id = -1;
  int from = -1;
  int to = -1;
  double length_m = 0.0;
  double diameter_m = 0.0;        // nominal diameter used by the friction law
  double inner_diameter_m = 0.0;  // bore used for the roughness ratio
  double roughness_m = 1e-4;
};

struct GasSource {
  int id = -1;
  int junction = -1;
  double flow_kg_s = 0.0;      // scheduled injection
  double max_flow_kg_s = 0.0;  // physical rating
};

struct GasDemand {
  int id = -1;
  int junction = -1;
  double flow_kg_s = 0.0;
};

struct GasGrid {
  GasConstants constants;
  int slack_junction = -1;
  double slack_pressure_pa = 40e5;
  std::vector<GasJunction> junctions;
  std::vector<GasPipe> pipes;
  std::vector<GasSource> sources;  // the slack source is sources.front() by convention
  std::vector<GasDemand> demands;
};

// --- heat -------------------------------------------------------------------

struct HeatConstants {
  double water_density = 975.0;       // kg/m^3 at supply temperature
  double water_viscosity = 3.1e-4;    // dynamic viscosity, Pa s
  double specific_heat = 4190.0;      // J/(kg K)
  double t_ext_k = 281.15;            // ambient around buried pipes
  double supply_temp_k = 363.15;      // source feed temperature
  double hx_delta_t_k = 30.0;         // design temperature drop over demand exchangers
  double ref_pressure_pa = 6e5;       // hydraulic reference at the source
};

struct HeatJunction {
  int id = -1;
  double tmin_k = 0.0;
  double tmax_k = 0.0;
};

struct WaterPipe {
  int id = -1;
  int from = -1;
  int to = -1;
  double length_m = 0.0;
  double diameter_m = 0.0;
  double inner_diameter_m = 0.0;
  double roughness_m = 1e-4;
  double insulation_w_mk = 0.035;  // effective loss coefficient k of the pipe wall
};

struct HeatSource {
  int id = -1;
  int junction = -1;
  double max_flow_kg_s = 0.0;
};

struct HeatDemand {
  int id = -1;
  int junction = -1;
  double heat_w = 0.0;
};

struct HeatGrid {
  HeatConstants constants;
  int slack_junction = -1;
  std::vector<HeatJunction> junctions;
  std::vector<WaterPipe> pipes;
  std::vector<HeatSource> sources;  // slack source first by convention
  std::vector<HeatDemand> demands;
};

// --- coupling points ---------------------------------------------------------

enum class CouplingKind : std::uint8_t { Chp = 0, PowerToHeat = 1, PowerToGas = 2 };
const char* coupling_kind_name(CouplingKind k);

// A coupling point attaches to one node per involved carrier. CHP consumes a
// gas mass flow and feeds bus and heat junction; the heat exchanger spans the
// feed into heat_junction_b (heat_junction_a is the upstream neighbour).
// Power-to-heat consumes electric power at `bus` and feeds heat_junction_b.
// Power-to-gas consumes electric power and injects gas at `gas_junction`.
struct CouplingPoint {
  int id = -1;
  CouplingKind kind = CouplingKind::Chp;
  double eta_el = 0.0;
  double eta_heat = 0.0;
  double eta_gas = 0.0;
  int bus = -1;
  int gas_junction = -1;
  int heat_junction_a = -1;
  int heat_junction_b = -1;
  double rating = 0.0;    // input rating: gas kg/s for CHP, electric W otherwise
  double dispatch = 0.0;  // scheduled input level, within [0, rating]
};

// --- component registry -------------------------------------------------------

enum class ComponentKind : std::uint8_t {
  Line = 0,
  Generator = 1,
  GasPipe = 2,
  GasSource = 3,  // non-slack sources only; the slack is the bulk system
  WaterPipe = 4,
  HeatSource = 5,  // non-slack sources only
  Coupling = 6,
};
inline constexpr int kComponentKindCount = 7;
const char* component_kind_name(ComponentKind k);

struct ComponentInfo {
  std::string id;  // stable external id, e.g. "el.line.4"
  ComponentKind kind = ComponentKind::Line;
  GridClass grid_class = GridClass::Electricity;
  int unit = -1;  // index into the owning container
};

// Scheduled balancing values of the healthy base state. Written by the
// generator after the base solve; recomputed on demand when absent.
struct Schedule {
  bool valid = false;
  double slack_p_w = 0.0;
  double slack_q_var = 0.0;
  double gas_slack_kg_s = 0.0;
  double heat_slack_kg_s = 0.0;
};

struct MultiEnergyNetwork {
  std::string name;
  int schema_version = 1;
  ElectricGrid electricity;
  GasGrid gas;
  HeatGrid heat;
  std::vector<CouplingPoint> coupling_points;
  Schedule schedule;

  // Deterministic registry of every failable component. Rebuilt by
  // finalize(); order: lines, generators, gas pipes, gas sources, water
  // pipes, heat sources, coupling points.
  std::vector<ComponentInfo> registry;

  // Lookup tables from unit id to container index, filled by finalize().
  std::unordered_map<int, int> bus_index;
  std::unordered_map<int, int> gas_junction_index;
  std::unordered_map<int, int> heat_junction_index;

  void finalize();  // builds registry and index maps; throws StructuralError on broken refs

  int bus_at(int id) const;
  int gas_junction_at(int id) const;
  int heat_junction_at(int id) const;

  int component_index(const std::string& component_id) const;  // -1 when unknown
};

// Structural and parameter validation. Returns a list of human-readable
// issues; empty means the network is well-formed.
std::vector<std::string> validate_network(const MultiEnergyNetwork& net);

// Convenience wrapper that throws ValidationError listing every issue.
void require_valid(const MultiEnergyNetwork& net);

// Demand power in watts for the load-shedding objective. Gas demands convert
// through the heating value, heat demands are already powers.
double gas_demand_power_w(const GasGrid& gas, const GasDemand& d);

}  // namespace mesres
