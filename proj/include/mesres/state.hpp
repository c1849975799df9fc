#pragma once

#include <complex>
#include <vector>

namespace mesres {

// Solved operating point of a multi-energy network. Vectors are indexed by
// container position in the owning MultiEnergyNetwork; entries of dead
// elements (dropped islands, broken branches) hold NaN.
struct SteadyState {
  // electricity
  std::vector<std::complex<double>> bus_voltage_pu;
  std::vector<std::complex<double>> line_flow_from_va;  // S_ij at the from end, SI
  std::vector<std::complex<double>> line_flow_to_va;    // S_ji at the to end, SI
  std::complex<double> slack_injection_va{0.0, 0.0};

  // gas
  std::vector<double> gas_pressure_pa;
  std::vector<double> gas_pipe_flow_kg_s;  // positive from -> to
  double gas_slack_flow_kg_s = 0.0;

  // heat
  std::vector<double> heat_pressure_pa;
  std::vector<double> heat_temperature_k;
  std::vector<double> water_pipe_flow_kg_s;
  std::vector<double> water_pipe_loss_w;  // signed, negative when losing heat
  double heat_slack_flow_kg_s = 0.0;

  // coupling points: realized input level and carrier-side powers
  std::vector<double> cp_input;      // CHP gas kg/s, P2H/P2G electric W
  std::vector<double> cp_p_el_w;     // electric side, positive = injection
  std::vector<double> cp_heat_w;     // heat side injection
  std::vector<double> cp_gas_kg_s;   // gas side, positive = injection, negative = consumption

  // solver report
  bool converged = false;
  int iterations = 0;
  double residual_inf = 0.0;
};

}  // namespace mesres
