#pragma once

#include <vector>

#include "mesres/flow.hpp"
#include "mesres/vitality.hpp"

namespace mesres {

enum class ShedStatus : std::uint8_t {
  Optimal = 0,   // interior-point iteration converged
  Fallback = 1,  // optimizer gave up; everything sheddable is shed
};

const char* shed_status_name(ShedStatus s);

struct ShedOptions {
  double mu_initial = 1e-2;
  double mu_final = 1e-9;
  double mu_shrink = 0.2;
  int max_iterations = 300;       // total Newton-KKT steps across all levels
  int level_iterations = 8;       // cap per barrier level
  double kkt_tolerance = 1e-7;    // final stationarity and feasibility target
  double control_reg = 1e-7;      // quadratic pull toward the schedule
  double hessian_floor = 1e-8;
  double boundary_fraction = 0.995;
  double control_snap = 1e-6;     // snap distance to the 0/1 control bounds
};

// Minimal-shedding operating point of a degraded network. Shed power per
// carrier counts both the optimized shedding of live demands and the demand
// dropped outright with dead network parts. Requires a valid reference
// schedule on the network (ConfigError otherwise).
struct SheddingSolution {
  ShedStatus status = ShedStatus::Fallback;
  double shed_w[kCarrierCount] = {0.0, 0.0, 0.0};
  std::vector<double> controls;  // final control vector, boundary-snapped
  SteadyState state;             // realized flows; fallback leaves converged=false
  int iterations = 0;
  double kkt_error = 0.0;

  double total_shed_w() const { return shed_w[0] + shed_w[1] + shed_w[2]; }
};

SheddingSolution solve_load_shedding(const DegradedNetwork& degraded,
                                     const FlowOptions& flow_options = {},
                                     const ShedOptions& options = {});

}  // namespace mesres
