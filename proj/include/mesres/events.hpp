#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mesres/graph.hpp"
#include "mesres/network.hpp"
#include "mesres/vitality.hpp"

namespace mesres {

// Per-grid-class failure emphasis, indexed by GridClass (electricity, heat,
// gas, coupling).
using GridEmphasis = std::array<double, kGridClassCount>;

// Named emphasis rows: high-electricity, high-heating, high-gas, high-cp,
// low-overall, medium-overall. Throws ConfigError on an unknown name.
GridEmphasis emphasis_preset(const std::string& name);
const std::vector<std::string>& emphasis_preset_names();

// Moving spatial amplification: components whose anchor nodes lie within
// hop_radius of a center that advances through the coupled topology graph
// see beta = elevated_beta, everything else beta = 1.
struct StormModel {
  bool enabled = false;
  double elevated_beta = 3.0;
  int hop_radius = 2;
  int steps_per_hop = 1;  // center advances every this many steps
};

// Knobs of the per-component failure probability
//   p = type_coefficient * component_gamma * beta * emphasis * p_base
// clamped to [0, 1], and of the repair dynamics.
struct EventParams {
  std::array<double, kComponentKindCount> type_rho{1, 1, 1, 1, 1, 1, 1};
  std::vector<double> gamma;  // per registry component; empty means all 1
  GridEmphasis emphasis{1, 1, 1, 1};
  double p_base = 0.05;
  double p_repair = 0.25;  // per-step probability that a broken unit returns
  int steps = 24;
  StormModel storm;
};

std::vector<std::string> validate_event_params(const MultiEnergyNetwork& net,
                                               const EventParams& params);

// Per-component fragility factors, one per registry entry, drawn uniformly
// from [0.5, 1.5]. Sampled once per network and then held constant.
std::vector<double> sample_component_gammas(const MultiEnergyNetwork& net,
                                            std::uint64_t seed);

// One sampled event: the component vitality vector at each of the n steps,
// indexed like net.registry. Step 0 of the underlying chain (all functional)
// is not stored.
struct Event {
  std::vector<VitalityVector> steps;
};

// Samples events over a fixed network. One uniform draw decides each
// (component, step): a draw below the failure probability breaks the unit;
// otherwise a previously broken unit returns to service (as Repaired) when
// the same draw is below the repair probability, else stays broken;
// everything else keeps running. Repaired units fail like functional ones.
class EventSampler {
 public:
  // net must outlive the sampler; throws ValidationError on bad params.
  EventSampler(const MultiEnergyNetwork& net, EventParams params);

  const EventParams& params() const { return params_; }

  // Failure probability of one registry component at one step (steps count
  // from 0), after clamping.
  double failure_probability(int component, int step) const;

  VitalityVector advance(const VitalityVector& prev, int step,
                         std::mt19937_64& rng) const;

  // Deterministic event for a (seed, index) pair: n advances from the
  // all-functional state.
  Event generate(std::uint64_t seed, std::uint64_t event_index) const;

 private:
  const MultiEnergyNetwork* net_;
  EventParams params_;
  std::vector<double> static_p_;  // step-independent probability factors
  WeightedMultigraph graph_;      // storm geometry, built when enabled
  std::vector<std::vector<int>> adj_;      // undirected node adjacency
  std::vector<std::vector<int>> anchors_;  // component -> graph node indices
  std::vector<double> step_beta(int step) const;
};

}  // namespace mesres
