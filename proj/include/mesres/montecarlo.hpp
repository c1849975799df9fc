#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "mesres/events.hpp"
#include "mesres/flow.hpp"
#include "mesres/network.hpp"
#include "mesres/shed.hpp"

namespace mesres {

struct SimulationError : Error {
  using Error::Error;
};

// One simulated failure event: per-step shed power per carrier together with
// the component sets that were out of service at each step.
struct RunRecord {
  std::uint64_t event_index = 0;
  std::vector<std::array<double, kCarrierCount>> step_shed_w;  // [step][carrier]
  std::vector<std::vector<int>> broken;  // [step] -> sorted registry indices
  std::vector<ShedStatus> step_status;

  std::array<double, kCarrierCount> event_shed_w() const;
  double total_shed_w() const;
};

// Memo for shedding solutions keyed by the sorted broken-component set. The
// optimum depends on the network only through which components are out of
// service, so identical sets across steps and events share one solve.
class ShedCache {
 public:
  explicit ShedCache(std::size_t max_entries = 8192) : max_entries_(max_entries) {}

  struct Entry {
    std::array<double, kCarrierCount> shed_w{};
    ShedStatus status = ShedStatus::Fallback;
  };

  bool lookup(const std::vector<int>& broken, Entry& out);
  void store(const std::vector<int>& broken, const Entry& entry);
  std::size_t size() const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const;
  };

  std::size_t max_entries_;
  mutable std::mutex mutex_;
  std::unordered_map<std::vector<int>, Entry, KeyHash> map_;
};

// Runs the per-step shedding solves for one event. Healthy steps short-circuit
// to zero shed. Solver failures are rethrown as SimulationError with the event
// index and step prepended.
RunRecord simulate_event(const MultiEnergyNetwork& net, const Event& event,
                         std::uint64_t event_index = 0,
                         const FlowOptions& flow_options = {},
                         const ShedOptions& shed_options = {},
                         ShedCache* cache = nullptr);

// Mean over events of the per-event shed energy proxy (step-summed shed
// power), one entry per carrier. Rejects an empty record set.
std::array<double, kCarrierCount> resilience_overall(const std::vector<RunRecord>& records);

// Percentile bootstrap interval for the mean of `samples`.
std::array<double, 2> bootstrap_mean_interval(const std::vector<double>& samples,
                                              double confidence, int resamples,
                                              std::uint64_t seed);

enum class SciMark : std::uint8_t {
  Defined = 0,        // finite ratio, magnitude >= 1
  NotObserved = 1,    // component never broke in any recorded event
  PlusInfinite = 2,   // shed observed only while the component was broken
  MinusInfinite = 3,  // shed observed only while the component was healthy
};

const char* sci_mark_name(SciMark mark);

// Signed impact ratio of one component on one carrier. broken_mean averages
// the shed during the component's broken steps over the events containing a
// failure of it; healthy_mean averages the shed during its healthy steps over
// all events. The value is the larger mean over the smaller, negated when the
// healthy mean dominates, so the magnitude is never below one. A component
// with equal zero means scores +1; a zero denominator yields an infinite mark.
struct SciEntry {
  SciMark mark = SciMark::NotObserved;
  double value = 0.0;  // meaningful only when mark == Defined
  double broken_mean = 0.0;
  double healthy_mean = 0.0;

  double centered() const;  // sign(value) * (|value| - 1), 0 unless Defined
};

SciEntry single_component_impact(const std::vector<RunRecord>& records, int component,
                                 int carrier);

using SciTable = std::vector<std::array<SciEntry, kCarrierCount>>;

// Impact table for every registry component and carrier in one pass.
SciTable component_impacts(const std::vector<RunRecord>& records,
                           const MultiEnergyNetwork& net);

// Aggregated impact of one component class on one carrier: the sum of the
// defined SCI values of the class members. Infinite entries are excluded from
// both sums and counted; unobserved components contribute zero.
struct CarrierImpactCell {
  double raw_sum = 0.0;
  double centered_sum = 0.0;
  int defined = 0;
  int infinite = 0;
  int unobserved = 0;
};

using CarrierImpactMatrix =
    std::array<std::array<CarrierImpactCell, kCarrierCount>, kGridClassCount>;

CarrierImpactMatrix carrier_grid_impact(const SciTable& sci, const MultiEnergyNetwork& net);

// Convergence rule for the event loop: a scalar Kalman filter with random-walk
// dynamics tracks the running mean of the per-event total shed. The loop stops
// once the innovation magnitude stays within delta_fraction of the running
// mean for stable_window consecutive events and at least min_events ran.
// Observation noise is estimated from the first noise_window event totals.
struct StoppingConfig {
  double process_noise = 1e-4;
  int noise_window = 200;
  double delta_fraction = 0.01;
  int stable_window = 100;
  int min_events = 1000;
  int max_events = 100000;
};

std::vector<std::string> validate_stopping(const StoppingConfig& config);

class KalmanStopper {
 public:
  explicit KalmanStopper(const StoppingConfig& config = {});

  // Feeds one per-event total; returns true once the rule says stop.
  bool observe(double event_total);

  int count() const { return count_; }
  double running_mean() const { return mean_; }
  double innovation() const { return innovation_; }
  double estimate() const { return state_; }
  int stable_run() const { return stable_; }
  const StoppingConfig& config() const { return cfg_; }

 private:
  StoppingConfig cfg_;
  int count_ = 0;
  double mean_ = 0.0;
  double welford_m2_ = 0.0;
  double obs_noise_ = 0.0;
  double state_ = 0.0;
  double variance_ = 0.0;
  double innovation_ = 0.0;
  int stable_ = 0;
};

struct StoppingTrace {
  std::vector<double> running_mean;  // one entry per event, index order
  std::vector<double> innovation;
  bool stopped_by_rule = false;  // false when the event cap cut the loop
};

struct MonteCarloConfig {
  EventParams events;
  StoppingConfig stopping;
  FlowOptions flow;
  ShedOptions shed;
  std::uint64_t seed = 0;
  int workers = 1;
  int bootstrap_resamples = 1000;
  double confidence = 0.95;
};

std::vector<std::string> validate_monte_carlo(const MonteCarloConfig& config);

struct ImpactReport {
  std::array<double, kCarrierCount> resilience{};  // W, mean per-event step sum
  std::array<std::array<double, 2>, kCarrierCount> resilience_interval{};
  SciTable sci;
  CarrierImpactMatrix matrix{};
  std::size_t event_count = 0;
  StoppingTrace stopping;
  std::vector<RunRecord> records;  // index order, one per counted event
};

// Samples events deterministically by index, simulates them (in index-ordered
// batches of `workers` when workers > 1), and applies the stopping rule in
// index order, so the report is identical for any worker count.
ImpactReport run_monte_carlo(const MultiEnergyNetwork& net, const MonteCarloConfig& config);

}  // namespace mesres
