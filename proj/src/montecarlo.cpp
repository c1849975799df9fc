#include "mesres/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <string>
#include <thread>

#include "mesres/rng.hpp"
#include "mesres/vitality.hpp"

namespace mesres {

namespace {

constexpr std::uint64_t kBootstrapStream = 21;

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i) out += "; ";
    out += issues[i];
  }
  return out;
}

SciEntry classify_impact(double broken_mean, double healthy_mean) {
  SciEntry e;
  e.broken_mean = broken_mean;
  e.healthy_mean = healthy_mean;
  if (broken_mean >= healthy_mean) {
    if (healthy_mean > 0.0) {
      e.mark = SciMark::Defined;
      e.value = broken_mean / healthy_mean;
    } else if (broken_mean > 0.0) {
      e.mark = SciMark::PlusInfinite;
    } else {
      e.mark = SciMark::Defined;
      e.value = 1.0;
    }
  } else {
    if (broken_mean > 0.0) {
      e.mark = SciMark::Defined;
      e.value = -(healthy_mean / broken_mean);
    } else {
      e.mark = SciMark::MinusInfinite;
    }
  }
  return e;
}

}  // namespace

std::array<double, kCarrierCount> RunRecord::event_shed_w() const {
  std::array<double, kCarrierCount> sum{};
  for (const auto& step : step_shed_w)
    for (int c = 0; c < kCarrierCount; ++c) sum[c] += step[c];
  return sum;
}

double RunRecord::total_shed_w() const {
  const auto sum = event_shed_w();
  double total = 0.0;
  for (int c = 0; c < kCarrierCount; ++c) total += sum[c];
  return total;
}

std::size_t ShedCache::KeyHash::operator()(const std::vector<int>& key) const {
  std::uint64_t h = mix64(0x5ca1ab1eULL ^ key.size());
  for (int v : key) h = mix64(h ^ static_cast<std::uint32_t>(v));
  return static_cast<std::size_t>(h);
}

bool ShedCache::lookup(const std::vector<int>& broken, Entry& out) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = map_.find(broken);
  if (it == map_.end()) return false;
  out = it->second;
  return true;
}

void ShedCache::store(const std::vector<int>& broken, const Entry& entry) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (map_.size() >= max_entries_ && map_.find(broken) == map_.end()) return;
  map_[broken] = entry;
}

std::size_t ShedCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return map_.size();
}

RunRecord simulate_event(const MultiEnergyNetwork& net, const Event& event,
                         std::uint64_t event_index, const FlowOptions& flow_options,
                         const ShedOptions& shed_options, ShedCache* cache) {
  RunRecord rec;
  rec.event_index = event_index;
  const std::size_t steps = event.steps.size();
  rec.step_shed_w.reserve(steps);
  rec.broken.reserve(steps);
  rec.step_status.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const VitalityVector& theta = event.steps[i];
    std::vector<int> broken;
    for (std::size_t j = 0; j < theta.size(); ++j)
      if (theta[j] == Vitality::Broken) broken.push_back(static_cast<int>(j));

    std::array<double, kCarrierCount> shed{};
    ShedStatus status = ShedStatus::Optimal;
    if (!broken.empty()) {
      ShedCache::Entry entry;
      if (cache && cache->lookup(broken, entry)) {
        shed = entry.shed_w;
        status = entry.status;
      } else {
        try {
          const DegradedNetwork degraded = apply_vitality(net, theta);
          const SheddingSolution sol =
              solve_load_shedding(degraded, flow_options, shed_options);
          for (int c = 0; c < kCarrierCount; ++c) shed[c] = sol.shed_w[c];
          status = sol.status;
        } catch (const Error& e) {
          throw SimulationError("event " + std::to_string(event_index) + " step " +
                                std::to_string(i) + ": " + e.what());
        }
        if (cache) cache->store(broken, {shed, status});
      }
    }
    rec.step_shed_w.push_back(shed);
    rec.broken.push_back(std::move(broken));
    rec.step_status.push_back(status);
  }
  return rec;
}

std::array<double, kCarrierCount> resilience_overall(const std::vector<RunRecord>& records) {
  if (records.empty()) throw ConfigError("resilience needs at least one recorded event");
  std::array<double, kCarrierCount> sum{};
  for (const auto& rec : records) {
    const auto ev = rec.event_shed_w();
    for (int c = 0; c < kCarrierCount; ++c) sum[c] += ev[c];
  }
  for (int c = 0; c < kCarrierCount; ++c) sum[c] /= double(records.size());
  return sum;
}

std::array<double, 2> bootstrap_mean_interval(const std::vector<double>& samples,
                                              double confidence, int resamples,
                                              std::uint64_t seed) {
  if (samples.empty()) throw ConfigError("bootstrap needs at least one sample");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw ConfigError("bootstrap confidence must lie in (0, 1)");
  if (resamples < 1) throw ConfigError("bootstrap needs at least one resample");
  const std::size_t n = samples.size();
  std::mt19937_64 engine(mix64(seed, kBootstrapStream));
  std::vector<double> means(resamples);
  for (int b = 0; b < resamples; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += samples[static_cast<std::size_t>(u01(engine) * double(n))];
    means[b] = acc / double(n);
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double p) {
    const double pos = p * double(resamples - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min<std::size_t>(lo + 1, resamples - 1);
    const double frac = pos - double(lo);
    return means[lo] + (means[hi] - means[lo]) * frac;
  };
  const double tail = (1.0 - confidence) / 2.0;
  return {quantile(tail), quantile(1.0 - tail)};
}

const char* sci_mark_name(SciMark mark) {
  switch (mark) {
    case SciMark::Defined: return "defined";
    case SciMark::NotObserved: return "not-observed";
    case SciMark::PlusInfinite: return "plus-infinite";
    case SciMark::MinusInfinite: return "minus-infinite";
  }
  return "unknown";
}

double SciEntry::centered() const {
  if (mark != SciMark::Defined) return 0.0;
  return value >= 0.0 ? value - 1.0 : value + 1.0;
}

SciEntry single_component_impact(const std::vector<RunRecord>& records, int component,
                                 int carrier) {
  if (records.empty()) throw ConfigError("component impact needs at least one event");
  if (component < 0) throw ConfigError("component index must be non-negative");
  if (carrier < 0 || carrier >= kCarrierCount) throw ConfigError("carrier out of range");
  double in_sum = 0.0;
  double out_sum = 0.0;
  std::size_t in_events = 0;
  for (const auto& rec : records) {
    bool touched = false;
    for (std::size_t i = 0; i < rec.step_shed_w.size(); ++i) {
      const bool is_broken =
          std::binary_search(rec.broken[i].begin(), rec.broken[i].end(), component);
      if (is_broken) {
        in_sum += rec.step_shed_w[i][carrier];
        touched = true;
      } else {
        out_sum += rec.step_shed_w[i][carrier];
      }
    }
    if (touched) ++in_events;
  }
  if (in_events == 0) return SciEntry{};
  return classify_impact(in_sum / double(in_events), out_sum / double(records.size()));
}

SciTable component_impacts(const std::vector<RunRecord>& records,
                           const MultiEnergyNetwork& net) {
  if (records.empty()) throw ConfigError("component impacts need at least one event");
  const std::size_t m = net.registry.size();
  SciTable table(m);

  std::array<double, kCarrierCount> grand{};
  std::vector<std::array<double, kCarrierCount>> in_sum(m, std::array<double, kCarrierCount>{});
  std::vector<std::size_t> in_events(m, 0);
  std::vector<std::array<double, kCarrierCount>> event_acc(m, std::array<double, kCarrierCount>{});
  std::vector<int> touched;
  for (const auto& rec : records) {
    touched.clear();
    for (std::size_t i = 0; i < rec.step_shed_w.size(); ++i) {
      const auto& shed = rec.step_shed_w[i];
      for (int c = 0; c < kCarrierCount; ++c) grand[c] += shed[c];
      for (int j : rec.broken[i]) {
        if (j < 0 || static_cast<std::size_t>(j) >= m)
          throw ConfigError("recorded component index outside the registry");
        if (event_acc[j][0] == 0.0 && event_acc[j][1] == 0.0 && event_acc[j][2] == 0.0 &&
            std::find(touched.begin(), touched.end(), j) == touched.end())
          touched.push_back(j);
        for (int c = 0; c < kCarrierCount; ++c) event_acc[j][c] += shed[c];
      }
    }
    for (int j : touched) {
      ++in_events[j];
      for (int c = 0; c < kCarrierCount; ++c) {
        in_sum[j][c] += event_acc[j][c];
        event_acc[j][c] = 0.0;
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (in_events[j] == 0) continue;
    for (int c = 0; c < kCarrierCount; ++c) {
      const double in_mean = in_sum[j][c] / double(in_events[j]);
      const double out_mean = (grand[c] - in_sum[j][c]) / double(records.size());
      table[j][c] = classify_impact(in_mean, out_mean);
    }
  }
  return table;
}

CarrierImpactMatrix carrier_grid_impact(const SciTable& sci, const MultiEnergyNetwork& net) {
  if (sci.size() != net.registry.size())
    throw ConfigError("impact table does not match the component registry");
  CarrierImpactMatrix matrix{};
  for (std::size_t j = 0; j < sci.size(); ++j) {
    const int g = static_cast<int>(net.registry[j].grid_class);
    for (int c = 0; c < kCarrierCount; ++c) {
      const SciEntry& e = sci[j][c];
      CarrierImpactCell& cell = matrix[g][c];
      switch (e.mark) {
        case SciMark::Defined:
          cell.raw_sum += e.value;
          cell.centered_sum += e.centered();
          ++cell.defined;
          break;
        case SciMark::NotObserved:
          ++cell.unobserved;
          break;
        case SciMark::PlusInfinite:
        case SciMark::MinusInfinite:
          ++cell.infinite;
          break;
      }
    }
  }
  return matrix;
}

std::vector<std::string> validate_stopping(const StoppingConfig& config) {
  std::vector<std::string> issues;
  if (!(config.process_noise > 0.0) || !std::isfinite(config.process_noise))
    issues.push_back("process noise must be positive and finite");
  if (config.noise_window < 2) issues.push_back("noise window needs at least two events");
  if (!(config.delta_fraction >= 0.0) || !std::isfinite(config.delta_fraction))
    issues.push_back("innovation tolerance must be non-negative and finite");
  if (config.stable_window < 1) issues.push_back("stable window needs at least one event");
  if (config.min_events < 1) issues.push_back("event floor must be at least one");
  if (config.max_events < config.min_events)
    issues.push_back("event cap must not undercut the event floor");
  return issues;
}

KalmanStopper::KalmanStopper(const StoppingConfig& config) : cfg_(config) {
  const auto issues = validate_stopping(config);
  if (!issues.empty()) throw ConfigError("invalid stopping rule: " + join_issues(issues));
}

bool KalmanStopper::observe(double event_total) {
  ++count_;
  const double prev_mean = mean_;
  mean_ += (event_total - mean_) / double(count_);
  if (count_ <= cfg_.noise_window) {
    welford_m2_ += (event_total - prev_mean) * (event_total - mean_);
    if (count_ >= 2) obs_noise_ = welford_m2_ / double(count_ - 1);
  }
  const double z = mean_;
  if (count_ == 1) {
    state_ = z;
    variance_ = cfg_.process_noise;
    innovation_ = 0.0;
    stable_ = 0;
  } else {
    variance_ += cfg_.process_noise;
    innovation_ = z - state_;
    const double gain = variance_ / (variance_ + obs_noise_);
    state_ += gain * innovation_;
    variance_ *= 1.0 - gain;
    const double tolerance = cfg_.delta_fraction * std::abs(mean_);
    stable_ = std::abs(innovation_) <= tolerance ? stable_ + 1 : 0;
  }
  if (count_ >= cfg_.min_events && stable_ >= cfg_.stable_window) return true;
  return count_ >= cfg_.max_events;
}

std::vector<std::string> validate_monte_carlo(const MonteCarloConfig& config) {
  std::vector<std::string> issues = validate_stopping(config.stopping);
  if (config.workers < 1) issues.push_back("worker count must be at least one");
  if (config.bootstrap_resamples < 1)
    issues.push_back("bootstrap needs at least one resample");
  if (!(config.confidence > 0.0 && config.confidence < 1.0))
    issues.push_back("confidence level must lie in (0, 1)");
  return issues;
}

ImpactReport run_monte_carlo(const MultiEnergyNetwork& net, const MonteCarloConfig& config) {
  const auto issues = validate_monte_carlo(config);
  if (!issues.empty())
    throw ConfigError("invalid simulation config: " + join_issues(issues));
  const EventSampler sampler(net, config.events);
  KalmanStopper stopper(config.stopping);
  ShedCache cache;

  auto run_one = [&](std::uint64_t index) {
    const Event event = sampler.generate(config.seed, index);
    return simulate_event(net, event, index, config.flow, config.shed, &cache);
  };

  ImpactReport report;
  const int batch = config.workers;
  std::uint64_t next = 0;
  bool done = false;
  while (!done) {
    std::vector<RunRecord> slots(batch);
    if (batch == 1) {
      slots[0] = run_one(next);
    } else {
      std::vector<std::exception_ptr> errors(batch);
      std::vector<std::thread> pool;
      pool.reserve(batch);
      for (int t = 0; t < batch; ++t)
        pool.emplace_back([&, t] {
          try {
            slots[t] = run_one(next + std::uint64_t(t));
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    }
    for (int t = 0; t < batch && !done; ++t) {
      const double total = slots[t].total_shed_w();
      report.records.push_back(std::move(slots[t]));
      done = stopper.observe(total);
      report.stopping.running_mean.push_back(stopper.running_mean());
      report.stopping.innovation.push_back(stopper.innovation());
    }
    next += std::uint64_t(batch);
  }
  report.event_count = report.records.size();
  report.stopping.stopped_by_rule =
      stopper.count() >= config.stopping.min_events &&
      stopper.stable_run() >= config.stopping.stable_window;

  report.resilience = resilience_overall(report.records);
  for (int c = 0; c < kCarrierCount; ++c) {
    std::vector<double> samples(report.records.size());
    for (std::size_t e = 0; e < report.records.size(); ++e)
      samples[e] = report.records[e].event_shed_w()[c];
    report.resilience_interval[c] =
        bootstrap_mean_interval(samples, config.confidence, config.bootstrap_resamples,
                                mix64(config.seed, kBootstrapStream + 1 + c));
  }
  report.sci = component_impacts(report.records, net);
  report.matrix = carrier_grid_impact(report.sci, net);
  return report;
}

}  // namespace mesres
