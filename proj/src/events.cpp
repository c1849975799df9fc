#include "mesres/events.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "mesres/rng.hpp"

namespace mesres {

namespace {

constexpr std::uint64_t kGammaStream = 11;

const std::vector<std::pair<std::string, GridEmphasis>>& preset_table() {
  static const std::vector<std::pair<std::string, GridEmphasis>> table = {
      {"high-electricity", {3, 0, 0, 0}}, {"high-heating", {0, 3, 0, 0}},
      {"high-gas", {0, 0, 3, 0}},         {"high-cp", {0, 0, 0, 3}},
      {"low-overall", {1, 1, 1, 1}},      {"medium-overall", {2, 2, 2, 2}},
  };
  return table;
}

}  // namespace

GridEmphasis emphasis_preset(const std::string& name) {
  for (const auto& [key, value] : preset_table())
    if (key == name) return value;
  std::ostringstream out;
  out << "unknown scenario preset '" << name << "'; known presets:";
  for (const auto& [key, value] : preset_table()) out << " " << key;
  throw ConfigError(out.str());
}

const std::vector<std::string>& emphasis_preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [key, value] : preset_table()) n.push_back(key);
    return n;
  }();
  return names;
}

std::vector<std::string> validate_event_params(const MultiEnergyNetwork& net,
                                               const EventParams& p) {
  std::vector<std::string> issues;
  for (double r : p.type_rho)
    if (!std::isfinite(r) || r < 0.0) issues.push_back("type coefficients must be nonnegative");
  for (double e : p.emphasis)
    if (!std::isfinite(e) || e < 0.0) issues.push_back("grid emphasis must be nonnegative");
  if (!(p.p_base >= 0.0 && p.p_base <= 1.0)) issues.push_back("base probability must be in [0, 1]");
  if (!(p.p_repair >= 0.0 && p.p_repair <= 1.0))
    issues.push_back("repair probability must be in [0, 1]");
  if (p.steps < 1) issues.push_back("an event needs at least one step");
  if (!p.gamma.empty() && p.gamma.size() != net.registry.size())
    issues.push_back("component coefficient vector does not match the registry size");
  for (double g : p.gamma)
    if (!std::isfinite(g) || g < 0.0) issues.push_back("component coefficients must be nonnegative");
  if (p.storm.enabled) {
    if (!std::isfinite(p.storm.elevated_beta) || p.storm.elevated_beta < 0.0)
      issues.push_back("storm amplification must be nonnegative");
    if (p.storm.hop_radius < 0) issues.push_back("storm radius must be nonnegative");
    if (p.storm.steps_per_hop < 1) issues.push_back("storm must advance every >= 1 steps");
  }
  std::sort(issues.begin(), issues.end());
  issues.erase(std::unique(issues.begin(), issues.end()), issues.end());
  return issues;
}

std::vector<double> sample_component_gammas(const MultiEnergyNetwork& net,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(mix64(seed, kGammaStream));
  std::vector<double> gamma(net.registry.size());
  for (double& g : gamma) g = 0.5 + u01(rng);
  return gamma;
}

EventSampler::EventSampler(const MultiEnergyNetwork& net, EventParams params)
    : net_(&net), params_(std::move(params)) {
  if (auto issues = validate_event_params(net, params_); !issues.empty()) {
    std::ostringstream out;
    out << "invalid event parameters:";
    for (const auto& i : issues) out << "\n  - " << i;
    throw ValidationError(out.str());
  }
  static_p_.resize(net.registry.size());
  for (std::size_t j = 0; j < net.registry.size(); ++j) {
    const ComponentInfo& info = net.registry[j];
    const double gamma = params_.gamma.empty() ? 1.0 : params_.gamma[j];
    static_p_[j] = params_.type_rho[std::size_t(info.kind)] * gamma *
                   params_.emphasis[std::size_t(info.grid_class)] * params_.p_base;
  }
  if (!params_.storm.enabled) return;

  graph_ = build_topology_graph(net);
  adj_.resize(graph_.nodes.size());
  for (const MesEdge& e : graph_.edges) {
    adj_[std::size_t(e.from)].push_back(e.to);
    adj_[std::size_t(e.to)].push_back(e.from);
  }
  anchors_.resize(net.registry.size());
  auto anchor = [&](std::size_t j, Carrier c, int unit) {
    const int n = graph_.node_index(c, unit);
    if (n >= 0) anchors_[j].push_back(n);
  };
  for (std::size_t j = 0; j < net.registry.size(); ++j) {
    const ComponentInfo& info = net.registry[j];
    const auto u = std::size_t(info.unit);
    switch (info.kind) {
      case ComponentKind::Line:
        anchor(j, Carrier::Electricity, net.electricity.lines[u].from);
        anchor(j, Carrier::Electricity, net.electricity.lines[u].to);
        break;
      case ComponentKind::Generator:
        anchor(j, Carrier::Electricity, net.electricity.generators[u].bus);
        break;
      case ComponentKind::GasPipe:
        anchor(j, Carrier::Gas, net.gas.pipes[u].from);
        anchor(j, Carrier::Gas, net.gas.pipes[u].to);
        break;
      case ComponentKind::GasSource:
        anchor(j, Carrier::Gas, net.gas.sources[u].junction);
        break;
      case ComponentKind::WaterPipe:
        anchor(j, Carrier::Heat, net.heat.pipes[u].from);
        anchor(j, Carrier::Heat, net.heat.pipes[u].to);
        break;
      case ComponentKind::HeatSource:
        anchor(j, Carrier::Heat, net.heat.sources[u].junction);
        break;
      case ComponentKind::Coupling:
        anchor(j, Carrier::Electricity, net.coupling_points[u].bus);
        break;
    }
  }
}

std::vector<double> EventSampler::step_beta(int step) const {
  std::vector<double> beta(net_->registry.size(), 1.0);
  if (!params_.storm.enabled || graph_.nodes.empty()) return beta;
  const auto center =
      std::size_t(step / params_.storm.steps_per_hop) % graph_.nodes.size();

  std::vector<int> dist(graph_.nodes.size(), -1);
  std::deque<std::size_t> queue{center};
  dist[center] = 0;
  while (!queue.empty()) {
    const std::size_t n = queue.front();
    queue.pop_front();
    if (dist[n] >= params_.storm.hop_radius) continue;
    for (int m : adj_[n])
      if (dist[std::size_t(m)] < 0) {
        dist[std::size_t(m)] = dist[n] + 1;
        queue.push_back(std::size_t(m));
      }
  }
  for (std::size_t j = 0; j < anchors_.size(); ++j)
    for (int n : anchors_[j])
      if (dist[std::size_t(n)] >= 0) {
        beta[j] = params_.storm.elevated_beta;
        break;
      }
  return beta;
}

double EventSampler::failure_probability(int component, int step) const {
  double p = static_p_[std::size_t(component)];
  if (params_.storm.enabled) p *= step_beta(step)[std::size_t(component)];
  return std::clamp(p, 0.0, 1.0);
}

VitalityVector EventSampler::advance(const VitalityVector& prev, int step,
                                     std::mt19937_64& rng) const {
  const std::vector<double> beta = step_beta(step);
  VitalityVector next(prev.size());
  for (std::size_t j = 0; j < prev.size(); ++j) {
    const double p = std::clamp(static_p_[j] * beta[j], 0.0, 1.0);
    const double r = u01(rng);
    if (r < p) next[j] = Vitality::Broken;
    else if (prev[j] == Vitality::Broken)
      next[j] = r < params_.p_repair ? Vitality::Repaired : Vitality::Broken;
    else if (prev[j] == Vitality::Repaired) next[j] = Vitality::Repaired;
    else next[j] = Vitality::Functional;
  }
  return next;
}

Event EventSampler::generate(std::uint64_t seed, std::uint64_t event_index) const {
  std::mt19937_64 rng(mix64(seed, event_index));
  Event ev;
  ev.steps.reserve(std::size_t(params_.steps));
  VitalityVector theta = healthy_vitality(*net_);
  for (int i = 0; i < params_.steps; ++i) {
    theta = advance(theta, i, rng);
    ev.steps.push_back(theta);
  }
  return ev;
}

}  // namespace mesres
