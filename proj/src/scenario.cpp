#include "mesres/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <utility>

#include <json.hpp>

#include "json_reader.hpp"
#include "mesres/graph.hpp"
#include "mesres/io.hpp"
#include "mesres/netmetrics.hpp"
#include "mesres/rng.hpp"

namespace mesres {

using nlohmann::json;
using detail::Reader;

namespace {

constexpr int kSchemaVersion = 1;

std::uint64_t hash_label(const std::string& s) {
  std::uint64_t h = mix64(0xc3110c4eULL ^ s.size());
  for (unsigned char c : s) h = mix64(h ^ c);
  return h;
}

std::string join_issues(const std::vector<std::string>& issues) {
  std::string msg;
  for (const auto& issue : issues) {
    if (!msg.empty()) msg += "; ";
    msg += issue;
  }
  return msg;
}

SynthConfig synth_from_json(const json& j) {
  Reader r(j, "synth");
  SynthConfig cfg;
  cfg.gas_density = r.optional("gas_density", cfg.gas_density);
  cfg.heat_density = r.optional("heat_density", cfg.heat_density);
  cfg.chp_density = r.optional("chp_density", cfg.chp_density);
  cfg.p2h_density = r.optional("p2h_density", cfg.p2h_density);
  cfg.p2g_density = r.optional("p2g_density", cfg.p2g_density);
  if (const json* p = r.find("params")) {
    Reader t(*p, "synth.params");
    ParamTable& pt = cfg.params;
    pt.gas_energy_ratio = t.optional("gas_energy_ratio", pt.gas_energy_ratio);
    pt.heat_energy_ratio = t.optional("heat_energy_ratio", pt.heat_energy_ratio);
    pt.diameters_m = t.optional("diameters_m", pt.diameters_m);
    pt.sizing_headroom = t.optional("sizing_headroom", pt.sizing_headroom);
    pt.gas_drop_budget_pa = t.optional("gas_drop_budget_pa", pt.gas_drop_budget_pa);
    pt.heat_drop_budget_pa = t.optional("heat_drop_budget_pa", pt.heat_drop_budget_pa);
    pt.water_velocity_max_m_s =
        t.optional("water_velocity_max_m_s", pt.water_velocity_max_m_s);
    pt.roughness_m = t.optional("roughness_m", pt.roughness_m);
    pt.insulation_w_mk = t.optional("insulation_w_mk", pt.insulation_w_mk);
    pt.gas_slack_pressure_pa = t.optional("gas_slack_pressure_pa", pt.gas_slack_pressure_pa);
    pt.gas_pressure_min_pa = t.optional("gas_pressure_min_pa", pt.gas_pressure_min_pa);
    pt.gas_pressure_max_pa = t.optional("gas_pressure_max_pa", pt.gas_pressure_max_pa);
    pt.heat_temp_min_k = t.optional("heat_temp_min_k", pt.heat_temp_min_k);
    pt.heat_temp_max_k = t.optional("heat_temp_max_k", pt.heat_temp_max_k);
    pt.source_headroom = t.optional("source_headroom", pt.source_headroom);
    pt.chp_eta_el = t.optional("chp_eta_el", pt.chp_eta_el);
    pt.chp_eta_heat = t.optional("chp_eta_heat", pt.chp_eta_heat);
    pt.p2h_eta = t.optional("p2h_eta", pt.p2h_eta);
    pt.p2g_eta = t.optional("p2g_eta", pt.p2g_eta);
    pt.chp_rating_kg_s = t.optional("chp_rating_kg_s", pt.chp_rating_kg_s);
    pt.p2h_rating_w = t.optional("p2h_rating_w", pt.p2h_rating_w);
    pt.p2g_rating_w = t.optional("p2g_rating_w", pt.p2g_rating_w);
    pt.dispatch_fraction = t.optional("dispatch_fraction", pt.dispatch_fraction);
    t.finish();
  }
  r.finish();
  return cfg;
}

json synth_to_json(const SynthConfig& cfg) {
  const ParamTable& pt = cfg.params;
  json params{{"gas_energy_ratio", pt.gas_energy_ratio},
              {"heat_energy_ratio", pt.heat_energy_ratio},
              {"diameters_m", pt.diameters_m},
              {"sizing_headroom", pt.sizing_headroom},
              {"gas_drop_budget_pa", pt.gas_drop_budget_pa},
              {"heat_drop_budget_pa", pt.heat_drop_budget_pa},
              {"water_velocity_max_m_s", pt.water_velocity_max_m_s},
              {"roughness_m", pt.roughness_m},
              {"insulation_w_mk", pt.insulation_w_mk},
              {"gas_slack_pressure_pa", pt.gas_slack_pressure_pa},
              {"gas_pressure_min_pa", pt.gas_pressure_min_pa},
              {"gas_pressure_max_pa", pt.gas_pressure_max_pa},
              {"heat_temp_min_k", pt.heat_temp_min_k},
              {"heat_temp_max_k", pt.heat_temp_max_k},
              {"source_headroom", pt.source_headroom},
              {"chp_eta_el", pt.chp_eta_el},
              {"chp_eta_heat", pt.chp_eta_heat},
              {"p2h_eta", pt.p2h_eta},
              {"p2g_eta", pt.p2g_eta},
              {"chp_rating_kg_s", pt.chp_rating_kg_s},
              {"p2h_rating_w", pt.p2h_rating_w},
              {"p2g_rating_w", pt.p2g_rating_w},
              {"dispatch_fraction", pt.dispatch_fraction}};
  return json{{"gas_density", cfg.gas_density},
              {"heat_density", cfg.heat_density},
              {"chp_density", cfg.chp_density},
              {"p2h_density", cfg.p2h_density},
              {"p2g_density", cfg.p2g_density},
              {"params", std::move(params)}};
}

EventParams events_from_json(const json& j) {
  Reader r(j, "events");
  EventParams params;
  if (const json* rho = r.find("type_rho")) {
    std::vector<double> values;
    try {
      values = rho->get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("events: field 'type_rho': ") + e.what());
    }
    if (values.size() != std::size_t(kComponentKindCount))
      throw ParseError("events: field 'type_rho': expected " +
                       std::to_string(kComponentKindCount) + " entries");
    std::copy(values.begin(), values.end(), params.type_rho.begin());
  }
  params.p_base = r.optional("p_base", params.p_base);
  params.p_repair = r.optional("p_repair", params.p_repair);
  params.steps = r.optional("steps", params.steps);
  if (const json* s = r.find("storm")) {
    Reader t(*s, "events.storm");
    params.storm.enabled = t.optional("enabled", params.storm.enabled);
    params.storm.elevated_beta = t.optional("elevated_beta", params.storm.elevated_beta);
    params.storm.hop_radius = t.optional("hop_radius", params.storm.hop_radius);
    params.storm.steps_per_hop = t.optional("steps_per_hop", params.storm.steps_per_hop);
    t.finish();
  }
  r.finish();
  return params;
}

json events_to_json(const EventParams& params) {
  return json{{"type_rho", params.type_rho},
              {"p_base", params.p_base},
              {"p_repair", params.p_repair},
              {"steps", params.steps},
              {"storm",
               {{"enabled", params.storm.enabled},
                {"elevated_beta", params.storm.elevated_beta},
                {"hop_radius", params.storm.hop_radius},
                {"steps_per_hop", params.storm.steps_per_hop}}}};
}

StoppingConfig stopping_from_json(const json& j) {
  Reader r(j, "stopping");
  StoppingConfig cfg;
  cfg.process_noise = r.optional("process_noise", cfg.process_noise);
  cfg.noise_window = r.optional("noise_window", cfg.noise_window);
  cfg.delta_fraction = r.optional("delta_fraction", cfg.delta_fraction);
  cfg.stable_window = r.optional("stable_window", cfg.stable_window);
  cfg.min_events = r.optional("min_events", cfg.min_events);
  cfg.max_events = r.optional("max_events", cfg.max_events);
  r.finish();
  return cfg;
}

json stopping_to_json(const StoppingConfig& cfg) {
  return json{{"process_noise", cfg.process_noise}, {"noise_window", cfg.noise_window},
              {"delta_fraction", cfg.delta_fraction}, {"stable_window", cfg.stable_window},
              {"min_events", cfg.min_events}, {"max_events", cfg.max_events}};
}

FlowOptions flow_from_json(const json& j) {
  Reader r(j, "flow");
  FlowOptions opt;
  opt.tolerance = r.optional("tolerance", opt.tolerance);
  opt.max_iterations = r.optional("max_iterations", opt.max_iterations);
  opt.upwind_eps_kg_s = r.optional("upwind_eps_kg_s", opt.upwind_eps_kg_s);
  opt.abs_eps_kg_s = r.optional("abs_eps_kg_s", opt.abs_eps_kg_s);
  opt.t_reg_kg_s = r.optional("t_reg_kg_s", opt.t_reg_kg_s);
  opt.lp_max_percent = r.optional("lp_max_percent", opt.lp_max_percent);
  r.finish();
  return opt;
}

json flow_to_json(const FlowOptions& opt) {
  return json{{"tolerance", opt.tolerance},
              {"max_iterations", opt.max_iterations},
              {"upwind_eps_kg_s", opt.upwind_eps_kg_s},
              {"abs_eps_kg_s", opt.abs_eps_kg_s},
              {"t_reg_kg_s", opt.t_reg_kg_s},
              {"lp_max_percent", opt.lp_max_percent}};
}

ShedOptions shed_from_json(const json& j) {
  Reader r(j, "shed");
  ShedOptions opt;
  opt.mu_initial = r.optional("mu_initial", opt.mu_initial);
  opt.mu_final = r.optional("mu_final", opt.mu_final);
  opt.mu_shrink = r.optional("mu_shrink", opt.mu_shrink);
  opt.max_iterations = r.optional("max_iterations", opt.max_iterations);
  opt.level_iterations = r.optional("level_iterations", opt.level_iterations);
  opt.kkt_tolerance = r.optional("kkt_tolerance", opt.kkt_tolerance);
  opt.control_reg = r.optional("control_reg", opt.control_reg);
  opt.hessian_floor = r.optional("hessian_floor", opt.hessian_floor);
  opt.boundary_fraction = r.optional("boundary_fraction", opt.boundary_fraction);
  opt.control_snap = r.optional("control_snap", opt.control_snap);
  r.finish();
  return opt;
}

json shed_to_json(const ShedOptions& opt) {
  return json{{"mu_initial", opt.mu_initial},
              {"mu_final", opt.mu_final},
              {"mu_shrink", opt.mu_shrink},
              {"max_iterations", opt.max_iterations},
              {"level_iterations", opt.level_iterations},
              {"kkt_tolerance", opt.kkt_tolerance},
              {"control_reg", opt.control_reg},
              {"hessian_floor", opt.hessian_floor},
              {"boundary_fraction", opt.boundary_fraction},
              {"control_snap", opt.control_snap}};
}

std::string carrier_column(int c) { return carrier_name(static_cast<Carrier>(c)); }

void append_row(std::string& csv, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& cell : cells) {
    if (!first) csv += ',';
    csv += cell;
    first = false;
  }
  csv += '\n';
}

std::string resilience_csv(const ImpactReport& report) {
  std::string csv = "carrier,resilience_w,ci_low_w,ci_high_w\n";
  for (int c = 0; c < kCarrierCount; ++c)
    append_row(csv, {carrier_column(c), format_number(report.resilience[c]),
                     format_number(report.resilience_interval[c][0]),
                     format_number(report.resilience_interval[c][1])});
  return csv;
}

std::string sci_csv(const ImpactReport& report, const MultiEnergyNetwork& net) {
  std::string csv =
      "component,grid_class,carrier,mark,impact,centered,broken_mean_w,healthy_mean_w\n";
  for (std::size_t j = 0; j < report.sci.size(); ++j) {
    const ComponentInfo& info = net.registry[j];
    for (int c = 0; c < kCarrierCount; ++c) {
      const SciEntry& entry = report.sci[j][c];
      append_row(csv, {info.id, grid_class_name(info.grid_class), carrier_column(c),
                       sci_mark_name(entry.mark), format_number(entry.value),
                       format_number(entry.centered()), format_number(entry.broken_mean),
                       format_number(entry.healthy_mean)});
    }
  }
  return csv;
}

std::string matrix_csv(const CarrierImpactMatrix& matrix) {
  std::string csv = "grid_class,carrier,raw_sum,centered_sum,defined,infinite,unobserved\n";
  for (int g = 0; g < kGridClassCount; ++g)
    for (int c = 0; c < kCarrierCount; ++c) {
      const CarrierImpactCell& cell = matrix[g][c];
      append_row(csv, {grid_class_name(static_cast<GridClass>(g)), carrier_column(c),
                       format_number(cell.raw_sum), format_number(cell.centered_sum),
                       std::to_string(cell.defined), std::to_string(cell.infinite),
                       std::to_string(cell.unobserved)});
    }
  return csv;
}

std::string events_csv(const std::vector<RunRecord>& records) {
  std::string csv = "event,step,carrier,shed_w\n";
  for (const RunRecord& rec : records)
    for (std::size_t step = 0; step < rec.step_shed_w.size(); ++step)
      for (int c = 0; c < kCarrierCount; ++c)
        append_row(csv, {std::to_string(rec.event_index), std::to_string(step),
                         carrier_column(c), format_number(rec.step_shed_w[step][c])});
  return csv;
}

std::string nodes_csv(const MetricTable& table) {
  std::string csv = "node,label,betweenness,degree,vitality,disconnects,katz\n";
  for (const NodeMetricsRow& row : table.nodes)
    append_row(csv, {std::to_string(row.node), row.label, format_number(row.betweenness),
                     std::to_string(row.degree), format_number(row.vitality),
                     row.disconnects ? "1" : "0", format_number(row.katz)});
  return csv;
}

std::string edges_csv(const MetricTable& table) {
  std::string csv = "edge,component,betweenness,degree\n";
  for (const EdgeMetricsRow& row : table.edges)
    append_row(csv, {std::to_string(row.edge), row.component,
                     format_number(row.betweenness), std::to_string(row.degree)});
  return csv;
}

std::string groups_csv(const MetricTable& table) {
  std::string csv = "component,betweenness,edges\n";
  for (const GroupMetricsRow& row : table.groups)
    append_row(csv, {row.component, format_number(row.betweenness),
                     std::to_string(row.edges)});
  return csv;
}

std::string correlation_csv(const CorrelationData& data) {
  std::string csv = "component,grid_class,metric,metric_value,carrier,impact,centered\n";
  for (const CorrelationRow& row : data.rows)
    append_row(csv, {row.component, grid_class_name(row.grid_class), row.metric,
                     format_number(row.metric_value), carrier_column(row.carrier),
                     format_number(row.impact), format_number(row.centered)});
  return csv;
}

json manifest_config(const ScenarioConfig& cfg) {
  json j = json::parse(scenario_to_json(cfg, -1));
  j.erase("output_dir");
  j.erase("workers");
  return j;
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario config: ") + e.what());
  }
  Reader r(doc, "scenario");
  const int version = r.required<int>("schema_version");
  if (version != kSchemaVersion)
    throw ParseError("scenario: unsupported schema_version " + std::to_string(version));
  ScenarioConfig cfg;
  cfg.base_grid = r.required<std::string>("base_grid");
  cfg.output_dir = r.optional("output_dir", cfg.output_dir);
  cfg.seed = r.optional("seed", cfg.seed);
  cfg.workers = r.optional("workers", cfg.workers);
  cfg.densities = r.optional("densities", cfg.densities);
  cfg.presets = r.optional("presets", cfg.presets);
  if (const json* emph = r.find("emphasis")) {
    std::vector<double> values;
    try {
      values = emph->get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("scenario: field 'emphasis': ") + e.what());
    }
    if (values.size() != std::size_t(kGridClassCount))
      throw ParseError("scenario: field 'emphasis': expected " +
                       std::to_string(kGridClassCount) + " entries");
    cfg.custom_emphasis = true;
    std::copy(values.begin(), values.end(), cfg.emphasis.begin());
  }
  cfg.sample_gammas = r.optional("sample_gammas", cfg.sample_gammas);
  if (const json* s = r.find("synth")) cfg.synth = synth_from_json(*s);
  if (const json* e = r.find("events")) cfg.events = events_from_json(*e);
  if (const json* s = r.find("stopping")) cfg.stopping = stopping_from_json(*s);
  if (const json* f = r.find("flow")) cfg.flow = flow_from_json(*f);
  if (const json* s = r.find("shed")) cfg.shed = shed_from_json(*s);
  cfg.bootstrap_resamples = r.optional("bootstrap_resamples", cfg.bootstrap_resamples);
  cfg.confidence = r.optional("confidence", cfg.confidence);
  if (const json* k = r.find("katz")) {
    Reader t(*k, "katz");
    cfg.katz_alpha = t.optional("alpha", cfg.katz_alpha);
    cfg.katz_beta = t.optional("beta", cfg.katz_beta);
    t.finish();
  }
  r.finish();
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg, int indent) {
  json j{{"schema_version", kSchemaVersion},
         {"base_grid", cfg.base_grid},
         {"output_dir", cfg.output_dir},
         {"seed", cfg.seed},
         {"workers", cfg.workers},
         {"densities", cfg.densities},
         {"presets", cfg.presets},
         {"sample_gammas", cfg.sample_gammas},
         {"synth", synth_to_json(cfg.synth)},
         {"events", events_to_json(cfg.events)},
         {"stopping", stopping_to_json(cfg.stopping)},
         {"flow", flow_to_json(cfg.flow)},
         {"shed", shed_to_json(cfg.shed)},
         {"bootstrap_resamples", cfg.bootstrap_resamples},
         {"confidence", cfg.confidence},
         {"katz", {{"alpha", cfg.katz_alpha}, {"beta", cfg.katz_beta}}}};
  if (cfg.custom_emphasis) j["emphasis"] = cfg.emphasis;
  return j.dump(indent);
}

std::vector<std::string> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<std::string> issues;
  if (cfg.base_grid.empty()) issues.push_back("base_grid is empty");
  if (cfg.output_dir.empty()) issues.push_back("output_dir is empty");
  if (cfg.workers < 1) issues.push_back("workers must be at least 1");
  if (cfg.densities.empty()) issues.push_back("densities list is empty");
  for (double d : cfg.densities)
    if (!std::isfinite(d) || d < 0.0) {
      issues.push_back("densities must be finite and nonnegative");
      break;
    }
  if (cfg.custom_emphasis) {
    for (double e : cfg.emphasis)
      if (!std::isfinite(e) || e < 0.0) {
        issues.push_back("emphasis entries must be finite and nonnegative");
        break;
      }
  } else if (cfg.presets.empty()) {
    issues.push_back("presets list is empty");
  } else {
    for (const auto& name : cfg.presets) {
      try {
        emphasis_preset(name);
      } catch (const ConfigError&) {
        issues.push_back("unknown preset '" + name + "'");
      }
    }
  }
  for (const auto& issue : validate_synth_config(cfg.synth))
    issues.push_back("synth: " + issue);
  for (const auto& issue : validate_stopping(cfg.stopping))
    issues.push_back("stopping: " + issue);
  if (!(cfg.events.p_base >= 0.0 && cfg.events.p_base <= 1.0))
    issues.push_back("events: p_base must lie in [0, 1]");
  if (!(cfg.events.p_repair >= 0.0 && cfg.events.p_repair <= 1.0))
    issues.push_back("events: p_repair must lie in [0, 1]");
  if (cfg.events.steps < 1) issues.push_back("events: steps must be at least 1");
  for (double rho : cfg.events.type_rho)
    if (!std::isfinite(rho) || rho < 0.0) {
      issues.push_back("events: type_rho entries must be finite and nonnegative");
      break;
    }
  if (!cfg.events.gamma.empty())
    issues.push_back("events: per-component gammas are sampled per cell, not configured");
  if (cfg.bootstrap_resamples < 1) issues.push_back("bootstrap_resamples must be at least 1");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0))
    issues.push_back("confidence must lie in (0, 1)");
  if (!std::isfinite(cfg.katz_alpha) || cfg.katz_alpha < 0.0)
    issues.push_back("katz alpha must be finite and nonnegative");
  if (!std::isfinite(cfg.katz_beta) || cfg.katz_beta <= 0.0)
    issues.push_back("katz beta must be finite and positive");
  return issues;
}

GridEmphasis scenario_emphasis(const ScenarioConfig& cfg, const std::string& preset) {
  if (cfg.custom_emphasis && preset == "custom") return cfg.emphasis;
  return emphasis_preset(preset);
}

std::vector<std::string> scenario_presets(const ScenarioConfig& cfg) {
  if (cfg.custom_emphasis) return {"custom"};
  return cfg.presets;
}

std::string format_number(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

std::string cell_name(double density, const std::string& preset) {
  return preset + "-d" + format_number(density);
}

bool ScenarioOutcome::all_ok() const {
  return std::all_of(cells.begin(), cells.end(),
                     [](const CellResult& c) { return c.ok; });
}

CellResult run_cell(const MultiEnergyNetwork& base, const ScenarioConfig& cfg,
                    double density, const std::string& preset, const std::string& dir) {
  CellResult result;
  result.name = cell_name(density, preset);
  result.density = density;
  result.preset = preset;
  std::filesystem::create_directories(dir);
  try {
    const GridEmphasis emphasis = scenario_emphasis(cfg, preset);
    const std::uint64_t cell_seed = mix64(cfg.seed, hash_label(result.name));
    const std::uint64_t synth_seed = mix64(cell_seed, 1);
    const std::uint64_t gamma_seed = mix64(cell_seed, 2);
    const std::uint64_t mc_seed = mix64(cell_seed, 3);

    SynthConfig synth = cfg.synth;
    synth.chp_density = density;
    synth.p2h_density = density;
    synth.p2g_density = density;
    synth.seed = synth_seed;
    const MultiEnergyNetwork net = generate_mes(base, synth);
    save_network(net, dir + "/network.json");

    MonteCarloConfig mc;
    mc.events = cfg.events;
    mc.events.emphasis = emphasis;
    if (cfg.sample_gammas) mc.events.gamma = sample_component_gammas(net, gamma_seed);
    mc.stopping = cfg.stopping;
    mc.flow = cfg.flow;
    mc.shed = cfg.shed;
    mc.seed = mc_seed;
    mc.workers = cfg.workers;
    mc.bootstrap_resamples = cfg.bootstrap_resamples;
    mc.confidence = cfg.confidence;
    const ImpactReport report = run_monte_carlo(net, mc);

    const SteadyState healthy = solve_multi_energy_flow(net, cfg.flow);
    const WeightedMultigraph graph = build_topology_graph(net, &healthy);
    const MetricTable table = compute_metrics(graph, cfg.katz_alpha, cfg.katz_beta);
    const CorrelationData correlation = export_correlation_data(table, report, net);

    write_text_file(dir + "/r_per_carrier.csv", resilience_csv(report));
    write_text_file(dir + "/sci_per_component.csv", sci_csv(report, net));
    write_text_file(dir + "/carrier_matrix.csv", matrix_csv(report.matrix));
    write_text_file(dir + "/events.csv", events_csv(report.records));
    write_text_file(dir + "/metrics_nodes.csv", nodes_csv(table));
    write_text_file(dir + "/metrics_edges.csv", edges_csv(table));
    write_text_file(dir + "/metrics_groups.csv", groups_csv(table));
    write_text_file(dir + "/correlation.csv", correlation_csv(correlation));
    std::string unmatched;
    for (const auto& note : correlation.unmatched) unmatched += note + "\n";
    write_text_file(dir + "/unmatched.log", unmatched);

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["kind"] = "resilience-cell";
    manifest["cell"] = {{"name", result.name},
                        {"preset", preset},
                        {"density", density},
                        {"emphasis", emphasis}};
    manifest["seeds"] = {{"master", cfg.seed},
                         {"cell", cell_seed},
                         {"synth", synth_seed},
                         {"gammas", gamma_seed},
                         {"montecarlo", mc_seed}};
    manifest["config"] = manifest_config(cfg);
    manifest["network_file"] = "network.json";
    manifest["component_count"] = net.registry.size();
    manifest["event_count"] = report.event_count;
    manifest["stopped_by_rule"] = report.stopping.stopped_by_rule;
    manifest["resilience_w"] = {{"electricity", report.resilience[0]},
                                {"gas", report.resilience[1]},
                                {"heat", report.resilience[2]}};
    manifest["resilience_ci_w"] = {{"electricity", report.resilience_interval[0]},
                                   {"gas", report.resilience_interval[1]},
                                   {"heat", report.resilience_interval[2]}};
    manifest["artifacts"] = {"network.json",      "r_per_carrier.csv",
                             "sci_per_component.csv", "carrier_matrix.csv",
                             "events.csv",        "metrics_nodes.csv",
                             "metrics_edges.csv", "metrics_groups.csv",
                             "correlation.csv",   "unmatched.log"};
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");

    result.ok = true;
    result.event_count = report.event_count;
    result.resilience = report.resilience;
  } catch (const std::exception& e) {
    result.error = e.what();
    write_text_file(dir + "/error.log", result.error + "\n");
  }
  return result;
}

ScenarioOutcome run_scenario(const ScenarioConfig& cfg) {
  const auto issues = validate_scenario(cfg);
  if (!issues.empty()) throw ConfigError("scenario config invalid: " + join_issues(issues));
  const MultiEnergyNetwork base = load_network(cfg.base_grid);
  std::filesystem::create_directories(cfg.output_dir);
  ScenarioOutcome outcome;
  for (double density : cfg.densities)
    for (const std::string& preset : scenario_presets(cfg)) {
      const std::string dir = cfg.output_dir + "/" + cell_name(density, preset);
      outcome.cells.push_back(run_cell(base, cfg, density, preset, dir));
    }
  json cells = json::array();
  for (const CellResult& cell : outcome.cells) {
    json row{{"name", cell.name},     {"density", cell.density},
             {"preset", cell.preset}, {"ok", cell.ok},
             {"error", cell.error},   {"event_count", cell.event_count}};
    row["resilience_w"] = {{"electricity", cell.resilience[0]},
                           {"gas", cell.resilience[1]},
                           {"heat", cell.resilience[2]}};
    cells.push_back(std::move(row));
  }
  write_text_file(cfg.output_dir + "/cells.json", cells.dump(2) + "\n");
  return outcome;
}

}  // namespace mesres
