#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mesres/events.hpp"
#include "mesres/flow.hpp"
#include "mesres/montecarlo.hpp"
#include "mesres/network.hpp"
#include "mesres/shed.hpp"
#include "mesres/synth.hpp"

namespace mesres {

// One experiment matrix over a base electric grid: every (coupling density,
// failure emphasis) cell generates its network, runs the Monte Carlo study,
// and writes one artifact directory. All solver and sampler defaults are
// surfaced here so a single config file pins the whole run.
struct ScenarioConfig {
  std::string base_grid;  // path of the electric base network file
  std::string output_dir = "results";
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<double> densities{1.0};
  std::vector<std::string> presets{"low-overall"};
  bool custom_emphasis = false;       // replaces the preset list with one row
  GridEmphasis emphasis{1, 1, 1, 1};  // used when custom_emphasis is set
  bool sample_gammas = true;          // per-component fragility factors
  SynthConfig synth;                  // coupling densities overridden per cell
  EventParams events;                 // emphasis overridden per cell
  StoppingConfig stopping;
  FlowOptions flow;
  ShedOptions shed;
  int bootstrap_resamples = 1000;
  double confidence = 0.95;
  double katz_alpha = 0.1;
  double katz_beta = 1.0;
};

ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg, int indent = 2);

// Semantic issues of the config values; file accessibility is checked when
// the run starts. Empty means runnable.
std::vector<std::string> validate_scenario(const ScenarioConfig& cfg);

// Emphasis row of one cell column: a named preset, or the custom row.
GridEmphasis scenario_emphasis(const ScenarioConfig& cfg, const std::string& preset);

// Preset columns of the matrix ({"custom"} when custom_emphasis).
std::vector<std::string> scenario_presets(const ScenarioConfig& cfg);

// %.12g rendering used by every table artifact.
std::string format_number(double value);

// Directory name of one cell, e.g. "high-gas-d1.5".
std::string cell_name(double density, const std::string& preset);

struct CellResult {
  std::string name;
  double density = 0.0;
  std::string preset;
  bool ok = false;
  std::string error;  // failure message when !ok
  std::size_t event_count = 0;
  std::array<double, kCarrierCount> resilience{};
};

struct ScenarioOutcome {
  std::vector<CellResult> cells;
  bool all_ok() const;
};

// Generates the cell network, runs the study, and writes the artifact set
// (manifest, network, resilience, impact, matrix, metric, correlation and
// event tables) into dir. Failures are caught, written to error.log in dir,
// and reported in the result; partial artifacts stay in place.
CellResult run_cell(const MultiEnergyNetwork& base, const ScenarioConfig& cfg,
                    double density, const std::string& preset, const std::string& dir);

// Full density x preset sweep under output_dir, cells in listing order. A
// failed cell is recorded and the sweep continues. Writes cells.json at the
// top level. Throws ConfigError on an invalid config.
ScenarioOutcome run_scenario(const ScenarioConfig& cfg);

}  // namespace mesres
