#include <cmath>
#include <limits>

#include "doctest.h"
#include "fixtures.hpp"
#include "mesres/shed.hpp"

using namespace mesres;

namespace {

// Exhaustive search over two control axes on a 1/steps lattice, keeping the
// best objective whose solved state satisfies every operating bound. Serves
// as an oracle for the interior-point result.
double lattice_best_w(const DegradedNetwork& d, const FlowOptions& fopt, int c0, int c1,
                      int steps = 100) {
  EquationSystem sys(d, fopt);
  Eigen::VectorXd u = sys.scheduled_controls();
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; b <= steps; ++b) {
      u[c0] = static_cast<double>(a) / steps;
      u[c1] = static_cast<double>(b) / steps;
      Eigen::VectorXd xs;
      try {
        solve_multi_energy_flow(d, fopt, u, nullptr, &xs);
      } catch (const Error&) {
        continue;
      }
      Eigen::VectorXd h;
      sys.eval_inequalities(xs, u, h);
      if (h.size() > 0 && h.minCoeff() < -1e-9) continue;
      best = std::min(best, sys.objective_w(u));
    }
  }
  return best;
}

int control_index(const EquationSystem& sys, EquationSystem::Control::Kind kind, int unit) {
  for (std::size_t i = 0; i < sys.controls().size(); ++i)
    if (sys.controls()[i].kind == kind && sys.controls()[i].unit == unit)
      return static_cast<int>(i);
  return -1;
}

// Re-solves at the returned controls and checks every bound holds there.
void check_feasible(const DegradedNetwork& d, const FlowOptions& fopt,
                    const SheddingSolution& sol) {
  EquationSystem sys(d, fopt);
  Eigen::VectorXd u(sol.controls.size());
  for (std::size_t i = 0; i < sol.controls.size(); ++i) u[i] = sol.controls[i];
  Eigen::VectorXd xs;
  solve_multi_energy_flow(d, fopt, u, nullptr, &xs);
  Eigen::VectorXd h;
  sys.eval_inequalities(xs, u, h);
  if (h.size() > 0) CHECK(h.minCoeff() >= -1e-6);
}

// Three buses in a chain with the first line too small for the full load.
MultiEnergyNetwork line_limited_net() {
  MultiEnergyNetwork net;
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  el.buses = {{0, 0.9, 1.1, 0.0, 0.0}, {1, 0.9, 1.1, 0.0, 0.0}, {2, 0.9, 1.1, 0.0, 0.0}};
  el.lines = {{0, 0, 1, 0.5, 0.9, 0.0, 1.0, 0.0, 0.8e6, 1.0},
              {1, 1, 2, 0.4, 0.8, 0.0, 1.0, 0.0, 0.6e6, 1.0}};
  el.demands = {{0, 1, 600e3, 180e3}, {1, 2, 500e3, 150e3}};
  net.schedule = {true, 2e6, 1e6, 0.0, 0.0};
  net.finalize();
  return net;
}

// Two gas junctions behind long pipes with a tight lower pressure bound.
MultiEnergyNetwork pressure_limited_net() {
  MultiEnergyNetwork net;
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  el.buses = {{0, 0.9, 1.1, 0.0, 0.0}};
  auto& gas = net.gas;
  gas.slack_junction = 0;
  gas.slack_pressure_pa = 40e5;
  gas.junctions = {{0, 36e5, 44e5}, {1, 39e5, 44e5}, {2, 39e5, 44e5}};
  gas.pipes = {{0, 0, 1, 1500.0, 0.3, 0.3, 1e-4}, {1, 1, 2, 1500.0, 0.3, 0.3, 1e-4}};
  gas.sources = {{0, 0, 1.0}};
  gas.demands = {{0, 1, 0.006}, {1, 2, 0.004}};
  net.schedule = {true, 1e5, 2e4, 0.02, 0.0};
  net.finalize();
  return net;
}

// Heat grid whose slack plant is smaller than the connected demand.
MultiEnergyNetwork capacity_limited_net() {
  MultiEnergyNetwork net;
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  el.buses = {{0, 0.9, 1.1, 0.0, 0.0}};
  auto& heat = net.heat;
  heat.slack_junction = 0;
  heat.junctions = {{0, 328.15, 368.15}, {1, 328.15, 368.15}, {2, 328.15, 368.15}};
  heat.pipes = {{0, 0, 1, 400.0, 0.2, 0.2, 1e-4, 0.035}, {1, 1, 2, 300.0, 0.15, 0.15, 1e-4, 0.035}};
  heat.sources = {{0, 0, 1.0}};
  heat.demands = {{0, 1, 200e3}, {1, 2, 100e3}};
  net.schedule = {true, 1e5, 2e4, 0.0, 1.0};
  net.finalize();
  return net;
}

// One remote bus whose demand exceeds the import cap; a local generator can
// cover the gap without shedding.
MultiEnergyNetwork import_limited_net() {
  MultiEnergyNetwork net;
  auto& el = net.electricity;
  el.base_va = 1e6;
  el.base_v = 20e3;
  el.slack_bus = 0;
  el.buses = {{0, 0.9, 1.1, 0.0, 0.0}, {1, 0.9, 1.1, 0.0, 0.0}};
  el.lines = {{0, 0, 1, 2.0, 4.0, 0.0, 1.0, 0.0, 2e6, 1.0}};
  el.generators = {{0, 1, 100e3, 20e3, 400e3}};
  el.demands = {{0, 1, 500e3, 100e3}};
  net.schedule = {true, 250e3, 150e3, 0.0, 0.0};
  net.finalize();
  return net;
}

void write_schedule_from_solve(MultiEnergyNetwork& net) {
  const SteadyState st = solve_multi_energy_flow(net);
  net.schedule = {true, st.slack_injection_va.real(), st.slack_injection_va.imag(),
                  st.gas_slack_flow_kg_s, st.heat_slack_flow_kg_s};
}

}  // namespace

TEST_SUITE("shed") {
  TEST_CASE("requires a reference schedule") {
    auto net = mesres::testing::toy_mes();
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    CHECK_THROWS_AS(solve_load_shedding(d), ConfigError);
  }

  TEST_CASE("line overload shedding matches exhaustive search") {
    auto net = line_limited_net();
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    FlowOptions fopt;
    EquationSystem sys(d, fopt);
    const int c0 = control_index(sys, EquationSystem::Control::Kind::ShedEl, 0);
    const int c1 = control_index(sys, EquationSystem::Control::Kind::ShedEl, 1);
    REQUIRE(c0 >= 0);
    REQUIRE(c1 >= 0);
    const double best = lattice_best_w(d, fopt, c0, c1);
    REQUIRE(std::isfinite(best));
    CHECK(best > 0.0);

    const SheddingSolution sol = solve_load_shedding(d, fopt);
    CHECK(sol.status == ShedStatus::Optimal);
    CHECK(sol.total_shed_w() <= best + 0.002 * 1.1e6);
    CHECK(sol.total_shed_w() >= best - 0.015 * 1.1e6);
    check_feasible(d, fopt, sol);
    // the binding line ends up at its rating
    const double loading = std::abs(sol.state.line_flow_from_va[0]);
    CHECK(loading == doctest::Approx(0.8e6).epsilon(0.01));
  }

  TEST_CASE("gas pressure shedding matches exhaustive search") {
    auto net = pressure_limited_net();
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    FlowOptions fopt;
    EquationSystem sys(d, fopt);
    const int c0 = control_index(sys, EquationSystem::Control::Kind::ShedGas, 0);
    const int c1 = control_index(sys, EquationSystem::Control::Kind::ShedGas, 1);
    REQUIRE(c0 >= 0);
    REQUIRE(c1 >= 0);
    const double best = lattice_best_w(d, fopt, c0, c1);
    REQUIRE(std::isfinite(best));
    CHECK(best > 0.0);

    const SheddingSolution sol = solve_load_shedding(d, fopt);
    CHECK(sol.status == ShedStatus::Optimal);
    const double total = (0.006 + 0.004) * 3.6e6 * 14.0;
    CHECK(sol.total_shed_w() <= best + 0.002 * total);
    CHECK(sol.total_shed_w() >= best - 0.015 * total);
    check_feasible(d, fopt, sol);
    for (double p : sol.state.gas_pressure_pa) CHECK(p >= 39e5 - 1e3);
  }

  TEST_CASE("heat capacity shedding matches exhaustive search and the closed form") {
    auto net = capacity_limited_net();
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    FlowOptions fopt;
    EquationSystem sys(d, fopt);
    const int c0 = control_index(sys, EquationSystem::Control::Kind::ShedHeat, 0);
    const int c1 = control_index(sys, EquationSystem::Control::Kind::ShedHeat, 1);
    REQUIRE(c0 >= 0);
    REQUIRE(c1 >= 0);
    const double best = lattice_best_w(d, fopt, c0, c1);
    REQUIRE(std::isfinite(best));

    const SheddingSolution sol = solve_load_shedding(d, fopt);
    CHECK(sol.status == ShedStatus::Optimal);
    CHECK(sol.total_shed_w() <= best + 0.002 * 300e3);
    CHECK(sol.total_shed_w() >= best - 0.015 * 300e3);
    // served mass is pinned by the plant rating: shed = demand - cap * c dT
    CHECK(sol.shed_w[2] == doctest::Approx(300e3 - 1.0 * 4190.0 * 30.0).epsilon(1e-3));
    CHECK(sol.state.heat_slack_flow_kg_s == doctest::Approx(1.0).epsilon(1e-3));
    check_feasible(d, fopt, sol);
  }

  TEST_CASE("import cap is met by generator redispatch without shedding") {
    auto net = import_limited_net();
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    FlowOptions fopt;
    EquationSystem sys(d, fopt);
    const int c0 = control_index(sys, EquationSystem::Control::Kind::ShedEl, 0);
    const int c1 = control_index(sys, EquationSystem::Control::Kind::Generator, 0);
    REQUIRE(c0 >= 0);
    REQUIRE(c1 >= 0);
    const double best = lattice_best_w(d, fopt, c0, c1);
    CHECK(best == doctest::Approx(0.0));

    const SheddingSolution sol = solve_load_shedding(d, fopt);
    CHECK(sol.status == ShedStatus::Optimal);
    CHECK(sol.total_shed_w() <= 1.0);
    CHECK(sol.controls[static_cast<std::size_t>(c1)] > 0.5);
    CHECK(sol.state.slack_injection_va.real() <= 250e3 + 1.0);
    check_feasible(d, fopt, sol);
  }

  TEST_CASE("healthy scheduled network sheds nothing") {
    auto net = mesres::testing::toy_mes();
    write_schedule_from_solve(net);
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    const SheddingSolution sol = solve_load_shedding(d);
    CHECK(sol.status == ShedStatus::Optimal);
    CHECK(sol.shed_w[0] == 0.0);
    CHECK(sol.shed_w[1] == 0.0);
    CHECK(sol.shed_w[2] == 0.0);
  }

  TEST_CASE("coupling-fed island is limited by the gas budget of its plant") {
    auto net = mesres::testing::toy_mes();
    write_schedule_from_solve(net);
    VitalityVector v = healthy_vitality(net);
    v[net.component_index("heat.pipe.0")] = Vitality::Broken;
    const DegradedNetwork d = apply_vitality(net, v);
    const SheddingSolution sol = solve_load_shedding(d);
    CHECK(sol.status == ShedStatus::Optimal);
    // gas import is capped at the schedule, so extra plant fuel can only come
    // from running the gas converter flat out on spare generator power; the
    // heat converter also runs at rating
    const double hhv_w = 3.6e6 * 14.0;
    const double fuel = 0.003 + 0.60 * (50e3 - 10e3) / hhv_w;
    const double served = 0.55 * fuel * hhv_w + 0.95 * 100e3;
    CHECK(sol.shed_w[2] == doctest::Approx(300e3 - served).epsilon(0.01));
    CHECK(sol.shed_w[0] <= 500.0);
    CHECK(sol.shed_w[1] <= 500.0);
  }

  TEST_CASE("lost coupling generation is covered by redispatch") {
    auto net = mesres::testing::toy_mes();
    write_schedule_from_solve(net);
    VitalityVector v = healthy_vitality(net);
    v[net.component_index("gas.pipe.0")] = Vitality::Broken;
    const DegradedNetwork d = apply_vitality(net, v);
    const SheddingSolution sol = solve_load_shedding(d);
    CHECK(sol.status == ShedStatus::Optimal);
    CHECK(sol.shed_w[1] == doctest::Approx((0.006 + 0.004) * 3.6e6 * 14.0));
    CHECK(sol.shed_w[0] <= 500.0);
    CHECK(sol.shed_w[2] <= 500.0);
  }

  TEST_CASE("failure sweep returns feasible deterministic results") {
    auto net = mesres::testing::toy_mes();
    write_schedule_from_solve(net);
    const double cap = 650e3 + 0.01 * 3.6e6 * 14.0 + 300e3;

    std::vector<VitalityVector> combos;
    const int n = static_cast<int>(net.registry.size());
    for (int i = 0; i < n; ++i) {
      VitalityVector v = healthy_vitality(net);
      v[i] = Vitality::Broken;
      combos.push_back(v);
    }
    const std::pair<const char*, const char*> doubles[] = {
        {"el.line.0", "gas.pipe.1"}, {"el.line.1", "heat.pipe.1"}, {"el.gen.0", "el.line.2"},
        {"cp.0", "heat.pipe.1"},     {"cp.1", "cp.2"},             {"gas.pipe.0", "heat.pipe.0"},
        {"el.line.0", "el.line.1"},  {"cp.0", "gas.pipe.1"},       {"heat.pipe.0", "heat.pipe.1"},
    };
    for (const auto& [a, b] : doubles) {
      VitalityVector v = healthy_vitality(net);
      v[net.component_index(a)] = Vitality::Broken;
      v[net.component_index(b)] = Vitality::Broken;
      combos.push_back(v);
    }

    for (const auto& v : combos) {
      const DegradedNetwork d = apply_vitality(net, v);
      const SheddingSolution sol = solve_load_shedding(d);
      CHECK(sol.status == ShedStatus::Optimal);
      for (int c = 0; c < kCarrierCount; ++c) {
        CHECK(sol.shed_w[c] >= d.dropped_w[c] - 1e-6);
        CHECK(sol.shed_w[c] >= 0.0);
      }
      CHECK(sol.total_shed_w() <= cap + 1e-6);

      const SheddingSolution again = solve_load_shedding(d);
      CHECK(again.total_shed_w() == sol.total_shed_w());
      CHECK(again.controls == sol.controls);
    }
  }
}
