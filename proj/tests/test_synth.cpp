#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "mesres/flow.hpp"
#include "mesres/io.hpp"
#include "mesres/shed.hpp"
#include "mesres/synth.hpp"
#include "mesres/vitality.hpp"

using namespace mesres;
using mesres::testing::mv12_base;

namespace {

std::set<int> junction_ids(const GasGrid& g) {
  std::set<int> ids;
  for (const auto& j : g.junctions) ids.insert(j.id);
  return ids;
}

std::set<int> demand_junctions(const GasGrid& g) {
  std::set<int> ids;
  for (const auto& d : g.demands) ids.insert(d.junction);
  return ids;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("full deployment reaches every demand bus") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 11;
    GasGrid gas = derive_gas_network(base, cfg);
    CHECK(junction_ids(gas).size() == 12);
    CHECK(demand_junctions(gas).size() == 11);
    for (const auto& d : base.electricity.demands)
      CHECK(demand_junctions(gas).count(d.bus) == 1);
    CHECK(gas.slack_junction == 0);
    REQUIRE(gas.sources.size() == 1);
    CHECK(gas.sources[0].junction == 0);
    CHECK(gas.sources[0].max_flow_kg_s > 0.0);

    HeatGrid heat = derive_heat_network(base, cfg);
    CHECK(heat.junctions.size() == 12);
    CHECK(heat.demands.size() == 11);
    const auto& gc = gas.constants;
    const double hhv_w = gc.energy_per_kwh * gc.hhv_kwh_per_kg;
    for (const auto& d : gas.demands) {
      double p_el = 0.0;
      for (const auto& e : base.electricity.demands)
        if (e.bus == d.junction) p_el += e.p_w;
      CHECK(d.flow_kg_s == doctest::Approx(1.5 * p_el / hhv_w));
    }
    for (const auto& d : heat.demands) {
      double p_el = 0.0;
      for (const auto& e : base.electricity.demands)
        if (e.bus == d.junction) p_el += e.p_w;
      CHECK(d.heat_w == doctest::Approx(2.0 * p_el));
    }
  }

  TEST_CASE("selection grows monotonically with density under one seed") {
    auto base = mv12_base();
    for (std::uint64_t seed : {1ULL, 7ULL, 42ULL}) {
      SynthConfig lo, hi;
      lo.seed = hi.seed = seed;
      lo.gas_density = 0.5;
      hi.gas_density = 0.8;
      GasGrid a = derive_gas_network(base, lo);
      GasGrid b = derive_gas_network(base, hi);
      CHECK(a.demands.size() == 6);
      CHECK(b.demands.size() == 9);
      for (int id : demand_junctions(a)) CHECK(demand_junctions(b).count(id) == 1);
      for (int id : junction_ids(a)) CHECK(junction_ids(b).count(id) == 1);
    }
  }

  TEST_CASE("heat network is a tree that reaches every selected node") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 3;
    cfg.heat_density = 0.7;
    HeatGrid heat = derive_heat_network(base, cfg);
    CHECK(heat.pipes.size() == heat.junctions.size() - 1);
    std::set<int> reached{heat.slack_junction};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& p : heat.pipes)
        if (reached.count(p.from) && !reached.count(p.to)) {
          reached.insert(p.to);
          grew = true;
        }
    }
    CHECK(reached.size() == heat.junctions.size());
    for (const auto& d : heat.demands) CHECK(reached.count(d.junction) == 1);
  }

  TEST_CASE("pipes come from the catalog and hold the drop budget at base flow") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 5;
    cfg.chp_density = 0.5;
    cfg.p2h_density = 0.5;
    cfg.p2g_density = 0.5;
    auto mes = generate_mes(base, cfg);
    const auto& cat = cfg.params.diameters_m;
    for (const auto& p : mes.gas.pipes) {
      CHECK(std::count(cat.begin(), cat.end(), p.diameter_m) == 1);
      CHECK(p.length_m > 0.0);
    }
    for (const auto& p : mes.heat.pipes) CHECK(std::count(cat.begin(), cat.end(), p.diameter_m) == 1);

    SteadyState st = solve_multi_energy_flow(mes, FlowOptions{});
    REQUIRE(st.converged);
    for (std::size_t i = 0; i < mes.gas.pipes.size(); ++i) {
      const double drop = std::abs(weymouth_residual(mes.gas.pipes[i], mes.gas.constants, 0.0,
                                                     0.0, st.gas_pipe_flow_kg_s[i]));
      CHECK(drop <= cfg.params.gas_drop_budget_pa);
    }
  }

  TEST_CASE("generated networks run inside every operating window") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 2026;
    auto mes = generate_mes(base, cfg);
    CHECK(mes.schedule.valid);
    CHECK(validate_network(mes).empty());

    SteadyState st = solve_multi_energy_flow(mes, FlowOptions{});
    REQUIRE(st.converged);
    CHECK(st.residual_inf < 1e-6);
    for (std::size_t i = 0; i < mes.electricity.buses.size(); ++i) {
      const double v = std::abs(st.bus_voltage_pu[i]);
      CHECK(v >= mes.electricity.buses[i].vmin_pu);
      CHECK(v <= mes.electricity.buses[i].vmax_pu);
    }
    for (std::size_t i = 0; i < mes.gas.junctions.size(); ++i) {
      CHECK(st.gas_pressure_pa[i] >= mes.gas.junctions[i].pmin_pa);
      CHECK(st.gas_pressure_pa[i] <= mes.gas.junctions[i].pmax_pa);
    }
    for (std::size_t i = 0; i < mes.heat.junctions.size(); ++i) {
      CHECK(st.heat_temperature_k[i] >= mes.heat.junctions[i].tmin_k);
      CHECK(st.heat_temperature_k[i] <= mes.heat.junctions[i].tmax_k);
    }
    CHECK(st.gas_slack_flow_kg_s >= 0.0);
    CHECK(st.heat_slack_flow_kg_s >= 0.0);
    CHECK(mes.schedule.slack_p_w == st.slack_injection_va.real());
  }

  TEST_CASE("coupling point counts follow the density") {
    auto base = mv12_base();
    for (double rho : {0.0, 0.5, 1.0, 1.5, 2.0}) {
      SynthConfig cfg;
      cfg.seed = 9;
      cfg.chp_density = rho;
      cfg.p2h_density = rho;
      cfg.p2g_density = rho;
      auto mes = generate_mes(base, cfg);
      const auto expected = std::lround(rho * 11.0);
      long chp = 0, p2h = 0, p2g = 0;
      for (const auto& cp : mes.coupling_points) {
        if (cp.kind == CouplingKind::Chp) ++chp;
        if (cp.kind == CouplingKind::PowerToHeat) ++p2h;
        if (cp.kind == CouplingKind::PowerToGas) ++p2g;
      }
      CHECK(chp == expected);
      CHECK(p2h == expected);
      CHECK(p2g == expected);
      if (rho == 0.0) CHECK(mes.coupling_points.empty());
      if (rho == 2.0) {
        std::map<int, int> per_site;
        for (const auto& cp : mes.coupling_points)
          if (cp.kind == CouplingKind::Chp) ++per_site[cp.bus];
        for (const auto& [site, n] : per_site) CHECK(n == 2);
      }
    }
  }

  TEST_CASE("every coupling point resolves its attachments") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 77;
    cfg.gas_density = 0.8;
    cfg.heat_density = 0.7;
    cfg.chp_density = 1.5;
    cfg.p2h_density = 1.0;
    cfg.p2g_density = 2.0;
    auto mes = generate_mes(base, cfg);
    std::map<int, int> heat_parent;
    for (const auto& p : mes.heat.pipes) heat_parent[p.to] = p.from;
    for (const auto& cp : mes.coupling_points) {
      CHECK(mes.bus_at(cp.bus) >= 0);
      if (cp.kind != CouplingKind::PowerToHeat) {
        CHECK(mes.gas_junction_at(cp.gas_junction) >= 0);
        CHECK(cp.gas_junction != mes.gas.slack_junction);
      }
      if (cp.kind != CouplingKind::PowerToGas) {
        CHECK(mes.heat_junction_at(cp.heat_junction_b) >= 0);
        CHECK(cp.heat_junction_a == heat_parent.at(cp.heat_junction_b));
        CHECK(cp.bus == cp.heat_junction_b);
      }
      CHECK(cp.dispatch == doctest::Approx(0.3 * cp.rating));
    }
  }

  TEST_CASE("regeneration is bit-identical and seeds differ") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 1234;
    cfg.gas_density = 0.6;
    cfg.heat_density = 0.8;
    const std::string a = network_to_json(generate_mes(base, cfg));
    const std::string b = network_to_json(generate_mes(base, cfg));
    CHECK(a == b);
    cfg.seed = 1235;
    CHECK(network_to_json(generate_mes(base, cfg)) != a);
  }

  TEST_CASE("degenerate configurations are rejected") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.gas_density = 0.02;
    CHECK_THROWS_AS(derive_gas_network(base, cfg), SynthError);
    cfg.gas_density = 1.2;
    CHECK_THROWS_AS(generate_mes(base, cfg), SynthError);
    cfg.gas_density = -0.1;
    CHECK(!validate_synth_config(cfg).empty());
    CHECK_THROWS_AS(generate_mes(testing::toy_mes(), SynthConfig{}), SynthError);

    auto disconnected = mv12_base();
    disconnected.electricity.buses.push_back({12, 0.9, 1.1, 0.0, 0.0});
    disconnected.electricity.demands.push_back({11, 12, 90e3, 18e3});
    disconnected.finalize();
    SynthConfig full;
    CHECK_THROWS_AS(derive_gas_network(disconnected, full), SynthError);
  }

  TEST_CASE("zero carrier density leaves the carrier empty but solvable") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 4;
    cfg.gas_density = 0.0;
    cfg.heat_density = 0.0;
    auto mes = generate_mes(base, cfg);
    CHECK(mes.gas.junctions.empty());
    CHECK(mes.heat.junctions.empty());
    CHECK(mes.coupling_points.empty());
    CHECK(mes.schedule.valid);
    CHECK(mes.schedule.gas_slack_kg_s == 0.0);
    SteadyState st = solve_multi_energy_flow(mes, FlowOptions{});
    CHECK(st.converged);
  }

  TEST_CASE("healthy generated network sheds nothing") {
    auto base = mv12_base();
    SynthConfig cfg;
    cfg.seed = 8;
    cfg.gas_density = 0.6;
    cfg.heat_density = 0.6;
    cfg.chp_density = 0.5;
    cfg.p2h_density = 0.5;
    cfg.p2g_density = 0.5;
    auto mes = generate_mes(base, cfg);
    auto sol = solve_load_shedding(apply_vitality(mes, healthy_vitality(mes)));
    CHECK(sol.status == ShedStatus::Optimal);
    CHECK(sol.total_shed_w() == 0.0);
  }
}
