#include "doctest.h"
#include "fixtures.hpp"
#include "mesres/vitality.hpp"

using namespace mesres;

namespace {
VitalityVector broken(const MultiEnergyNetwork& net, std::initializer_list<const char*> ids) {
  VitalityVector v = healthy_vitality(net);
  for (const char* id : ids) v[net.component_index(id)] = Vitality::Broken;
  return v;
}
}  // namespace

TEST_SUITE("vitality") {
  TEST_CASE("healthy overlay keeps everything live") {
    auto net = testing::toy_mes();
    auto d = apply_vitality(net, healthy_vitality(net));
    CHECK(d.dropped_total_w() == 0.0);
    for (bool b : d.bus_live) CHECK(b);
    for (bool b : d.gas_junction_live) CHECK(b);
    for (bool b : d.heat_junction_live) CHECK(b);
    REQUIRE(d.heat_islands.size() == 1);
    CHECK(d.heat_islands[0].has_slack);
    CHECK(d.heat_islands[0].ref_junction == 0);
    REQUIRE(d.heat_islands[0].sources.size() == 3);
    CHECK(d.heat_islands[0].sources[0].kind == HeatSourceKind::Slack);
  }

  TEST_CASE("a broken line drops the buses behind it") {
    auto net = testing::toy_mes();
    auto d = apply_vitality(net, broken(net, {"el.line.2"}));
    CHECK_FALSE(d.bus_live[3]);
    CHECK_FALSE(d.generator_live[0]);
    CHECK_FALSE(d.el_demand_live[2]);
    CHECK(d.dropped_w[static_cast<int>(Carrier::Electricity)] == doctest::Approx(150e3));
    // the power-to-gas unit at bus 3 loses its input side
    CHECK_FALSE(d.cp_operable[2]);
  }

  TEST_CASE("heat parts fed only by a coupling point form an island") {
    auto net = testing::toy_mes();
    auto d = apply_vitality(net, broken(net, {"heat.pipe.0"}));
    REQUIRE(d.heat_islands.size() == 2);
    // slack island holds only the slack junction
    const auto& main = d.heat_islands[d.heat_island_of[0]];
    CHECK(main.has_slack);
    CHECK(main.junctions == std::vector<int>{0});
    // junctions 1 and 2 live on through the CHP feed at junction 1
    const auto& isl = d.heat_islands[d.heat_island_of[1]];
    CHECK_FALSE(isl.has_slack);
    CHECK(isl.ref_junction == 1);
    CHECK(isl.junctions == std::vector<int>{1, 2});
    REQUIRE(!isl.sources.empty());
    CHECK(isl.sources[0].kind == HeatSourceKind::Cp);
    CHECK(isl.sources[0].cp == 0);
    CHECK(d.dropped_w[static_cast<int>(Carrier::Heat)] == 0.0);
  }

  TEST_CASE("heat island dies with its feeding coupling point") {
    auto net = testing::toy_mes();
    auto d = apply_vitality(net, broken(net, {"heat.pipe.0", "cp.0", "heat.pipe.1"}));
    // junction 1 has no feed left; junction 2 still has the power-to-heat unit
    CHECK(d.heat_island_of[1] == -1);
    CHECK(d.heat_island_of[2] >= 0);
    CHECK_FALSE(d.heat_junction_live[1]);
    CHECK(d.dropped_w[static_cast<int>(Carrier::Heat)] == doctest::Approx(200e3));
    const auto& isl = d.heat_islands[d.heat_island_of[2]];
    CHECK(isl.sources[0].kind == HeatSourceKind::Cp);
    CHECK(isl.sources[0].cp == 1);
  }

  TEST_CASE("gas reachability kills coupled consumers") {
    auto net = testing::toy_mes();
    auto d = apply_vitality(net, broken(net, {"gas.pipe.0"}));
    CHECK_FALSE(d.gas_junction_live[1]);
    CHECK_FALSE(d.gas_junction_live[2]);
    CHECK(d.dropped_w[static_cast<int>(Carrier::Gas)] ==
          doctest::Approx((0.006 + 0.004) * 3.6e6 * 14.0));
    // the CHP loses its fuel side and with it the heat feed
    CHECK_FALSE(d.cp_operable[0]);
    // heat junctions survive through the slack
    CHECK(d.heat_junction_live[1]);
  }

  TEST_CASE("repaired components count as in service") {
    auto net = testing::toy_mes();
    auto v = healthy_vitality(net);
    v[net.component_index("el.line.2")] = Vitality::Repaired;
    auto d = apply_vitality(net, v);
    CHECK(d.bus_live[3]);
  }

  TEST_CASE("vector length must match the registry") {
    auto net = testing::toy_mes();
    VitalityVector v(net.registry.size() + 1, Vitality::Functional);
    CHECK_THROWS_AS(apply_vitality(net, v), StructuralError);
  }
}
