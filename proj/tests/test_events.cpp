#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mesres/events.hpp"

using namespace mesres;

namespace {

int count_state(const VitalityVector& v, Vitality s) {
  int n = 0;
  for (Vitality x : v)
    if (x == s) ++n;
  return n;
}

}  // namespace

TEST_SUITE("events") {
  TEST_CASE("failure probability is the product of its factors") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 0.05;
    EventSampler sampler(net, p);
    for (std::size_t j = 0; j < net.registry.size(); ++j)
      CHECK(sampler.failure_probability(int(j), 0) == doctest::Approx(0.05));

    p.emphasis = emphasis_preset("high-gas");
    EventSampler gas_only(net, p);
    for (std::size_t j = 0; j < net.registry.size(); ++j) {
      const auto cls = net.registry[j].grid_class;
      const double expected = cls == GridClass::Gas ? 0.15 : 0.0;
      CHECK(gas_only.failure_probability(int(j), 3) == doctest::Approx(expected));
    }

    p.emphasis = {2, 2, 2, 2};
    p.type_rho[std::size_t(ComponentKind::Line)] = 0.5;
    p.gamma.assign(net.registry.size(), 1.0);
    p.gamma[0] = 1.4;
    EventSampler mixed(net, p);
    CHECK(mixed.failure_probability(0, 0) == doctest::Approx(0.5 * 1.4 * 2.0 * 0.05));

    p.p_base = 1.0;
    p.gamma.clear();
    p.type_rho[std::size_t(ComponentKind::Line)] = 4.0;
    EventSampler clamped(net, p);
    CHECK(clamped.failure_probability(0, 0) == 1.0);
  }

  TEST_CASE("preset table matches the scenario rows") {
    CHECK(emphasis_preset("high-electricity") == GridEmphasis{3, 0, 0, 0});
    CHECK(emphasis_preset("high-heating") == GridEmphasis{0, 3, 0, 0});
    CHECK(emphasis_preset("high-gas") == GridEmphasis{0, 0, 3, 0});
    CHECK(emphasis_preset("high-cp") == GridEmphasis{0, 0, 0, 3});
    CHECK(emphasis_preset("low-overall") == GridEmphasis{1, 1, 1, 1});
    CHECK(emphasis_preset("medium-overall") == GridEmphasis{2, 2, 2, 2});
    CHECK(emphasis_preset_names().size() == 6);
    CHECK_THROWS_AS(emphasis_preset("stormy-monday"), ConfigError);
    for (std::size_t g = 0; g < std::size_t(kGridClassCount); ++g)
      CHECK(emphasis_preset("medium-overall")[g] == 2.0 * emphasis_preset("low-overall")[g]);
  }

  TEST_CASE("zero emphasis keeps every component functional") {
    auto net = testing::toy_mes();
    EventParams p;
    p.emphasis = {0, 0, 0, 0};
    EventSampler sampler(net, p);
    Event ev = sampler.generate(99, 0);
    REQUIRE(ev.steps.size() == 24);
    for (const auto& theta : ev.steps)
      CHECK(count_state(theta, Vitality::Functional) == int(net.registry.size()));
  }

  TEST_CASE("a broken component returns as repaired when repair is certain") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 0.0;
    p.p_repair = 1.0;
    EventSampler sampler(net, p);
    VitalityVector prev = healthy_vitality(net);
    prev[2] = Vitality::Broken;
    std::mt19937_64 rng(7);
    VitalityVector next = sampler.advance(prev, 0, rng);
    CHECK(next[2] == Vitality::Repaired);
    VitalityVector later = sampler.advance(next, 1, rng);
    CHECK(later[2] == Vitality::Repaired);
    for (std::size_t j = 0; j < next.size(); ++j)
      if (j != 2) CHECK(next[j] == Vitality::Functional);
  }

  TEST_CASE("empirical failure rate tracks the configured probability") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 0.3;
    p.steps = 1;
    EventSampler sampler(net, p);
    std::mt19937_64 rng(123);
    const VitalityVector healthy = healthy_vitality(net);
    long fails = 0, draws = 0;
    for (int trial = 0; trial < 8000; ++trial) {
      VitalityVector next = sampler.advance(healthy, 0, rng);
      fails += count_state(next, Vitality::Broken);
      draws += long(next.size());
    }
    CHECK(double(fails) / double(draws) == doctest::Approx(0.3).epsilon(0.033));
  }

  TEST_CASE("one draw decides failure first and repair second") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 0.2;
    p.p_repair = 0.5;
    EventSampler sampler(net, p);
    VitalityVector broken(net.registry.size(), Vitality::Broken);
    std::mt19937_64 rng(5);
    long repaired = 0, stayed = 0, refail = 0, draws = 0;
    for (int trial = 0; trial < 4000; ++trial) {
      VitalityVector next = sampler.advance(broken, 0, rng);
      repaired += count_state(next, Vitality::Repaired);
      stayed += count_state(next, Vitality::Broken);
      draws += long(next.size());
    }
    refail = stayed;
    // repair only lands in the [p_fail, p_repair) window of the single draw
    CHECK(double(repaired) / double(draws) == doctest::Approx(0.3).epsilon(0.05));
    CHECK(double(refail) / double(draws) == doctest::Approx(0.7).epsilon(0.05));

    p.p_repair = 0.1;
    EventSampler shadowed(net, p);
    std::mt19937_64 rng2(6);
    long fixed = 0;
    for (int trial = 0; trial < 2000; ++trial)
      fixed += count_state(shadowed.advance(broken, 0, rng2), Vitality::Repaired);
    CHECK(fixed == 0);
  }

  TEST_CASE("vitality transitions stay inside the allowed state machine") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 0.15;
    p.p_repair = 0.4;
    EventSampler sampler(net, p);
    for (std::uint64_t e = 0; e < 40; ++e) {
      Event ev = sampler.generate(31, e);
      VitalityVector prev = healthy_vitality(net);
      for (const auto& theta : ev.steps) {
        for (std::size_t j = 0; j < theta.size(); ++j) {
          if (prev[j] == Vitality::Functional)
            CHECK((theta[j] == Vitality::Functional || theta[j] == Vitality::Broken));
          if (prev[j] == Vitality::Broken)
            CHECK((theta[j] == Vitality::Broken || theta[j] == Vitality::Repaired));
          if (prev[j] == Vitality::Repaired)
            CHECK((theta[j] == Vitality::Repaired || theta[j] == Vitality::Broken));
        }
        prev = theta;
      }
    }
  }

  TEST_CASE("events are reproducible and indexes decorrelate") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 0.1;
    EventSampler sampler(net, p);
    Event a = sampler.generate(42, 7);
    Event b = sampler.generate(42, 7);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i] == b.steps[i]);

    Event c = sampler.generate(42, 8);
    bool differs = false;
    for (std::size_t i = 0; i < a.steps.size(); ++i)
      if (a.steps[i] != c.steps[i]) differs = true;
    CHECK(differs);

    // fresh failures at the first step of independent streams are uncorrelated
    long both = 0, first = 0, second = 0, n = 0;
    for (std::uint64_t e = 0; e < 3000; ++e) {
      const VitalityVector s1 = sampler.generate(1, e).steps[0];
      const VitalityVector s2 = sampler.generate(2, e).steps[0];
      for (std::size_t j = 0; j < s1.size(); ++j) {
        const bool f1 = s1[j] == Vitality::Broken;
        const bool f2 = s2[j] == Vitality::Broken;
        both += f1 && f2;
        first += f1;
        second += f2;
        ++n;
      }
    }
    const double p1 = double(first) / double(n);
    const double p2 = double(second) / double(n);
    const double joint = double(both) / double(n);
    CHECK(std::abs(joint - p1 * p2) < 0.01);
  }

  TEST_CASE("doubled emphasis doubles every failure probability") {
    auto net = testing::toy_mes();
    EventParams low;
    low.emphasis = emphasis_preset("low-overall");
    EventParams med;
    med.emphasis = emphasis_preset("medium-overall");
    EventSampler a(net, low), b(net, med);
    for (std::size_t j = 0; j < net.registry.size(); ++j)
      CHECK(b.failure_probability(int(j), 0) ==
            doctest::Approx(2.0 * a.failure_probability(int(j), 0)));
  }

  TEST_CASE("component fragility factors are deterministic and bounded") {
    auto net = testing::toy_mes();
    auto g1 = sample_component_gammas(net, 555);
    auto g2 = sample_component_gammas(net, 555);
    auto g3 = sample_component_gammas(net, 556);
    CHECK(g1 == g2);
    CHECK(g1 != g3);
    REQUIRE(g1.size() == net.registry.size());
    for (double g : g1) {
      CHECK(g >= 0.5);
      CHECK(g < 1.5);
    }
  }

  TEST_CASE("storm amplification is local and reproducible") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 0.05;
    p.storm.enabled = true;
    p.storm.elevated_beta = 3.0;
    p.storm.hop_radius = 1;
    p.storm.steps_per_hop = 100;  // center stays at the first node
    EventSampler storm(net, p);

    const int near = net.component_index("el.line.0");
    const int far = net.component_index("heat.pipe.1");
    CHECK(storm.failure_probability(near, 0) == doctest::Approx(0.15));
    CHECK(storm.failure_probability(far, 0) == doctest::Approx(0.05));

    p.storm.hop_radius = 99;
    EventSampler wide(net, p);
    for (std::size_t j = 0; j < net.registry.size(); ++j)
      CHECK(wide.failure_probability(int(j), 0) == doctest::Approx(0.15));

    p.storm.elevated_beta = 1.0;
    EventSampler neutral(net, p);
    EventParams uniform;
    uniform.p_base = 0.05;
    EventSampler plain(net, uniform);
    Event x = neutral.generate(4, 4);
    Event y = plain.generate(4, 4);
    for (std::size_t i = 0; i < x.steps.size(); ++i) CHECK(x.steps[i] == y.steps[i]);
  }

  TEST_CASE("bad parameters are rejected with an issue list") {
    auto net = testing::toy_mes();
    EventParams p;
    p.p_base = 1.5;
    p.steps = 0;
    p.gamma = {1.0};
    CHECK(validate_event_params(net, p).size() == 3);
    CHECK_THROWS_AS(EventSampler(net, p), ValidationError);
  }
}
