#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "fixtures.hpp"
#include "mesres/flow.hpp"

using namespace mesres;
using cd = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent dense polar Newton-Raphson power flow used as an oracle for the
// rectangular solver. Finite-difference Jacobian, no shared code paths.
std::vector<cd> polar_power_flow(const MultiEnergyNetwork& net) {
  const auto& el = net.electricity;
  const int nb = static_cast<int>(el.buses.size());
  const double base = el.base_va;
  const double zb = el.base_v * el.base_v / base;
  const int slack = net.bus_at(el.slack_bus);

  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(nb, nb);
  for (const Line& l : el.lines) {
    const int a = net.bus_at(l.from), b = net.bus_at(l.to);
    const cd ys = 1.0 / cd(l.r_ohm / zb, l.x_ohm / zb);
    const cd yc(0.0, 0.5 * l.b_s * zb);
    const cd t = std::polar(l.tap, l.shift_rad);
    y(a, a) += (ys + yc) / std::norm(t);
    y(b, b) += ys + yc;
    y(a, b) -= ys / std::conj(t);
    y(b, a) -= ys / t;
  }
  for (int i = 0; i < nb; ++i)
    y(i, i) += cd(el.buses[i].shunt_g_s, el.buses[i].shunt_b_s) * zb;

  Eigen::VectorXcd s_spec = Eigen::VectorXcd::Zero(nb);
  for (const Generator& g : el.generators)
    s_spec[net.bus_at(g.bus)] += cd(g.p_w, g.q_var) / base;
  for (const ElectricDemand& d : el.demands)
    s_spec[net.bus_at(d.bus)] -= cd(d.p_w, d.q_var) / base;

  std::vector<int> pq;
  for (int i = 0; i < nb; ++i)
    if (i != slack) pq.push_back(i);
  const int nu = 2 * static_cast<int>(pq.size());

  auto mism = [&](const Eigen::VectorXd& st) {
    Eigen::VectorXcd v(nb);
    v[slack] = cd(1.0, 0.0);
    for (std::size_t k = 0; k < pq.size(); ++k)
      v[pq[k]] = std::polar(st[2 * k + 1], st[2 * k]);
    Eigen::VectorXd m(nu);
    for (std::size_t k = 0; k < pq.size(); ++k) {
      cd acc = 0.0;
      for (int j = 0; j < nb; ++j) acc += y(pq[k], j) * v[j];
      const cd s = v[pq[k]] * std::conj(acc);
      m[2 * k] = s_spec[pq[k]].real() - s.real();
      m[2 * k + 1] = s_spec[pq[k]].imag() - s.imag();
    }
    return m;
  };

  Eigen::VectorXd st(nu);
  for (std::size_t k = 0; k < pq.size(); ++k) {
    st[2 * k] = 0.0;
    st[2 * k + 1] = 1.0;
  }
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd m = mism(st);
    if (m.lpNorm<Eigen::Infinity>() < 1e-12) break;
    Eigen::MatrixXd jac(nu, nu);
    for (int j = 0; j < nu; ++j) {
      const double h = 1e-7;
      Eigen::VectorXd p = st, q = st;
      p[j] += h;
      q[j] -= h;
      jac.col(j) = (mism(p) - mism(q)) / (2.0 * h);
    }
    st -= jac.fullPivLu().solve(m);
  }

  std::vector<cd> v(nb);
  v[slack] = cd(1.0, 0.0);
  for (std::size_t k = 0; k < pq.size(); ++k) v[pq[k]] = std::polar(st[2 * k + 1], st[2 * k]);
  return v;
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("friction factor limits") {
    const double d = 0.3, din = 0.3, rough = 1e-4, visc = 1.1e-5;
    const double prni = 1.0 / std::pow(2.0 * std::log10(3.71 * din / rough), 2.0);
    CHECK(friction_factor(0.0, d, din, rough, visc) == doctest::Approx(1e8));
    // large flow approaches the rough limit
    CHECK(friction_factor(50.0, d, din, rough, visc) == doctest::Approx(prni).epsilon(1e-3));
    // small flow is dominated by the laminar line
    const double area = 0.25 * kPi * d * d;
    const double re = 1e-4 * d / (visc * area);
    CHECK(friction_factor(1e-4, d, din, rough, visc) ==
          doctest::Approx(64.0 / re + prni).epsilon(1e-12));
  }

  TEST_CASE("pipe residuals match the friction factor form away from zero") {
    GasConstants gc;
    GasPipe gp{0, 0, 1, 1000.0, 0.3, 0.3, 1e-4};
    HeatConstants hc;
    WaterPipe wp{0, 0, 1, 500.0, 0.2, 0.2, 1e-4, 0.035};
    const double gamma2 = gc.z * gc.r * gc.t_k / gc.molar_mass;
    for (double f : {0.005, 0.02, 0.1, -0.05, 1.0}) {
      const double lam_g = friction_factor(f, 0.3, 0.3, 1e-4, gc.viscosity);
      const double area = 0.25 * kPi * 0.3 * 0.3;
      const double expect_g =
          (40e5 - 39e5) - lam_g * (1000.0 / 0.3) * gamma2 / (area * area) * f * std::abs(f);
      CHECK(weymouth_residual(gp, gc, 40e5, 39e5, f) ==
            doctest::Approx(expect_g).epsilon(1e-12));

      const double lam_w = friction_factor(f, 0.2, 0.2, 1e-4, hc.water_viscosity);
      const double expect_w =
          (6e5 - 5.9e5) - lam_w * (500.0 * hc.water_density / 2.0) * (-f * std::abs(f)) / 0.2;
      CHECK(darcy_weisbach_residual(wp, hc, 6e5, 5.9e5, f) ==
            doctest::Approx(expect_w).epsilon(1e-12));
    }
  }

  TEST_CASE("heat loss law") {
    WaterPipe wp{0, 0, 1, 500.0, 0.2, 0.2, 1e-4, 0.035};
    const double h = heat_loss(wp, 1.5, 363.15, 361.15, 281.15);
    CHECK(h == doctest::Approx(-2.0 * kPi * 0.035 * 500.0 * 1.5 * (362.15 - 281.15)));
    CHECK(heat_loss(wp, 0.0, 363.15, 361.15, 281.15) == 0.0);
  }

  TEST_CASE("coupling conversions") {
    GasConstants gc;
    const ChpOutput out = chp_conversion(0.01, 0.3, 0.55, gc);
    CHECK(out.p_el_w == doctest::Approx(0.3 * 0.01 * 3.6e6 * 14.0));
    CHECK(out.h_he_w == doctest::Approx(0.55 * 0.01 * 3.6e6 * 14.0));
    CHECK(p2h_conversion(30e3, 0.95) == doctest::Approx(28500.0));
    CHECK(p2g_conversion(1e5, 0.6, gc) == doctest::Approx(0.6e5 / (3.6e6 * 14.0)));
  }

  TEST_CASE("two-bus voltage closed form") {
    const double p = 400e3, q = 80e3;
    auto net = testing::two_bus_net(p, q);
    const SteadyState st = solve_multi_energy_flow(net);
    REQUIRE(st.converged);

    const double zb = 400.0;  // 20 kV, 1 MVA
    const cd y = 1.0 / cd(2.0 / zb, 4.0 / zb);
    const cd c = cd(p, q) / 1e6 / std::conj(y);
    const double cr = c.real();
    const double disc = (1.0 - 2.0 * cr) * (1.0 - 2.0 * cr) - 4.0 * std::norm(c);
    REQUIRE(disc > 0.0);
    const double x = 0.5 * ((1.0 - 2.0 * cr) + std::sqrt(disc));
    const cd v1 = x + c;
    CHECK(std::abs(st.bus_voltage_pu[1] - v1) < 1e-9);
    // slack covers demand plus line loss
    const double loss = (st.line_flow_from_va[0] + st.line_flow_to_va[0]).real();
    CHECK(st.slack_injection_va.real() == doctest::Approx(p + loss).epsilon(1e-9));
  }

  TEST_CASE("rectangular solution matches an independent polar solver") {
    auto net = testing::feeder_net();
    const SteadyState st = solve_multi_energy_flow(net);
    REQUIRE(st.converged);
    const std::vector<cd> oracle = polar_power_flow(net);
    for (std::size_t i = 0; i < oracle.size(); ++i)
      CHECK(std::abs(st.bus_voltage_pu[i] - oracle[i]) < 1e-8);
  }

  TEST_CASE("electric mismatch vanishes at the solution") {
    auto net = testing::feeder_net();
    const SteadyState st = solve_multi_energy_flow(net);
    const auto mism = electric_mismatch(net, st.bus_voltage_pu);
    for (std::size_t i = 0; i < mism.size(); ++i) {
      if (static_cast<int>(i) == net.bus_at(net.electricity.slack_bus)) {
        CHECK(std::abs(mism[i] - st.slack_injection_va / 1e6) < 1e-9);
      } else {
        CHECK(std::abs(mism[i]) < 1e-9);
      }
    }
  }

  TEST_CASE("healthy coupled toy solves with conserved balances") {
    auto net = testing::toy_mes();
    const SteadyState st = solve_multi_energy_flow(net);
    REQUIRE(st.converged);
    CHECK(st.iterations <= 30);
    CHECK(st.residual_inf <= 1e-9);

    // gas slack covers demands plus chp fuel minus power-to-gas feed-in
    const double p2g_in = 0.6 * 10e3 / (3.6e6 * 14.0);
    CHECK(st.gas_slack_flow_kg_s == doctest::Approx(0.006 + 0.004 + 0.003 - p2g_in).epsilon(1e-9));

    // heat slack covers demand mass minus coupling feeds
    const double denom = 4190.0 * 30.0;
    const double chp_feed = 0.55 * 0.003 * 3.6e6 * 14.0 / denom;
    const double p2h_feed = 0.95 * 30e3 / denom;
    const double demand_mass = 300e3 / denom;
    CHECK(st.heat_slack_flow_kg_s ==
          doctest::Approx(demand_mass - chp_feed - p2h_feed).epsilon(1e-9));

    // electric balance including conversion legs and line losses
    double loss = 0.0;
    for (std::size_t i = 0; i < net.electricity.lines.size(); ++i)
      loss += (st.line_flow_from_va[i] + st.line_flow_to_va[i]).real();
    const double chp_el = 0.3 * 0.003 * 3.6e6 * 14.0;
    const double gen = 100e3;
    const double demands = 650e3;
    CHECK(st.slack_injection_va.real() + gen + chp_el ==
          doctest::Approx(demands + 30e3 + 10e3 + loss).epsilon(1e-8));

    // temperatures stay near supply on a served network
    for (double t : st.heat_temperature_k) {
      CHECK(t <= 363.15 + 1e-9);
      CHECK(t > 355.0);
    }
    CHECK(st.cp_heat_w[0] == doctest::Approx(0.55 * 0.003 * 3.6e6 * 14.0));
    CHECK(st.cp_gas_kg_s[0] == doctest::Approx(-0.003));
    CHECK(st.cp_p_el_w[1] == doctest::Approx(-30e3));
  }

  TEST_CASE("chain temperature drop follows the loss law") {
    MultiEnergyNetwork net;
    net.electricity.base_va = 1e6;
    net.electricity.base_v = 20e3;
    net.electricity.slack_bus = 0;
    net.electricity.buses = {{0, 0.9, 1.1, 0.0, 0.0}};
    auto& heat = net.heat;
    heat.slack_junction = 0;
    heat.junctions = {{0, 328.15, 368.15}, {1, 328.15, 368.15}};
    heat.pipes = {{0, 0, 1, 800.0, 0.2, 0.2, 1e-4, 0.035}};
    heat.sources = {{0, 0, 10.0}};
    heat.demands = {{0, 1, 250e3}};
    net.finalize();

    const SteadyState st = solve_multi_energy_flow(net);
    REQUIRE(st.converged);
    const double f = st.water_pipe_flow_kg_s[0];
    CHECK(f == doctest::Approx(250e3 / (4190.0 * 30.0)).epsilon(1e-9));
    // the junction balance pins T1 through the booked pipe loss
    const double mu = 1e-4;
    const double t1 = st.heat_temperature_k[1];
    const double expect =
        (4190.0 * f * 363.15 + st.water_pipe_loss_w[0] + 4190.0 * mu * 363.15) /
        (4190.0 * (f + mu));
    CHECK(t1 == doctest::Approx(expect).epsilon(1e-10));
    // drop is near the flow-independent small-loss value
    const double drop = 2.0 * kPi * 0.035 * 800.0 * (363.15 - 281.15) / 4190.0;
    CHECK(363.15 - t1 == doctest::Approx(drop).epsilon(0.05));
  }

  TEST_CASE("degraded networks solve on the live subsystem") {
    auto net = testing::toy_mes();
    VitalityVector v = healthy_vitality(net);
    v[net.component_index("el.line.2")] = Vitality::Broken;
    const DegradedNetwork d = apply_vitality(net, v);
    const SteadyState st = solve_multi_energy_flow(d);
    REQUIRE(st.converged);
    CHECK(std::isnan(st.bus_voltage_pu[3].real()));
    CHECK(std::isnan(st.line_flow_from_va[2].real()));
    CHECK(!std::isnan(st.bus_voltage_pu[2].real()));
    // power-to-gas at the dead bus is out; gas slack no longer sees its feed-in
    CHECK(st.gas_slack_flow_kg_s == doctest::Approx(0.006 + 0.004 + 0.003).epsilon(1e-9));
  }

  TEST_CASE("coupling-fed heat island solves around its reference") {
    auto net = testing::toy_mes();
    VitalityVector v = healthy_vitality(net);
    v[net.component_index("heat.pipe.0")] = Vitality::Broken;
    const DegradedNetwork d = apply_vitality(net, v);
    const SteadyState st = solve_multi_energy_flow(d);
    REQUIRE(st.converged);
    CHECK(st.heat_temperature_k[1] == doctest::Approx(363.15));
    CHECK(st.heat_slack_flow_kg_s == 0.0);
    CHECK(!std::isnan(st.heat_temperature_k[2]));
    CHECK(std::isnan(st.water_pipe_flow_kg_s[0]));
  }

  TEST_CASE("analytic jacobians match central differences") {
    auto net = testing::toy_mes();
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    FlowOptions opt;
    EquationSystem sys(d, opt);

    std::mt19937_64 rng(20240401);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    auto u01 = [&] { return 0.5 * (un(rng) + 1.0); };

    for (int trial = 0; trial < 25; ++trial) {
      Eigen::VectorXd x = sys.flat_start();
      const auto& el = net.electricity;
      for (std::size_t i = 0; i < el.buses.size(); ++i)
        if (sys.bus_var(static_cast<int>(i)) >= 0) {
          x[sys.bus_var(i)] = 1.0 + 0.05 * un(rng);
          x[sys.bus_var(i) + 1] = 0.05 * un(rng);
        }
      for (std::size_t i = 0; i < net.gas.junctions.size(); ++i)
        if (sys.gas_pressure_var(static_cast<int>(i)) >= 0)
          x[sys.gas_pressure_var(i)] = 40.0 + 3.0 * un(rng);
      for (std::size_t i = 0; i < net.heat.junctions.size(); ++i) {
        if (sys.heat_pressure_var(static_cast<int>(i)) >= 0)
          x[sys.heat_pressure_var(i)] = 6.0 + un(rng);
        if (sys.heat_temperature_var(static_cast<int>(i)) >= 0)
          x[sys.heat_temperature_var(i)] = -8.0 + 6.0 * un(rng);
      }
      for (std::size_t i = 0; i < net.gas.pipes.size(); ++i)
        if (sys.gas_flow_var(static_cast<int>(i)) >= 0) {
          const double mag = 0.01 + 0.15 * u01();
          x[sys.gas_flow_var(i)] = un(rng) > 0 ? mag : -mag;
        }
      for (std::size_t i = 0; i < net.heat.pipes.size(); ++i)
        if (sys.water_flow_var(static_cast<int>(i)) >= 0) {
          const double mag = 0.02 + 2.0 * u01();
          x[sys.water_flow_var(i)] = un(rng) > 0 ? mag : -mag;
        }
      Eigen::VectorXd u(sys.num_controls());
      for (int i = 0; i < sys.num_controls(); ++i) u[i] = u01();

      Eigen::SparseMatrix<double> jx, ju;
      sys.jacobian(x, u, &jx, &ju);
      const Eigen::MatrixXd djx(jx), dju(ju);

      Eigen::VectorXd f0, fp, fm;
      const double hbase = std::cbrt(std::numeric_limits<double>::epsilon());
      for (int j = 0; j < sys.num_states(); ++j) {
        const double h = hbase * std::max(1.0, std::abs(x[j]));
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        sys.eval(xp, u, fp);
        sys.eval(xm, u, fm);
        const Eigen::VectorXd fd = (fp - fm) / (2.0 * h);
        const double scale = std::max(1.0, djx.col(j).cwiseAbs().maxCoeff());
        CHECK((fd - djx.col(j)).cwiseAbs().maxCoeff() / scale < 1e-6);
      }
      for (int j = 0; j < sys.num_controls(); ++j) {
        const double h = hbase;
        Eigen::VectorXd up = u, um = u;
        up[j] += h;
        um[j] -= h;
        sys.eval(x, up, fp);
        sys.eval(x, um, fm);
        const Eigen::VectorXd fd = (fp - fm) / (2.0 * h);
        const double scale = std::max(1.0, dju.col(j).cwiseAbs().maxCoeff());
        CHECK((fd - dju.col(j)).cwiseAbs().maxCoeff() / scale < 1e-6);
      }
    }
  }

  TEST_CASE("inequality jacobians match central differences") {
    auto net = testing::toy_mes();
    net.schedule = {true, 5.3e5, 1.1e5, 0.0379, 1.50};
    const DegradedNetwork d = apply_vitality(net, healthy_vitality(net));
    FlowOptions opt;
    EquationSystem sys(d, opt);

    Eigen::VectorXd x;
    SteadyState st = solve_multi_energy_flow(d, opt, nullptr, &x);
    REQUIRE(st.converged);
    Eigen::VectorXd u = sys.scheduled_controls();

    Eigen::SparseMatrix<double> hx, hu;
    sys.inequality_jacobian(x, u, &hx, &hu);
    const Eigen::MatrixXd dhx(hx), dhu(hu);
    const double hbase = std::cbrt(std::numeric_limits<double>::epsilon());

    Eigen::VectorXd hp, hm;
    for (int j = 0; j < sys.num_states(); ++j) {
      const double h = hbase * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      sys.eval_inequalities(xp, u, hp);
      sys.eval_inequalities(xm, u, hm);
      const Eigen::VectorXd fd = (hp - hm) / (2.0 * h);
      const double scale = std::max(1.0, dhx.col(j).cwiseAbs().maxCoeff());
      CHECK((fd - dhx.col(j)).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
    for (int j = 0; j < sys.num_controls(); ++j) {
      Eigen::VectorXd up = u, um = u;
      up[j] += hbase;
      um[j] -= hbase;
      sys.eval_inequalities(x, up, hp);
      sys.eval_inequalities(x, um, hm);
      const Eigen::VectorXd fd = (hp - hm) / (2.0 * hbase);
      const double scale = std::max(1.0, dhu.col(j).cwiseAbs().maxCoeff());
      CHECK((fd - dhu.col(j)).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
  }

  TEST_CASE("solver reports divergence on an unsolvable load") {
    auto net = testing::two_bus_net(60e6, 12e6);  // far beyond the line's reach
    CHECK_THROWS_AS(solve_multi_energy_flow(net), DivergenceError);
  }
}
