#include <cmath>
#include <complex>
#include <limits>

#include "mesres/flow.hpp"

namespace mesres {

namespace {

constexpr double kPi = 3.14159265358979323846;
using cd = std::complex<double>;
using Triplet = Eigen::Triplet<double>;

double pipe_area(double d) { return 0.25 * kPi * d * d; }

double prandtl_nikuradse(double inner, double rough) {
  const double t = 2.0 * std::log10(3.71 * inner / rough);
  return 1.0 / (t * t);
}

// lambda f |f| expanded into the laminar line plus the rough-limit parabola.
struct Friction {
  double lam = 0.0;   // linear coefficient
  double prni = 0.0;  // coefficient of f |f|
  double value(double f) const { return lam * f + prni * f * std::abs(f); }
  double slope(double f) const { return lam + 2.0 * prni * std::abs(f); }
};

Friction gas_friction(const GasPipe& p, const GasConstants& c) {
  const double a = pipe_area(p.diameter_m);
  return {64.0 * c.viscosity * a / p.diameter_m,
          prandtl_nikuradse(p.inner_diameter_m, p.roughness_m)};
}

Friction water_friction(const WaterPipe& p, const HeatConstants& c) {
  const double a = pipe_area(p.diameter_m);
  return {64.0 * c.water_viscosity * a / p.diameter_m,
          prandtl_nikuradse(p.inner_diameter_m, p.roughness_m)};
}

// Energy flux a water pipe delivers into each of its end junctions, with the
// transported enthalpy upwinded smoothly in the flow and the wall loss booked
// to the receiving end.
struct ThermalFlux {
  double phi_a, phi_b;
  double da_f, da_ta, da_tb;
  double db_f, db_ta, db_tb;
};

ThermalFlux thermal_flux(const WaterPipe& pipe, double f, double t_a, double t_b,
                         const HeatConstants& hc, const FlowOptions& opt) {
  const double c = hc.specific_heat;
  const double kl = 2.0 * kPi * pipe.insulation_w_mk * pipe.length_m;
  const double eps = opt.upwind_eps_kg_s;
  const double th = std::tanh(f / eps);
  const double sig = 0.5 * (1.0 + th);
  const double dsig = 0.5 * (1.0 - th * th) / eps;
  const double fabs = std::sqrt(f * f + opt.abs_eps_kg_s * opt.abs_eps_kg_s);
  const double dfabs = f / fabs;
  const double mean_excess = 0.5 * (t_a + t_b) - hc.t_ext_k;
  const double loss = -kl * fabs * mean_excess;  // negative above ambient
  const double dloss_f = -kl * dfabs * mean_excess;
  const double dloss_t = -kl * fabs * 0.5;  // per end temperature
  const double mix = sig * t_a + (1.0 - sig) * t_b;

  ThermalFlux r;
  r.phi_b = c * f * mix + sig * loss;
  r.db_f = c * mix + c * f * dsig * (t_a - t_b) + dsig * loss + sig * dloss_f;
  r.db_ta = c * f * sig + sig * dloss_t;
  r.db_tb = c * f * (1.0 - sig) + sig * dloss_t;

  r.phi_a = -c * f * mix + (1.0 - sig) * loss;
  r.da_f = -c * mix - c * f * dsig * (t_a - t_b) - dsig * loss + (1.0 - sig) * dloss_f;
  r.da_ta = -c * f * sig + (1.0 - sig) * dloss_t;
  r.da_tb = -c * f * (1.0 - sig) + (1.0 - sig) * dloss_t;
  return r;
}

// Complex power leaving a branch end and its voltage derivatives.
struct EndFlow {
  cd s;
  cd de_a, df_a, de_b, df_b;  // derivatives wrt (e, f) of both endpoints
};

}  // namespace

struct EquationSystem::Triplets {
  std::vector<Triplet>* out = nullptr;
  void add(int row, int col, double v) {
    if (out != nullptr && v != 0.0) out->emplace_back(row, col, v);
  }
};

struct EquationSystem::BranchConstants {
  int line = -1;
  int a = -1, b = -1;  // bus container indices
  cd ca, cb, cc, cdv;  // S_ij = ca |V_a|^2 - cb w ; S_ji = cc |V_b|^2 - cdv conj(w)
  double rating2_pu = 0.0;

  EndFlow from_end(const cd& va, const cd& vb) const {
    EndFlow e;
    const cd w = va * std::conj(vb);
    e.s = ca * std::norm(va) - cb * w;
    e.de_a = 2.0 * ca * va.real() - cb * std::conj(vb);
    e.df_a = 2.0 * ca * va.imag() - cd(0, 1) * cb * std::conj(vb);
    e.de_b = -cb * va;
    e.df_b = cd(0, 1) * cb * va;
    return e;
  }
  EndFlow to_end(const cd& va, const cd& vb) const {
    EndFlow e;
    const cd w = va * std::conj(vb);
    e.s = cc * std::norm(vb) - cdv * std::conj(w);
    e.de_b = 2.0 * cc * vb.real() - cdv * std::conj(va);
    e.df_b = 2.0 * cc * vb.imag() - cd(0, 1) * cdv * std::conj(va);
    e.de_a = -cdv * vb;
    e.df_a = cd(0, 1) * cdv * vb;
    return e;
  }
};

EquationSystem::EquationSystem(const DegradedNetwork& degraded, const FlowOptions& options)
    : degraded_(&degraded), options_(options) {
  layout();
}

EquationSystem::~EquationSystem() = default;

void EquationSystem::layout() {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& el = n.electricity;
  const auto& gas = n.gas;
  const auto& heat = n.heat;

  z_base_ = el.base_v * el.base_v / el.base_va;
  const int slack_bus = el.buses.empty() ? -1 : n.bus_at(el.slack_bus);
  const int slack_gj = gas.junctions.empty() ? -1 : n.gas_junction_at(gas.slack_junction);

  int v = 0;
  bus_var_.assign(el.buses.size(), -1);
  for (std::size_t i = 0; i < el.buses.size(); ++i)
    if (d.bus_live[i] && static_cast<int>(i) != slack_bus) {
      bus_var_[i] = v;
      v += 2;
    }

  gas_p_var_.assign(gas.junctions.size(), -1);
  for (std::size_t i = 0; i < gas.junctions.size(); ++i)
    if (d.gas_junction_live[i] && static_cast<int>(i) != slack_gj) gas_p_var_[i] = v++;
  gas_f_var_.assign(gas.pipes.size(), -1);
  for (std::size_t i = 0; i < gas.pipes.size(); ++i)
    if (d.gas_pipe_live[i]) gas_f_var_[i] = v++;

  std::vector<char> is_ref(heat.junctions.size(), 0);
  for (const HeatIsland& isl : d.heat_islands) is_ref[isl.ref_junction] = 1;
  heat_p_var_.assign(heat.junctions.size(), -1);
  heat_t_var_.assign(heat.junctions.size(), -1);
  for (std::size_t i = 0; i < heat.junctions.size(); ++i)
    if (d.heat_junction_live[i] && !is_ref[i]) {
      heat_p_var_[i] = v++;
      heat_t_var_[i] = v++;
    }
  water_f_var_.assign(heat.pipes.size(), -1);
  for (std::size_t i = 0; i < heat.pipes.size(); ++i)
    if (d.water_pipe_live[i]) water_f_var_[i] = v++;
  num_states_ = v;

  int e = 0;
  bus_eq_.assign(el.buses.size(), -1);
  for (std::size_t i = 0; i < el.buses.size(); ++i)
    if (bus_var_[i] >= 0) {
      bus_eq_[i] = e;
      e += 2;
    }
  gas_eq_pipe_.assign(gas.pipes.size(), -1);
  for (std::size_t i = 0; i < gas.pipes.size(); ++i)
    if (gas_f_var_[i] >= 0) gas_eq_pipe_[i] = e++;
  gas_eq_mass_.assign(gas.junctions.size(), -1);
  for (std::size_t i = 0; i < gas.junctions.size(); ++i)
    if (gas_p_var_[i] >= 0) gas_eq_mass_[i] = e++;
  water_eq_pipe_.assign(heat.pipes.size(), -1);
  for (std::size_t i = 0; i < heat.pipes.size(); ++i)
    if (water_f_var_[i] >= 0) water_eq_pipe_[i] = e++;
  heat_eq_mass_.assign(heat.junctions.size(), -1);
  heat_eq_energy_.assign(heat.junctions.size(), -1);
  for (std::size_t i = 0; i < heat.junctions.size(); ++i)
    if (heat_t_var_[i] >= 0) {
      heat_eq_mass_[i] = e++;
      heat_eq_energy_[i] = e++;
    }
  num_equations_ = e;

  branch_.clear();
  for (std::size_t i = 0; i < el.lines.size(); ++i) {
    if (!d.line_live[i]) continue;
    const Line& l = el.lines[i];
    BranchConstants bc;
    bc.line = static_cast<int>(i);
    bc.a = n.bus_at(l.from);
    bc.b = n.bus_at(l.to);
    const cd z(l.r_ohm / z_base_, l.x_ohm / z_base_);
    const cd y = 1.0 / z;
    const cd yc(0.0, 0.5 * l.b_s * z_base_);
    const cd t = std::polar(l.tap, l.shift_rad);
    bc.ca = std::conj(y + yc) / std::norm(t);
    bc.cb = std::conj(y) / t;
    bc.cc = std::conj(y + yc);
    bc.cdv = std::conj(y) / std::conj(t);
    if (l.rating_va > 0.0) {
      const double cap = l.rating_va / el.base_va * options_.lp_max_percent / 100.0;
      bc.rating2_pu = cap * cap;
    }
    branch_.push_back(bc);
  }

  controls_.clear();
  el_shed_of_.assign(el.demands.size(), -1);
  for (std::size_t i = 0; i < el.demands.size(); ++i)
    if (d.el_demand_live[i]) {
      el_shed_of_[i] = static_cast<int>(controls_.size());
      controls_.push_back({Control::Kind::ShedEl, static_cast<int>(i), 0.0, el.demands[i].p_w});
    }
  gas_shed_of_.assign(gas.demands.size(), -1);
  for (std::size_t i = 0; i < gas.demands.size(); ++i)
    if (d.gas_demand_live[i]) {
      gas_shed_of_[i] = static_cast<int>(controls_.size());
      controls_.push_back({Control::Kind::ShedGas, static_cast<int>(i), 0.0,
                           gas_demand_power_w(gas, gas.demands[i])});
    }
  heat_shed_of_.assign(heat.demands.size(), -1);
  for (std::size_t i = 0; i < heat.demands.size(); ++i)
    if (d.heat_demand_live[i]) {
      heat_shed_of_[i] = static_cast<int>(controls_.size());
      controls_.push_back(
          {Control::Kind::ShedHeat, static_cast<int>(i), 0.0, heat.demands[i].heat_w});
    }
  gen_ctrl_of_.assign(el.generators.size(), -1);
  for (std::size_t i = 0; i < el.generators.size(); ++i)
    if (d.generator_live[i] && el.generators[i].p_max_w > 0.0) {
      gen_ctrl_of_[i] = static_cast<int>(controls_.size());
      controls_.push_back({Control::Kind::Generator, static_cast<int>(i),
                           el.generators[i].p_w / el.generators[i].p_max_w, 0.0});
    }
  cp_ctrl_of_.assign(n.coupling_points.size(), -1);
  for (std::size_t i = 0; i < n.coupling_points.size(); ++i)
    if (d.cp_operable[i] && n.coupling_points[i].rating > 0.0) {
      cp_ctrl_of_[i] = static_cast<int>(controls_.size());
      controls_.push_back({Control::Kind::CpInput, static_cast<int>(i),
                           n.coupling_points[i].dispatch / n.coupling_points[i].rating, 0.0});
    }

  inequalities_.clear();
  for (std::size_t i = 0; i < el.buses.size(); ++i)
    if (bus_var_[i] >= 0) {
      inequalities_.push_back({Inequality::Kind::VoltageLower, static_cast<int>(i), 0});
      inequalities_.push_back({Inequality::Kind::VoltageUpper, static_cast<int>(i), 0});
    }
  for (const BranchConstants& bc : branch_)
    if (bc.rating2_pu > 0.0) {
      inequalities_.push_back({Inequality::Kind::LineLoading, bc.line, 0});
      inequalities_.push_back({Inequality::Kind::LineLoading, bc.line, 1});
    }
  for (std::size_t i = 0; i < gas.junctions.size(); ++i)
    if (gas_p_var_[i] >= 0) {
      inequalities_.push_back({Inequality::Kind::GasPressureLower, static_cast<int>(i), 0});
      inequalities_.push_back({Inequality::Kind::GasPressureUpper, static_cast<int>(i), 0});
    }
  for (std::size_t i = 0; i < heat.junctions.size(); ++i)
    if (heat_t_var_[i] >= 0) {
      inequalities_.push_back({Inequality::Kind::HeatTempLower, static_cast<int>(i), 0});
      inequalities_.push_back({Inequality::Kind::HeatTempUpper, static_cast<int>(i), 0});
    }
  if (!el.buses.empty())
    inequalities_.push_back({Inequality::Kind::ElSlackImport, 0, 0});
  if (!gas.junctions.empty()) {
    inequalities_.push_back({Inequality::Kind::GasSlackLower, 0, 0});
    inequalities_.push_back({Inequality::Kind::GasSlackUpper, 0, 0});
  }
  for (std::size_t k = 0; k < d.heat_islands.size(); ++k)
    if (d.heat_islands[k].sources.empty() ||
        d.heat_islands[k].sources.front().kind == HeatSourceKind::Slack) {
      inequalities_.push_back({Inequality::Kind::HeatRefLower, static_cast<int>(k), 0});
      inequalities_.push_back({Inequality::Kind::HeatRefUpper, static_cast<int>(k), 0});
    }
}

void EquationSystem::enable_island_ties() {
  if (!tie_islands_.empty()) return;
  const DegradedNetwork& d = *degraded_;
  for (std::size_t k = 0; k < d.heat_islands.size(); ++k)
    if (!d.heat_islands[k].sources.empty() &&
        d.heat_islands[k].sources.front().kind == HeatSourceKind::Cp)
      tie_islands_.push_back(static_cast<int>(k));
  num_equations_ += static_cast<int>(tie_islands_.size());
}

Eigen::VectorXd EquationSystem::flat_start() const {
  const MultiEnergyNetwork& n = *degraded_->net;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(num_states_);
  for (std::size_t i = 0; i < n.electricity.buses.size(); ++i)
    if (bus_var_[i] >= 0) x[bus_var_[i]] = 1.0;
  for (std::size_t i = 0; i < n.gas.junctions.size(); ++i)
    if (gas_p_var_[i] >= 0) x[gas_p_var_[i]] = n.gas.slack_pressure_pa / 1e5;
  for (std::size_t i = 0; i < n.heat.junctions.size(); ++i)
    if (heat_p_var_[i] >= 0) x[heat_p_var_[i]] = n.heat.constants.ref_pressure_pa / 1e5;
  return x;
}

Eigen::VectorXd EquationSystem::scheduled_controls() const {
  Eigen::VectorXd u(controls_.size());
  for (std::size_t i = 0; i < controls_.size(); ++i) u[i] = controls_[i].sched;
  return u;
}

double EquationSystem::LinearExpr::value(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
  double v = constant;
  for (const auto& [i, c] : x_terms) v += c * x[i];
  for (const auto& [i, c] : u_terms) v += c * u[i];
  return v;
}

// Per-unit-control heat feed mass of a coupling point, kg/s at full input.
static double cp_feed_mass_coeff(const CouplingPoint& cp, const MultiEnergyNetwork& n) {
  const double denom = n.heat.constants.specific_heat * n.heat.constants.hx_delta_t_k;
  if (cp.kind == CouplingKind::Chp)
    return cp.eta_heat * cp.rating * n.gas.constants.energy_per_kwh *
           n.gas.constants.hhv_kwh_per_kg / denom;
  if (cp.kind == CouplingKind::PowerToHeat) return cp.eta_el * cp.rating / denom;
  return 0.0;
}

EquationSystem::LinearExpr EquationSystem::gas_slack_expr() const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& gas = n.gas;
  LinearExpr e;
  if (gas.junctions.empty()) return e;
  const int g = n.gas_junction_at(gas.slack_junction);
  for (std::size_t i = 0; i < gas.pipes.size(); ++i) {
    if (gas_f_var_[i] < 0) continue;
    if (n.gas_junction_at(gas.pipes[i].from) == g) e.x_terms.push_back({gas_f_var_[i], 1.0});
    if (n.gas_junction_at(gas.pipes[i].to) == g) e.x_terms.push_back({gas_f_var_[i], -1.0});
  }
  for (std::size_t i = 0; i < gas.demands.size(); ++i) {
    if (!d.gas_demand_live[i] || n.gas_junction_at(gas.demands[i].junction) != g) continue;
    e.constant += gas.demands[i].flow_kg_s;
    e.u_terms.push_back({gas_shed_of_[i], -gas.demands[i].flow_kg_s});
  }
  for (std::size_t i = 0; i < n.coupling_points.size(); ++i) {
    const CouplingPoint& cp = n.coupling_points[i];
    if (cp_ctrl_of_[i] < 0) continue;
    if (cp.kind == CouplingKind::Chp && n.gas_junction_at(cp.gas_junction) == g)
      e.u_terms.push_back({cp_ctrl_of_[i], cp.rating});
    if (cp.kind == CouplingKind::PowerToGas && d.cp_gas_leg[i] &&
        n.gas_junction_at(cp.gas_junction) == g)
      e.u_terms.push_back({cp_ctrl_of_[i], -cp.eta_gas * cp.rating /
                                                (gas.constants.energy_per_kwh *
                                                 gas.constants.hhv_kwh_per_kg)});
  }
  return e;
}

EquationSystem::LinearExpr EquationSystem::heat_ref_expr(int island) const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& heat = n.heat;
  const HeatIsland& isl = d.heat_islands[island];
  const int r = isl.ref_junction;
  const int ref_cp =
      (!isl.sources.empty() && isl.sources.front().kind == HeatSourceKind::Cp)
          ? isl.sources.front().cp
          : -1;
  LinearExpr e;
  for (std::size_t i = 0; i < heat.pipes.size(); ++i) {
    if (water_f_var_[i] < 0) continue;
    if (n.heat_junction_at(heat.pipes[i].from) == r) e.x_terms.push_back({water_f_var_[i], 1.0});
    if (n.heat_junction_at(heat.pipes[i].to) == r) e.x_terms.push_back({water_f_var_[i], -1.0});
  }
  const double denom = heat.constants.specific_heat * heat.constants.hx_delta_t_k;
  for (std::size_t i = 0; i < heat.demands.size(); ++i) {
    if (!d.heat_demand_live[i] || n.heat_junction_at(heat.demands[i].junction) != r) continue;
    const double fd = heat.demands[i].heat_w / denom;
    e.constant += fd;
    e.u_terms.push_back({heat_shed_of_[i], -fd});
  }
  for (std::size_t i = 0; i < n.coupling_points.size(); ++i) {
    if (cp_ctrl_of_[i] < 0 || !d.cp_heat_leg[i] || static_cast<int>(i) == ref_cp) continue;
    const CouplingPoint& cp = n.coupling_points[i];
    if (n.heat_junction_at(cp.heat_junction_b) != r) continue;
    e.u_terms.push_back({cp_ctrl_of_[i], -cp_feed_mass_coeff(cp, n)});
  }
  return e;
}

void EquationSystem::el_slack_power(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    double* p_pu, std::vector<Triplet>* dx,
                                    std::vector<Triplet>* du, int row, double scale) const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& el = n.electricity;
  const int slack = n.bus_at(el.slack_bus);
  const double base = el.base_va;

  auto volt = [&](int b) -> cd {
    return bus_var_[b] >= 0 ? cd(x[bus_var_[b]], x[bus_var_[b] + 1]) : cd(1.0, 0.0);
  };

  double p = 0.0;
  const Bus& sb = el.buses[slack];
  p += sb.shunt_g_s * z_base_;  // conj(Ys) |V|^2 with |V| = 1
  for (const BranchConstants& bc : branch_) {
    if (bc.a != slack && bc.b != slack) continue;
    const cd va = volt(bc.a), vb = volt(bc.b);
    const EndFlow endf = bc.a == slack ? bc.from_end(va, vb) : bc.to_end(va, vb);
    p += endf.s.real();
    const int other = bc.a == slack ? bc.b : bc.a;
    if (bus_var_[other] >= 0 && dx != nullptr) {
      const cd de = bc.a == slack ? endf.de_b : endf.de_a;
      const cd df = bc.a == slack ? endf.df_b : endf.df_a;
      dx->emplace_back(row, bus_var_[other], scale * de.real());
      dx->emplace_back(row, bus_var_[other] + 1, scale * df.real());
    }
  }
  for (std::size_t i = 0; i < el.demands.size(); ++i) {
    if (el_shed_of_[i] < 0 || n.bus_at(el.demands[i].bus) != slack) continue;
    p += (1.0 - u[el_shed_of_[i]]) * el.demands[i].p_w / base;
    if (du != nullptr) du->emplace_back(row, el_shed_of_[i], -scale * el.demands[i].p_w / base);
  }
  for (std::size_t i = 0; i < el.generators.size(); ++i) {
    if (n.bus_at(el.generators[i].bus) != slack || !d.generator_live[i]) continue;
    if (gen_ctrl_of_[i] >= 0) {
      p -= u[gen_ctrl_of_[i]] * el.generators[i].p_max_w / base;
      if (du != nullptr)
        du->emplace_back(row, gen_ctrl_of_[i], -scale * el.generators[i].p_max_w / base);
    } else {
      p -= el.generators[i].p_w / base;
    }
  }
  for (std::size_t i = 0; i < n.coupling_points.size(); ++i) {
    const CouplingPoint& cp = n.coupling_points[i];
    if (cp_ctrl_of_[i] < 0 || n.bus_at(cp.bus) != slack) continue;
    if (cp.kind == CouplingKind::Chp) {
      if (!d.cp_el_leg[i]) continue;
      const double coeff =
          cp.eta_el * cp.rating * n.gas.constants.energy_per_kwh * n.gas.constants.hhv_kwh_per_kg;
      p -= u[cp_ctrl_of_[i]] * coeff / base;
      if (du != nullptr) du->emplace_back(row, cp_ctrl_of_[i], -scale * coeff / base);
    } else {
      p += u[cp_ctrl_of_[i]] * cp.rating / base;
      if (du != nullptr) du->emplace_back(row, cp_ctrl_of_[i], scale * cp.rating / base);
    }
  }
  *p_pu = p;
}

void EquationSystem::electric_block(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    Eigen::VectorXd* f, Triplets* jx, Triplets* ju) const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& el = n.electricity;
  if (el.buses.empty()) return;
  const double base = el.base_va;

  auto volt = [&](int b) -> cd {
    return bus_var_[b] >= 0 ? cd(x[bus_var_[b]], x[bus_var_[b] + 1]) : cd(1.0, 0.0);
  };
  auto add_res = [&](int bus, cd v) {
    if (bus_eq_[bus] >= 0 && f != nullptr) {
      (*f)[bus_eq_[bus]] += v.real();
      (*f)[bus_eq_[bus] + 1] += v.imag();
    }
  };
  auto add_jx = [&](int bus, int col, cd dv) {
    if (bus_eq_[bus] >= 0 && jx != nullptr) {
      jx->add(bus_eq_[bus], col, dv.real());
      jx->add(bus_eq_[bus] + 1, col, dv.imag());
    }
  };
  auto add_ju = [&](int bus, int col, cd dv) {
    if (bus_eq_[bus] >= 0 && ju != nullptr) {
      ju->add(bus_eq_[bus], col, dv.real());
      ju->add(bus_eq_[bus] + 1, col, dv.imag());
    }
  };

  for (std::size_t i = 0; i < el.generators.size(); ++i) {
    if (!d.generator_live[i]) continue;
    const Generator& g = el.generators[i];
    const int b = n.bus_at(g.bus);
    if (gen_ctrl_of_[i] >= 0) {
      const double tan = g.p_w > 0.0 ? g.q_var / g.p_w : 0.0;
      const cd coeff = cd(1.0, tan) * g.p_max_w / base;
      add_res(b, coeff * u[gen_ctrl_of_[i]]);
      add_ju(b, gen_ctrl_of_[i], coeff);
    } else {
      add_res(b, cd(g.p_w, g.q_var) / base);
    }
  }
  for (std::size_t i = 0; i < el.demands.size(); ++i) {
    if (el_shed_of_[i] < 0) continue;
    const ElectricDemand& dm = el.demands[i];
    const int b = n.bus_at(dm.bus);
    const cd s = cd(dm.p_w, dm.q_var) / base;
    add_res(b, -(1.0 - u[el_shed_of_[i]]) * s);
    add_ju(b, el_shed_of_[i], s);
  }
  for (std::size_t i = 0; i < n.coupling_points.size(); ++i) {
    const CouplingPoint& cp = n.coupling_points[i];
    if (cp_ctrl_of_[i] < 0) continue;
    const int b = n.bus_at(cp.bus);
    if (cp.kind == CouplingKind::Chp) {
      if (!d.cp_el_leg[i]) continue;
      const double coeff = cp.eta_el * cp.rating * n.gas.constants.energy_per_kwh *
                           n.gas.constants.hhv_kwh_per_kg / base;
      add_res(b, cd(coeff * u[cp_ctrl_of_[i]], 0.0));
      add_ju(b, cp_ctrl_of_[i], cd(coeff, 0.0));
    } else {
      add_res(b, cd(-cp.rating / base * u[cp_ctrl_of_[i]], 0.0));
      add_ju(b, cp_ctrl_of_[i], cd(-cp.rating / base, 0.0));
    }
  }

  for (std::size_t i = 0; i < el.buses.size(); ++i) {
    if (bus_eq_[i] < 0) continue;
    const Bus& bus = el.buses[i];
    if (bus.shunt_g_s == 0.0 && bus.shunt_b_s == 0.0) continue;
    const cd ys = std::conj(cd(bus.shunt_g_s, bus.shunt_b_s)) * z_base_;
    const cd v = volt(static_cast<int>(i));
    add_res(static_cast<int>(i), -ys * std::norm(v));
    add_jx(static_cast<int>(i), bus_var_[i], -ys * 2.0 * v.real());
    add_jx(static_cast<int>(i), bus_var_[i] + 1, -ys * 2.0 * v.imag());
  }

  for (const BranchConstants& bc : branch_) {
    const cd va = volt(bc.a), vb = volt(bc.b);
    const EndFlow ef = bc.from_end(va, vb);
    const EndFlow et = bc.to_end(va, vb);
    add_res(bc.a, -ef.s);
    add_res(bc.b, -et.s);
    if (jx != nullptr) {
      if (bus_var_[bc.a] >= 0) {
        add_jx(bc.a, bus_var_[bc.a], -ef.de_a);
        add_jx(bc.a, bus_var_[bc.a] + 1, -ef.df_a);
        add_jx(bc.b, bus_var_[bc.a], -et.de_a);
        add_jx(bc.b, bus_var_[bc.a] + 1, -et.df_a);
      }
      if (bus_var_[bc.b] >= 0) {
        add_jx(bc.a, bus_var_[bc.b], -ef.de_b);
        add_jx(bc.a, bus_var_[bc.b] + 1, -ef.df_b);
        add_jx(bc.b, bus_var_[bc.b], -et.de_b);
        add_jx(bc.b, bus_var_[bc.b] + 1, -et.df_b);
      }
    }
  }
}

void EquationSystem::gas_block(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               Eigen::VectorXd* f, Triplets* jx, Triplets* ju) const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& gas = n.gas;
  if (gas.junctions.empty()) return;
  const double ms = scales_.gas_mass;
  const double gamma2 = gas.constants.z * gas.constants.r * gas.constants.t_k /
                        gas.constants.molar_mass;

  auto pressure_pa = [&](int j) -> double {
    return gas_p_var_[j] >= 0 ? x[gas_p_var_[j]] * 1e5 : gas.slack_pressure_pa;
  };

  for (std::size_t i = 0; i < gas.pipes.size(); ++i) {
    const int row = gas_eq_pipe_[i];
    if (row < 0) continue;
    const GasPipe& p = gas.pipes[i];
    const int a = n.gas_junction_at(p.from);
    const int b = n.gas_junction_at(p.to);
    const double area = pipe_area(p.diameter_m);
    const double k = p.length_m / p.diameter_m * gamma2 / (area * area);
    const Friction fr = gas_friction(p, gas.constants);
    const double fv = x[gas_f_var_[i]];
    if (f != nullptr)
      (*f)[row] = (pressure_pa(a) - pressure_pa(b) - k * fr.value(fv)) / 1e5;
    if (jx != nullptr) {
      if (gas_p_var_[a] >= 0) jx->add(row, gas_p_var_[a], 1.0);
      if (gas_p_var_[b] >= 0) jx->add(row, gas_p_var_[b], -1.0);
      jx->add(row, gas_f_var_[i], -k * fr.slope(fv) / 1e5);
    }

    // pipe flow enters the junction balances
    const int ra = gas_eq_mass_[a], rb = gas_eq_mass_[b];
    if (ra >= 0) {
      if (f != nullptr) (*f)[ra] -= fv / ms;
      if (jx != nullptr) jx->add(ra, gas_f_var_[i], -1.0 / ms);
    }
    if (rb >= 0) {
      if (f != nullptr) (*f)[rb] += fv / ms;
      if (jx != nullptr) jx->add(rb, gas_f_var_[i], 1.0 / ms);
    }
  }

  for (std::size_t i = 0; i < gas.sources.size(); ++i) {
    if (!d.gas_source_live[i]) continue;
    const int row = gas_eq_mass_[n.gas_junction_at(gas.sources[i].junction)];
    if (row >= 0 && f != nullptr) (*f)[row] += gas.sources[i].flow_kg_s / ms;
  }
  for (std::size_t i = 0; i < gas.demands.size(); ++i) {
    if (gas_shed_of_[i] < 0) continue;
    const int row = gas_eq_mass_[n.gas_junction_at(gas.demands[i].junction)];
    if (row < 0) continue;
    const double fd = gas.demands[i].flow_kg_s;
    if (f != nullptr) (*f)[row] -= (1.0 - u[gas_shed_of_[i]]) * fd / ms;
    if (ju != nullptr) ju->add(row, gas_shed_of_[i], fd / ms);
  }
  for (std::size_t i = 0; i < n.coupling_points.size(); ++i) {
    const CouplingPoint& cp = n.coupling_points[i];
    if (cp_ctrl_of_[i] < 0) continue;
    if (cp.kind == CouplingKind::Chp) {
      const int row = gas_eq_mass_[n.gas_junction_at(cp.gas_junction)];
      if (row < 0) continue;
      if (f != nullptr) (*f)[row] -= u[cp_ctrl_of_[i]] * cp.rating / ms;
      if (ju != nullptr) ju->add(row, cp_ctrl_of_[i], -cp.rating / ms);
    } else if (cp.kind == CouplingKind::PowerToGas && d.cp_gas_leg[i]) {
      const int row = gas_eq_mass_[n.gas_junction_at(cp.gas_junction)];
      if (row < 0) continue;
      const double coeff = cp.eta_gas * cp.rating /
                           (gas.constants.energy_per_kwh * gas.constants.hhv_kwh_per_kg);
      if (f != nullptr) (*f)[row] += u[cp_ctrl_of_[i]] * coeff / ms;
      if (ju != nullptr) ju->add(row, cp_ctrl_of_[i], coeff / ms);
    }
  }
}

void EquationSystem::heat_block(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                Eigen::VectorXd* f, Triplets* jx, Triplets* ju) const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& heat = n.heat;
  const HeatConstants& hc = heat.constants;
  if (heat.junctions.empty()) return;
  const double ms = scales_.heat_mass;
  const double es = scales_.heat_energy;
  const double c = hc.specific_heat;

  auto temp_k = [&](int j) -> double {
    return heat_t_var_[j] >= 0 ? hc.supply_temp_k + x[heat_t_var_[j]] : hc.supply_temp_k;
  };
  auto pressure_pa = [&](int j) -> double {
    return heat_p_var_[j] >= 0 ? x[heat_p_var_[j]] * 1e5 : hc.ref_pressure_pa;
  };

  for (std::size_t i = 0; i < heat.pipes.size(); ++i) {
    const int row = water_eq_pipe_[i];
    if (row < 0) continue;
    const WaterPipe& p = heat.pipes[i];
    const int a = n.heat_junction_at(p.from);
    const int b = n.heat_junction_at(p.to);
    const double k = p.length_m * hc.water_density / (2.0 * p.diameter_m);
    const Friction fr = water_friction(p, hc);
    const double fv = x[water_f_var_[i]];
    if (f != nullptr)
      (*f)[row] = (pressure_pa(a) - pressure_pa(b) + k * fr.value(fv)) / 1e5;
    if (jx != nullptr) {
      if (heat_p_var_[a] >= 0) jx->add(row, heat_p_var_[a], 1.0);
      if (heat_p_var_[b] >= 0) jx->add(row, heat_p_var_[b], -1.0);
      jx->add(row, water_f_var_[i], k * fr.slope(fv) / 1e5);
    }

    const int ra = heat_eq_mass_[a], rb = heat_eq_mass_[b];
    if (ra >= 0) {
      if (f != nullptr) (*f)[ra] -= fv / ms;
      if (jx != nullptr) jx->add(ra, water_f_var_[i], -1.0 / ms);
    }
    if (rb >= 0) {
      if (f != nullptr) (*f)[rb] += fv / ms;
      if (jx != nullptr) jx->add(rb, water_f_var_[i], 1.0 / ms);
    }

    const double ta = temp_k(a), tb = temp_k(b);
    const ThermalFlux tf = thermal_flux(p, fv, ta, tb, hc, options_);
    const int ea = heat_eq_energy_[a], eb = heat_eq_energy_[b];
    if (ea >= 0) {
      if (f != nullptr) (*f)[ea] += tf.phi_a / es;
      if (jx != nullptr) {
        jx->add(ea, water_f_var_[i], tf.da_f / es);
        if (heat_t_var_[a] >= 0) jx->add(ea, heat_t_var_[a], tf.da_ta / es);
        if (heat_t_var_[b] >= 0) jx->add(ea, heat_t_var_[b], tf.da_tb / es);
      }
    }
    if (eb >= 0) {
      if (f != nullptr) (*f)[eb] += tf.phi_b / es;
      if (jx != nullptr) {
        jx->add(eb, water_f_var_[i], tf.db_f / es);
        if (heat_t_var_[a] >= 0) jx->add(eb, heat_t_var_[a], tf.db_ta / es);
        if (heat_t_var_[b] >= 0) jx->add(eb, heat_t_var_[b], tf.db_tb / es);
      }
    }
  }

  const double denom = c * hc.hx_delta_t_k;
  for (std::size_t i = 0; i < heat.demands.size(); ++i) {
    if (heat_shed_of_[i] < 0) continue;
    const int j = n.heat_junction_at(heat.demands[i].junction);
    const double fd = heat.demands[i].heat_w / denom;
    const double served = (1.0 - u[heat_shed_of_[i]]) * fd;
    const int rm = heat_eq_mass_[j], re = heat_eq_energy_[j];
    if (rm >= 0) {
      if (f != nullptr) (*f)[rm] -= served / ms;
      if (ju != nullptr) ju->add(rm, heat_shed_of_[i], fd / ms);
    }
    if (re >= 0) {
      const double tj = temp_k(j);
      if (f != nullptr) (*f)[re] -= c * served * tj / es;
      if (ju != nullptr) ju->add(re, heat_shed_of_[i], c * fd * tj / es);
      if (jx != nullptr && heat_t_var_[j] >= 0)
        jx->add(re, heat_t_var_[j], -c * served / es);
    }
  }

  for (std::size_t i = 0; i < n.coupling_points.size(); ++i) {
    if (cp_ctrl_of_[i] < 0 || !d.cp_heat_leg[i]) continue;
    const CouplingPoint& cp = n.coupling_points[i];
    const int j = n.heat_junction_at(cp.heat_junction_b);
    const double coeff = cp_feed_mass_coeff(cp, n);
    const int rm = heat_eq_mass_[j], re = heat_eq_energy_[j];
    if (rm >= 0) {
      if (f != nullptr) (*f)[rm] += u[cp_ctrl_of_[i]] * coeff / ms;
      if (ju != nullptr) ju->add(rm, cp_ctrl_of_[i], coeff / ms);
    }
    if (re >= 0) {
      if (f != nullptr) (*f)[re] += u[cp_ctrl_of_[i]] * coeff * c * hc.supply_temp_k / es;
      if (ju != nullptr) ju->add(re, cp_ctrl_of_[i], coeff * c * hc.supply_temp_k / es);
    }
  }

  // temperature regularisation pins junctions without throughflow to supply
  const double mu = options_.t_reg_kg_s;
  for (std::size_t j = 0; j < heat.junctions.size(); ++j) {
    const int re = heat_eq_energy_[j];
    if (re < 0) continue;
    if (f != nullptr) (*f)[re] -= c * mu * x[heat_t_var_[j]] / es;
    if (jx != nullptr) jx->add(re, heat_t_var_[j], -c * mu / es);
  }

  // island ties: implied reference feed equals the reference unit's output
  for (std::size_t t = 0; t < tie_islands_.size(); ++t) {
    const int row = num_equations_ - static_cast<int>(tie_islands_.size()) + static_cast<int>(t);
    const int k = tie_islands_[t];
    const HeatIsland& isl = d.heat_islands[k];
    const int ref_cp = isl.sources.front().cp;
    const LinearExpr expr = heat_ref_expr(k);
    const double coeff = cp_feed_mass_coeff(n.coupling_points[ref_cp], n);
    if (f != nullptr) {
      double v = expr.value(x, u) - u[cp_ctrl_of_[ref_cp]] * coeff;
      (*f)[row] = v / ms;
    }
    if (jx != nullptr)
      for (const auto& [col, cv] : expr.x_terms) jx->add(row, col, cv / ms);
    if (ju != nullptr) {
      for (const auto& [col, cv] : expr.u_terms) ju->add(row, col, cv / ms);
      ju->add(row, cp_ctrl_of_[ref_cp], -coeff / ms);
    }
  }
}

void EquationSystem::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          Eigen::VectorXd& f) const {
  f = Eigen::VectorXd::Zero(num_equations_);
  electric_block(x, u, &f, nullptr, nullptr);
  gas_block(x, u, &f, nullptr, nullptr);
  heat_block(x, u, &f, nullptr, nullptr);
}

void EquationSystem::jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                              Eigen::SparseMatrix<double>* jx,
                              Eigen::SparseMatrix<double>* ju) const {
  std::vector<Triplet> tx, tu;
  Triplets wx{&tx}, wu{&tu};
  electric_block(x, u, nullptr, jx ? &wx : nullptr, ju ? &wu : nullptr);
  gas_block(x, u, nullptr, jx ? &wx : nullptr, ju ? &wu : nullptr);
  heat_block(x, u, nullptr, jx ? &wx : nullptr, ju ? &wu : nullptr);
  if (jx != nullptr) {
    jx->resize(num_equations_, num_states_);
    jx->setFromTriplets(tx.begin(), tx.end());
  }
  if (ju != nullptr) {
    ju->resize(num_equations_, static_cast<int>(controls_.size()));
    ju->setFromTriplets(tu.begin(), tu.end());
  }
}

void EquationSystem::eval_inequalities(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                       Eigen::VectorXd& h) const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const auto& el = n.electricity;
  const auto& gas = n.gas;
  const auto& heat = n.heat;
  h.resize(inequalities_.size());

  auto volt = [&](int b) -> cd {
    return bus_var_[b] >= 0 ? cd(x[bus_var_[b]], x[bus_var_[b] + 1]) : cd(1.0, 0.0);
  };

  for (std::size_t r = 0; r < inequalities_.size(); ++r) {
    const Inequality& q = inequalities_[r];
    switch (q.kind) {
      case Inequality::Kind::VoltageLower: {
        const Bus& b = el.buses[q.unit];
        h[r] = std::norm(volt(q.unit)) - b.vmin_pu * b.vmin_pu;
        break;
      }
      case Inequality::Kind::VoltageUpper: {
        const Bus& b = el.buses[q.unit];
        h[r] = b.vmax_pu * b.vmax_pu - std::norm(volt(q.unit));
        break;
      }
      case Inequality::Kind::LineLoading: {
        const BranchConstants* bc = nullptr;
        for (const auto& cand : branch_)
          if (cand.line == q.unit) bc = &cand;
        const cd va = volt(bc->a), vb = volt(bc->b);
        const EndFlow endf = q.dir == 0 ? bc->from_end(va, vb) : bc->to_end(va, vb);
        h[r] = bc->rating2_pu - std::norm(endf.s);
        break;
      }
      case Inequality::Kind::GasPressureLower:
        h[r] = x[gas_p_var_[q.unit]] - gas.junctions[q.unit].pmin_pa / 1e5;
        break;
      case Inequality::Kind::GasPressureUpper:
        h[r] = gas.junctions[q.unit].pmax_pa / 1e5 - x[gas_p_var_[q.unit]];
        break;
      case Inequality::Kind::HeatTempLower:
        h[r] = x[heat_t_var_[q.unit]] -
               (heat.junctions[q.unit].tmin_k - heat.constants.supply_temp_k);
        break;
      case Inequality::Kind::HeatTempUpper:
        h[r] = (heat.junctions[q.unit].tmax_k - heat.constants.supply_temp_k) -
               x[heat_t_var_[q.unit]];
        break;
      case Inequality::Kind::ElSlackImport: {
        double p = 0.0;
        el_slack_power(x, u, &p, nullptr, nullptr, 0, 1.0);
        h[r] = n.schedule.slack_p_w / el.base_va - p;
        break;
      }
      case Inequality::Kind::GasSlackLower:
        h[r] = gas_slack_expr().value(x, u) / scales_.gas_mass;
        break;
      case Inequality::Kind::GasSlackUpper:
        h[r] = (n.schedule.gas_slack_kg_s - gas_slack_expr().value(x, u)) / scales_.gas_mass;
        break;
      case Inequality::Kind::HeatRefLower:
        h[r] = heat_ref_expr(q.unit).value(x, u) / scales_.heat_mass;
        break;
      case Inequality::Kind::HeatRefUpper: {
        double cap = 0.0;
        for (std::size_t i = 0; i < heat.sources.size(); ++i)
          if (degraded_->heat_source_live[i] &&
              heat.sources[i].junction == heat.slack_junction)
            cap += heat.sources[i].max_flow_kg_s;
        h[r] = (cap - heat_ref_expr(q.unit).value(x, u)) / scales_.heat_mass;
        break;
      }
    }
  }
}

void EquationSystem::inequality_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                         Eigen::SparseMatrix<double>* hx,
                                         Eigen::SparseMatrix<double>* hu) const {
  std::vector<Triplet> tx, tu;

  auto volt = [&](int b) -> cd {
    return bus_var_[b] >= 0 ? cd(x[bus_var_[b]], x[bus_var_[b] + 1]) : cd(1.0, 0.0);
  };

  for (std::size_t r = 0; r < inequalities_.size(); ++r) {
    const Inequality& q = inequalities_[r];
    const int row = static_cast<int>(r);
    switch (q.kind) {
      case Inequality::Kind::VoltageLower:
      case Inequality::Kind::VoltageUpper: {
        const double sgn = q.kind == Inequality::Kind::VoltageLower ? 1.0 : -1.0;
        const cd v = volt(q.unit);
        tx.emplace_back(row, bus_var_[q.unit], sgn * 2.0 * v.real());
        tx.emplace_back(row, bus_var_[q.unit] + 1, sgn * 2.0 * v.imag());
        break;
      }
      case Inequality::Kind::LineLoading: {
        const BranchConstants* bc = nullptr;
        for (const auto& cand : branch_)
          if (cand.line == q.unit) bc = &cand;
        const cd va = volt(bc->a), vb = volt(bc->b);
        const EndFlow endf = q.dir == 0 ? bc->from_end(va, vb) : bc->to_end(va, vb);
        auto chain = [&](int col, const cd& ds) {
          if (col >= 0)
            tx.emplace_back(row, col,
                            -2.0 * (endf.s.real() * ds.real() + endf.s.imag() * ds.imag()));
        };
        if (bus_var_[bc->a] >= 0) {
          chain(bus_var_[bc->a], endf.de_a);
          chain(bus_var_[bc->a] + 1, endf.df_a);
        }
        if (bus_var_[bc->b] >= 0) {
          chain(bus_var_[bc->b], endf.de_b);
          chain(bus_var_[bc->b] + 1, endf.df_b);
        }
        break;
      }
      case Inequality::Kind::GasPressureLower:
        tx.emplace_back(row, gas_p_var_[q.unit], 1.0);
        break;
      case Inequality::Kind::GasPressureUpper:
        tx.emplace_back(row, gas_p_var_[q.unit], -1.0);
        break;
      case Inequality::Kind::HeatTempLower:
        tx.emplace_back(row, heat_t_var_[q.unit], 1.0);
        break;
      case Inequality::Kind::HeatTempUpper:
        tx.emplace_back(row, heat_t_var_[q.unit], -1.0);
        break;
      case Inequality::Kind::ElSlackImport: {
        double p = 0.0;
        el_slack_power(x, u, &p, &tx, &tu, row, -1.0);
        break;
      }
      case Inequality::Kind::GasSlackLower:
      case Inequality::Kind::GasSlackUpper: {
        const double sgn = q.kind == Inequality::Kind::GasSlackLower ? 1.0 : -1.0;
        const LinearExpr e = gas_slack_expr();
        for (const auto& [col, cv] : e.x_terms)
          tx.emplace_back(row, col, sgn * cv / scales_.gas_mass);
        for (const auto& [col, cv] : e.u_terms)
          tu.emplace_back(row, col, sgn * cv / scales_.gas_mass);
        break;
      }
      case Inequality::Kind::HeatRefLower:
      case Inequality::Kind::HeatRefUpper: {
        const double sgn = q.kind == Inequality::Kind::HeatRefLower ? 1.0 : -1.0;
        const LinearExpr e = heat_ref_expr(q.unit);
        for (const auto& [col, cv] : e.x_terms)
          tx.emplace_back(row, col, sgn * cv / scales_.heat_mass);
        for (const auto& [col, cv] : e.u_terms)
          tu.emplace_back(row, col, sgn * cv / scales_.heat_mass);
        break;
      }
    }
  }

  const int rows = static_cast<int>(inequalities_.size());
  if (hx != nullptr) {
    hx->resize(rows, num_states_);
    hx->setFromTriplets(tx.begin(), tx.end());
  }
  if (hu != nullptr) {
    hu->resize(rows, static_cast<int>(controls_.size()));
    hu->setFromTriplets(tu.begin(), tu.end());
  }
}

double EquationSystem::objective_w(const Eigen::VectorXd& u) const {
  double v = degraded_->dropped_total_w();
  for (std::size_t i = 0; i < controls_.size(); ++i)
    if (controls_[i].shed_power_w > 0.0) v += u[i] * controls_[i].shed_power_w;
  return v;
}

void EquationSystem::objective_gradient_w(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const {
  (void)u;
  grad = Eigen::VectorXd::Zero(controls_.size());
  for (std::size_t i = 0; i < controls_.size(); ++i)
    if (controls_[i].shed_power_w > 0.0) grad[i] = controls_[i].shed_power_w;
}

SteadyState EquationSystem::extract_state(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u) const {
  const MultiEnergyNetwork& n = *degraded_->net;
  const DegradedNetwork& d = *degraded_;
  const auto& el = n.electricity;
  const auto& gas = n.gas;
  const auto& heat = n.heat;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  SteadyState s;
  auto volt = [&](int b) -> cd {
    return bus_var_[b] >= 0 ? cd(x[bus_var_[b]], x[bus_var_[b] + 1]) : cd(1.0, 0.0);
  };

  const int slack_bus = el.buses.empty() ? -1 : n.bus_at(el.slack_bus);
  s.bus_voltage_pu.assign(el.buses.size(), cd(nan, nan));
  for (std::size_t i = 0; i < el.buses.size(); ++i)
    if (d.bus_live[i]) s.bus_voltage_pu[i] = volt(static_cast<int>(i));
  s.line_flow_from_va.assign(el.lines.size(), cd(nan, nan));
  s.line_flow_to_va.assign(el.lines.size(), cd(nan, nan));
  for (const BranchConstants& bc : branch_) {
    const cd va = volt(bc.a), vb = volt(bc.b);
    s.line_flow_from_va[bc.line] = bc.from_end(va, vb).s * el.base_va;
    s.line_flow_to_va[bc.line] = bc.to_end(va, vb).s * el.base_va;
  }
  if (slack_bus >= 0) {
    double p = 0.0;
    el_slack_power(x, u, &p, nullptr, nullptr, 0, 1.0);
    double qsum = 0.0;
    {
      const Bus& sb = el.buses[slack_bus];
      qsum -= sb.shunt_b_s * z_base_;  // Im(conj(Ys)) |V|^2
      for (const BranchConstants& bc : branch_) {
        if (bc.a != slack_bus && bc.b != slack_bus) continue;
        const cd va = volt(bc.a), vb = volt(bc.b);
        qsum += (bc.a == slack_bus ? bc.from_end(va, vb).s : bc.to_end(va, vb).s).imag();
      }
      for (std::size_t i = 0; i < el.demands.size(); ++i)
        if (el_shed_of_[i] >= 0 && n.bus_at(el.demands[i].bus) == slack_bus)
          qsum += (1.0 - u[el_shed_of_[i]]) * el.demands[i].q_var / el.base_va;
      for (std::size_t i = 0; i < el.generators.size(); ++i)
        if (d.generator_live[i] && n.bus_at(el.generators[i].bus) == slack_bus) {
          const Generator& g = el.generators[i];
          const double tan = g.p_w > 0.0 ? g.q_var / g.p_w : 0.0;
          qsum -= gen_ctrl_of_[i] >= 0 ? u[gen_ctrl_of_[i]] * g.p_max_w * tan / el.base_va
                                       : g.q_var / el.base_va;
        }
    }
    s.slack_injection_va = cd(p, qsum) * el.base_va;
  }

  const int slack_gj = gas.junctions.empty() ? -1 : n.gas_junction_at(gas.slack_junction);
  s.gas_pressure_pa.assign(gas.junctions.size(), nan);
  for (std::size_t i = 0; i < gas.junctions.size(); ++i) {
    if (!d.gas_junction_live.empty() && d.gas_junction_live[i])
      s.gas_pressure_pa[i] = static_cast<int>(i) == slack_gj ? gas.slack_pressure_pa
                                                             : x[gas_p_var_[i]] * 1e5;
  }
  s.gas_pipe_flow_kg_s.assign(gas.pipes.size(), nan);
  for (std::size_t i = 0; i < gas.pipes.size(); ++i)
    if (gas_f_var_[i] >= 0) s.gas_pipe_flow_kg_s[i] = x[gas_f_var_[i]];
  if (slack_gj >= 0) s.gas_slack_flow_kg_s = gas_slack_expr().value(x, u);

  s.heat_pressure_pa.assign(heat.junctions.size(), nan);
  s.heat_temperature_k.assign(heat.junctions.size(), nan);
  for (std::size_t i = 0; i < heat.junctions.size(); ++i) {
    if (d.heat_junction_live.empty() || !d.heat_junction_live[i]) continue;
    s.heat_pressure_pa[i] =
        heat_p_var_[i] >= 0 ? x[heat_p_var_[i]] * 1e5 : heat.constants.ref_pressure_pa;
    s.heat_temperature_k[i] = heat_t_var_[i] >= 0
                                  ? heat.constants.supply_temp_k + x[heat_t_var_[i]]
                                  : heat.constants.supply_temp_k;
  }
  s.water_pipe_flow_kg_s.assign(heat.pipes.size(), nan);
  s.water_pipe_loss_w.assign(heat.pipes.size(), nan);
  for (std::size_t i = 0; i < heat.pipes.size(); ++i) {
    if (water_f_var_[i] < 0) continue;
    const WaterPipe& p = heat.pipes[i];
    const double fv = x[water_f_var_[i]];
    s.water_pipe_flow_kg_s[i] = fv;
    const double ta = s.heat_temperature_k[n.heat_junction_at(p.from)];
    const double tb = s.heat_temperature_k[n.heat_junction_at(p.to)];
    const double fabs = std::sqrt(fv * fv + options_.abs_eps_kg_s * options_.abs_eps_kg_s);
    s.water_pipe_loss_w[i] = -2.0 * kPi * p.insulation_w_mk * p.length_m * fabs *
                             (0.5 * (ta + tb) - heat.constants.t_ext_k);
  }
  for (std::size_t k = 0; k < d.heat_islands.size(); ++k)
    if (d.heat_islands[k].has_slack)
      s.heat_slack_flow_kg_s += heat_ref_expr(static_cast<int>(k)).value(x, u);

  s.cp_input.assign(n.coupling_points.size(), 0.0);
  s.cp_p_el_w.assign(n.coupling_points.size(), 0.0);
  s.cp_heat_w.assign(n.coupling_points.size(), 0.0);
  s.cp_gas_kg_s.assign(n.coupling_points.size(), 0.0);
  for (std::size_t i = 0; i < n.coupling_points.size(); ++i) {
    if (cp_ctrl_of_[i] < 0) continue;
    const CouplingPoint& cp = n.coupling_points[i];
    const double in = u[cp_ctrl_of_[i]] * cp.rating;
    s.cp_input[i] = in;
    switch (cp.kind) {
      case CouplingKind::Chp: {
        const ChpOutput out = chp_conversion(in, cp.eta_el, cp.eta_heat, gas.constants);
        if (d.cp_el_leg[i]) s.cp_p_el_w[i] = out.p_el_w;
        if (d.cp_heat_leg[i]) s.cp_heat_w[i] = out.h_he_w;
        s.cp_gas_kg_s[i] = -in;
        break;
      }
      case CouplingKind::PowerToHeat:
        s.cp_p_el_w[i] = -in;
        if (d.cp_heat_leg[i]) s.cp_heat_w[i] = p2h_conversion(in, cp.eta_el);
        break;
      case CouplingKind::PowerToGas:
        s.cp_p_el_w[i] = -in;
        if (d.cp_gas_leg[i]) s.cp_gas_kg_s[i] = p2g_conversion(in, cp.eta_gas, gas.constants);
        break;
    }
  }
  return s;
}

}  // namespace mesres
