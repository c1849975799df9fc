#include <cmath>
#include <complex>

#include "mesres/flow.hpp"

namespace mesres {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLambdaCap = 1e8;

double pipe_area(double diameter_m) { return 0.25 * kPi * diameter_m * diameter_m; }

double prandtl_nikuradse(double inner_diameter_m, double roughness_m) {
  const double t = 2.0 * std::log10(3.71 * inner_diameter_m / roughness_m);
  return 1.0 / (t * t);
}

// lambda f |f| with lambda = 64/Re + PrNi expands to 64 eta A / D * f +
// PrNi f |f|, finite and C1 at f = 0.
double friction_product(double f, double diameter_m, double inner_diameter_m,
                        double roughness_m, double viscosity_pa_s) {
  const double a = pipe_area(diameter_m);
  const double laminar = 64.0 * viscosity_pa_s * a / diameter_m;
  return laminar * f + prandtl_nikuradse(inner_diameter_m, roughness_m) * f * std::abs(f);
}

}  // namespace

double friction_factor(double flow_kg_s, double diameter_m, double inner_diameter_m,
                       double roughness_m, double viscosity_pa_s) {
  const double a = pipe_area(diameter_m);
  const double re = std::abs(flow_kg_s) * diameter_m / (viscosity_pa_s * a);
  const double rough = prandtl_nikuradse(inner_diameter_m, roughness_m);
  if (re <= 0.0) return kLambdaCap;
  return std::min(64.0 / re + rough, kLambdaCap);
}

double weymouth_residual(const GasPipe& pipe, const GasConstants& constants, double p_a_pa,
                         double p_b_pa, double f_kg_s) {
  const double gamma2 = constants.z * constants.r * constants.t_k / constants.molar_mass;
  const double a = pipe_area(pipe.diameter_m);
  const double k = pipe.length_m / pipe.diameter_m * gamma2 / (a * a);
  return (p_a_pa - p_b_pa) - k * friction_product(f_kg_s, pipe.diameter_m,
                                                  pipe.inner_diameter_m, pipe.roughness_m,
                                                  constants.viscosity);
}

double darcy_weisbach_residual(const WaterPipe& pipe, const HeatConstants& constants,
                               double p_a_pa, double p_b_pa, double f_kg_s) {
  const double k = pipe.length_m * constants.water_density / (2.0 * pipe.diameter_m);
  return (p_a_pa - p_b_pa) + k * friction_product(f_kg_s, pipe.diameter_m,
                                                  pipe.inner_diameter_m, pipe.roughness_m,
                                                  constants.water_viscosity);
}

double heat_loss(const WaterPipe& pipe, double f_kg_s, double t_a_k, double t_b_k,
                 double t_ext_k) {
  const double mean = 0.5 * (t_a_k + t_b_k);
  return -2.0 * kPi * pipe.insulation_w_mk * pipe.length_m * f_kg_s * (mean - t_ext_k);
}

ChpOutput chp_conversion(double f_gas_kg_s, double eta_el, double eta_heat,
                         const GasConstants& constants) {
  const double fuel_w = f_gas_kg_s * constants.energy_per_kwh * constants.hhv_kwh_per_kg;
  return {eta_el * fuel_w, eta_heat * fuel_w};
}

double p2h_conversion(double p_el_w, double eta_el) { return eta_el * p_el_w; }

double p2g_conversion(double p_el_w, double eta_gas, const GasConstants& constants) {
  return eta_gas * p_el_w / (constants.energy_per_kwh * constants.hhv_kwh_per_kg);
}

std::vector<std::complex<double>> electric_mismatch(const MultiEnergyNetwork& net,
                                                    const std::vector<std::complex<double>>& v_pu) {
  using cd = std::complex<double>;
  const ElectricGrid& grid = net.electricity;
  if (v_pu.size() != grid.buses.size())
    throw StructuralError("electric_mismatch: voltage vector length " +
                          std::to_string(v_pu.size()) + " does not match bus count " +
                          std::to_string(grid.buses.size()));
  const double s_base = grid.base_va;
  const double z_base = grid.base_v * grid.base_v / s_base;

  std::vector<cd> mismatch(grid.buses.size(), cd(0.0, 0.0));
  for (const Generator& g : grid.generators)
    mismatch[net.bus_index.at(g.bus)] += cd(g.p_w, g.q_var) / s_base;
  for (const ElectricDemand& d : grid.demands)
    mismatch[net.bus_index.at(d.bus)] -= cd(d.p_w, d.q_var) / s_base;
  for (const CouplingPoint& cp : net.coupling_points) {
    if (cp.kind == CouplingKind::Chp) {
      const ChpOutput out = chp_conversion(cp.dispatch, cp.eta_el, cp.eta_heat,
                                           net.gas.constants);
      mismatch[net.bus_index.at(cp.bus)] += cd(out.p_el_w / s_base, 0.0);
    } else {
      mismatch[net.bus_index.at(cp.bus)] -= cd(cp.dispatch / s_base, 0.0);
    }
  }

  for (std::size_t i = 0; i < grid.buses.size(); ++i) {
    const Bus& bus = grid.buses[i];
    const cd ys(bus.shunt_g_s * z_base, bus.shunt_b_s * z_base);
    mismatch[i] -= std::conj(ys) * std::norm(v_pu[i]);
  }

  for (const Line& line : grid.lines) {
    const int a = net.bus_index.at(line.from);
    const int b = net.bus_index.at(line.to);
    const cd z(line.r_ohm / z_base, line.x_ohm / z_base);
    const cd y = 1.0 / z;
    const cd yc(0.0, 0.5 * line.b_s * z_base);
    const cd t = std::polar(line.tap, line.shift_rad);
    const cd vi = v_pu[a];
    const cd vj = v_pu[b];
    const cd s_ij = std::conj(y + yc) * std::norm(vi) / std::norm(t) -
                    std::conj(y) * vi * std::conj(vj) / t;
    const cd s_ji = std::conj(y + yc) * std::norm(vj) -
                    std::conj(y) * std::conj(vi) * vj / std::conj(t);
    mismatch[a] -= s_ij;
    mismatch[b] -= s_ji;
  }

  // The slack bus entry is replaced by the injection that closes its balance.
  const int slack = net.bus_index.at(grid.slack_bus);
  mismatch[slack] = -mismatch[slack];
  return mismatch;
}

}  // namespace mesres
