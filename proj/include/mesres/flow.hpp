#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mesres/network.hpp"
#include "mesres/state.hpp"
#include "mesres/vitality.hpp"

namespace mesres {

// --- scalar physical laws -----------------------------------------------------

// Pipe friction factor: laminar part 64/Re plus the Prandtl-Nikuradse rough
// limit 1/(2 log10(3.71 D_in/eps))^2. The laminar part diverges at zero flow
// and is capped; the residual laws below use the algebraically expanded
// product, which stays finite and smooth through f = 0.
double friction_factor(double flow_kg_s, double diameter_m, double inner_diameter_m,
                       double roughness_m, double viscosity_pa_s);

// (p_a - p_b) - (lambda L / D) (Gamma^2 / A^2) f |f| with Gamma^2 = Z R T / m,
// evaluated with the laminar term expanded so the residual is C1 in f.
double weymouth_residual(const GasPipe& pipe, const GasConstants& constants, double p_a_pa,
                         double p_b_pa, double f_kg_s);

// (p_a - p_b) - lambda (L rho / 2) (-f |f| / D), same expansion of lambda.
double darcy_weisbach_residual(const WaterPipe& pipe, const HeatConstants& constants,
                               double p_a_pa, double p_b_pa, double f_kg_s);

// H_loss = -2 pi k L f ((T_a + T_b)/2 - T_ext); negative when the pipe loses
// heat to the surroundings.
double heat_loss(const WaterPipe& pipe, double f_kg_s, double t_a_k, double t_b_k,
                 double t_ext_k);

struct ChpOutput {
  double p_el_w = 0.0;
  double h_he_w = 0.0;
};

// CHP laws, injection-positive: P_el = eta_el f u HHV and H_he = eta_heat f u
// HHV with u the J-per-kWh unit constant.
ChpOutput chp_conversion(double f_gas_kg_s, double eta_el, double eta_heat,
                         const GasConstants& constants);

// Power-to-heat: H_he = eta_el P.
double p2h_conversion(double p_el_w, double eta_el);

// Power-to-gas: f_gas = eta_gas P / (u HHV).
double p2g_conversion(double p_el_w, double eta_gas, const GasConstants& constants);

// Complex power mismatch per bus for given per-unit voltages, with generators,
// demands and coupling points at their scheduled levels. Non-slack entries are
// the balance residuals; the slack entry carries the implied slack injection.
std::vector<std::complex<double>> electric_mismatch(const MultiEnergyNetwork& net,
                                                    const std::vector<std::complex<double>>& v_pu);

// --- stacked equation system ----------------------------------------------------

struct FlowOptions {
  double tolerance = 1e-9;    // infinity norm of the scaled residual
  int max_iterations = 100;
  double upwind_eps_kg_s = 1e-3;   // thermal upwind blending width
  double abs_eps_kg_s = 1e-6;      // smooth |f| width inside the loss law
  double t_reg_kg_s = 1e-4;        // pulls unserved junction temperatures to supply
  double lp_max_percent = 100.0;   // line loading cap relative to the line rating
};

// Scaling constants of the stacked residual vector (documented so external
// tolerances are meaningful): electric equations in per unit, pressures in
// bar, gas mass in 0.1 kg/s, heat mass in kg/s, heat energy in C * 1 kg/s * 30 K.
struct ResidualScales {
  double pressure = 1e5;
  double gas_mass = 0.1;
  double heat_mass = 1.0;
  double heat_energy = 1.25e5;
};

// The stacked nonlinear system F(x, u) = 0 of a (degraded) network: AC power
// flow, gas pipe/junction laws, water hydraulics and thermal balances, plus
// the coupling-point conversions. States x are voltages, pressures,
// temperatures and pipe flows of the live parts; controls u are shedding
// coefficients, generator dispatches and coupling inputs, all scaled to
// [0, 1]. References (slack bus, slack junctions, island references) are
// fixed and their balances released; the implied reference flows are exposed
// as expressions with derivatives for the optimizer.
class EquationSystem {
 public:
  struct Control {
    enum class Kind : std::uint8_t { ShedEl, ShedGas, ShedHeat, Generator, CpInput };
    Kind kind;
    int unit;              // container index of the demand, generator or CP
    double sched;          // scheduled value of the scaled variable
    double shed_power_w;   // objective weight; nonzero only for shed controls
  };

  // Physical inequality rows h(x, u) >= 0 used by the shedding optimizer.
  struct Inequality {
    enum class Kind : std::uint8_t {
      VoltageLower,     // |V|^2 - vmin^2
      VoltageUpper,     // vmax^2 - |V|^2
      LineLoading,      // (rating lp_max/100)^2 - |S_end|^2, one row per end
      GasPressureLower,
      GasPressureUpper,
      HeatTempLower,
      HeatTempUpper,
      ElSlackImport,    // scheduled import - implied import
      GasSlackLower,    // implied slack flow
      GasSlackUpper,    // scheduled flow - implied slack flow
      HeatRefLower,     // implied reference feed
      HeatRefUpper,     // source rating - implied reference feed
    };
    Kind kind;
    int unit;  // bus/line/junction container index, line end in dir, island index
    int dir;   // 0/1 for line ends, unused otherwise
  };

  EquationSystem(const DegradedNetwork& degraded, const FlowOptions& options);
  ~EquationSystem();
  EquationSystem(const EquationSystem&) = delete;
  EquationSystem& operator=(const EquationSystem&) = delete;

  const DegradedNetwork& degraded() const { return *degraded_; }
  const MultiEnergyNetwork& net() const { return *degraded_->net; }

  int num_states() const { return num_states_; }
  int num_controls() const { return static_cast<int>(controls_.size()); }
  int num_equations() const { return num_equations_; }
  const std::vector<Control>& controls() const { return controls_; }

  // Optimizer mode: adds one equality per coupling-fed island tying the
  // implied reference feed to the reference source dispatch.
  void enable_island_ties();
  int num_island_ties() const { return static_cast<int>(tie_islands_.size()); }

  Eigen::VectorXd flat_start() const;
  Eigen::VectorXd scheduled_controls() const;

  void eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& f) const;
  void jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                Eigen::SparseMatrix<double>* jx, Eigen::SparseMatrix<double>* ju) const;

  // Inequality block. Rows follow inequalities() order.
  const std::vector<Inequality>& inequalities() const { return inequalities_; }
  void eval_inequalities(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         Eigen::VectorXd& h) const;
  void inequality_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           Eigen::SparseMatrix<double>* hx, Eigen::SparseMatrix<double>* hu) const;

  // Shedding objective in watts: sum of S_d * P_d over live demands plus the
  // dropped constant; gradient only touches shed controls.
  double objective_w(const Eigen::VectorXd& u) const;
  void objective_gradient_w(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const;

  SteadyState extract_state(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  // Layout queries (container index -> state variable index, -1 if fixed/dead).
  int bus_var(int bus_container) const { return bus_var_[bus_container]; }
  int gas_pressure_var(int junction_container) const { return gas_p_var_[junction_container]; }
  int heat_pressure_var(int junction_container) const { return heat_p_var_[junction_container]; }
  int heat_temperature_var(int junction_container) const { return heat_t_var_[junction_container]; }
  int gas_flow_var(int pipe_container) const { return gas_f_var_[pipe_container]; }
  int water_flow_var(int pipe_container) const { return water_f_var_[pipe_container]; }

 private:
  struct Triplets;
  struct BranchConstants;

  void layout();
  void electric_block(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd* f,
                      Triplets* jx, Triplets* ju) const;
  void gas_block(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd* f,
                 Triplets* jx, Triplets* ju) const;
  void heat_block(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd* f,
                  Triplets* jx, Triplets* ju) const;

  // Implied reference feeds as linear expressions over states and controls.
  struct LinearExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> x_terms;
    std::vector<std::pair<int, double>> u_terms;
    double value(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  };
  LinearExpr gas_slack_expr() const;
  LinearExpr heat_ref_expr(int island) const;
  void el_slack_power(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double* p_pu,
                      std::vector<Eigen::Triplet<double>>* dx,
                      std::vector<Eigen::Triplet<double>>* du, int row, double scale) const;

  const DegradedNetwork* degraded_;
  FlowOptions options_;
  ResidualScales scales_;

  int num_states_ = 0;
  int num_equations_ = 0;
  std::vector<Control> controls_;
  std::vector<Inequality> inequalities_;
  std::vector<int> tie_islands_;  // island indices with coupling-fed references

  // electric layout
  std::vector<int> bus_var_;   // container -> index of e (f follows), -1 for slack/dead
  std::vector<int> bus_eq_;    // container -> row of the Re balance, -1 otherwise
  std::vector<BranchConstants> branch_;
  double z_base_ = 1.0;

  // gas layout
  std::vector<int> gas_p_var_, gas_f_var_, gas_eq_mass_, gas_eq_pipe_;

  // heat layout
  std::vector<int> heat_p_var_, heat_t_var_, water_f_var_;
  std::vector<int> heat_eq_mass_, heat_eq_energy_, water_eq_pipe_;

  // control layout helpers
  std::vector<int> el_shed_of_, gas_shed_of_, heat_shed_of_, gen_ctrl_of_, cp_ctrl_of_;

  friend class SheddingProblem;
};

// Newton solve of the square system with controls fixed at their scheduled
// values, or at an explicit control vector. Starts from the flat start unless
// x0 is given. Throws DivergenceError when the iteration exceeds
// max_iterations or degenerates.
SteadyState solve_multi_energy_flow(const MultiEnergyNetwork& net,
                                    const FlowOptions& options = {});
SteadyState solve_multi_energy_flow(const DegradedNetwork& degraded,
                                    const FlowOptions& options = {},
                                    const Eigen::VectorXd* x0 = nullptr,
                                    Eigen::VectorXd* x_out = nullptr);
SteadyState solve_multi_energy_flow(const DegradedNetwork& degraded, const FlowOptions& options,
                                    const Eigen::VectorXd& controls,
                                    const Eigen::VectorXd* x0 = nullptr,
                                    Eigen::VectorXd* x_out = nullptr);

}  // namespace mesres
