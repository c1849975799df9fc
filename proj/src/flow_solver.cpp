#include <cmath>
#include <sstream>

#include "mesres/flow.hpp"

namespace mesres {

SteadyState solve_multi_energy_flow(const DegradedNetwork& degraded, const FlowOptions& options,
                                    const Eigen::VectorXd& controls, const Eigen::VectorXd* x0,
                                    Eigen::VectorXd* x_out) {
  EquationSystem sys(degraded, options);
  Eigen::VectorXd x = x0 != nullptr ? *x0 : sys.flat_start();
  if (x.size() != sys.num_states())
    throw StructuralError("flow start vector has " + std::to_string(x.size()) +
                          " entries, system has " + std::to_string(sys.num_states()));
  if (controls.size() != sys.num_controls())
    throw StructuralError("flow control vector has " + std::to_string(controls.size()) +
                          " entries, system has " + std::to_string(sys.num_controls()));
  const Eigen::VectorXd& u = controls;

  SteadyState out;
  if (sys.num_states() == 0) {
    out = sys.extract_state(x, u);
    out.converged = true;
    if (x_out != nullptr) *x_out = x;
    return out;
  }

  Eigen::VectorXd f;
  sys.eval(x, u, f);
  double err = f.lpNorm<Eigen::Infinity>();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool analyzed = false;
  int iter = 0;
  while (err > options.tolerance) {
    if (iter >= options.max_iterations) {
      std::ostringstream msg;
      msg << "flow iteration did not converge within " << options.max_iterations
          << " steps, residual " << err;
      throw DivergenceError(msg.str());
    }
    Eigen::SparseMatrix<double> jx;
    sys.jacobian(x, u, &jx, nullptr);
    jx.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(jx);
      analyzed = true;
    }
    lu.factorize(jx);
    if (lu.info() != Eigen::Success)
      throw DivergenceError("flow Jacobian factorization failed at iteration " +
                            std::to_string(iter));
    const Eigen::VectorXd dx = lu.solve(-f);
    if (!dx.allFinite())
      throw DivergenceError("flow step is not finite at iteration " + std::to_string(iter));

    double step = 1.0;
    Eigen::VectorXd x_new;
    Eigen::VectorXd f_new;
    double err_new = 0.0;
    for (int h = 0; h <= 10; ++h) {
      x_new = x + step * dx;
      sys.eval(x_new, u, f_new);
      err_new = f_new.lpNorm<Eigen::Infinity>();
      if (std::isfinite(err_new) && err_new < err) break;
      step *= 0.5;
    }
    x = x_new;
    f = f_new;
    err = err_new;
    ++iter;
    if (!std::isfinite(err))
      throw DivergenceError("flow residual is not finite at iteration " + std::to_string(iter));
  }

  out = sys.extract_state(x, u);
  out.converged = true;
  out.iterations = iter;
  out.residual_inf = err;
  if (x_out != nullptr) *x_out = x;
  return out;
}

SteadyState solve_multi_energy_flow(const DegradedNetwork& degraded, const FlowOptions& options,
                                    const Eigen::VectorXd* x0, Eigen::VectorXd* x_out) {
  const EquationSystem sys(degraded, options);
  return solve_multi_energy_flow(degraded, options, sys.scheduled_controls(), x0, x_out);
}

SteadyState solve_multi_energy_flow(const MultiEnergyNetwork& net, const FlowOptions& options) {
  const DegradedNetwork degraded = apply_vitality(net, healthy_vitality(net));
  return solve_multi_energy_flow(degraded, options, nullptr, nullptr);
}

}  // namespace mesres
