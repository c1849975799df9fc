#include "mesres/shed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace mesres {

namespace {

using Kind = EquationSystem::Control::Kind;

bool is_shed(Kind k) { return k == Kind::ShedEl || k == Kind::ShedGas || k == Kind::ShedHeat; }

int shed_carrier(Kind k) {
  switch (k) {
    case Kind::ShedEl: return 0;
    case Kind::ShedGas: return 1;
    case Kind::ShedHeat: return 2;
    default: return -1;
  }
}

Eigen::SparseMatrix<double> hcat(const Eigen::SparseMatrix<double>& a,
                                 const Eigen::SparseMatrix<double>& b) {
  Eigen::SparseMatrix<double> m(a.rows(), a.cols() + b.cols());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() + b.nonZeros()));
  for (int k = 0; k < a.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < b.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(b, k); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(a.cols() + it.col()),
                     it.value());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

const char* shed_status_name(ShedStatus s) {
  switch (s) {
    case ShedStatus::Optimal: return "optimal";
    case ShedStatus::Fallback: return "fallback";
  }
  return "unknown";
}

// Primal-dual barrier method on the slack form: minimize the shed power
// subject to the network equations g(x, u) = 0, the bound rows h(x, u) = s
// with s > 0, and 0 < u < 1. Multipliers for the slack and box constraints
// are iterated alongside the primal variables; each step solves the
// condensed KKT system with a Gauss-Newton barrier Hessian, applies
// fraction-to-boundary caps and an l1 merit line search, and the barrier
// weight shrinks once the inner problem is solved.
SheddingSolution solve_load_shedding(const DegradedNetwork& degraded,
                                     const FlowOptions& flow_options, const ShedOptions& opt) {
  const MultiEnergyNetwork& net = *degraded.net;
  if (!net.schedule.valid)
    throw ConfigError("load shedding requires a reference schedule on the network");

  EquationSystem sys(degraded, flow_options);
  sys.enable_island_ties();

  const int nx = sys.num_states();
  const int nu = sys.num_controls();
  const int mg = sys.num_equations();
  const int mh = static_cast<int>(sys.inequalities().size());
  const int nz = nx + nu;
  const double wscale = net.electricity.base_va;

  SheddingSolution out;
  out.controls.assign(static_cast<std::size_t>(nu), 0.0);

  auto shed_from = [&](const Eigen::VectorXd& uu) {
    for (int c = 0; c < kCarrierCount; ++c) out.shed_w[c] = degraded.dropped_w[c];
    for (int i = 0; i < nu; ++i) {
      const auto& ctrl = sys.controls()[static_cast<std::size_t>(i)];
      const int c = shed_carrier(ctrl.kind);
      if (c >= 0) out.shed_w[c] += uu[i] * ctrl.shed_power_w;
    }
  };

  auto fallback = [&](int iters, double err) -> SheddingSolution& {
    Eigen::VectorXd uu = Eigen::VectorXd::Zero(nu);
    for (int i = 0; i < nu; ++i)
      if (is_shed(sys.controls()[static_cast<std::size_t>(i)].kind)) uu[i] = 1.0;
    out.status = ShedStatus::Fallback;
    out.iterations = iters;
    out.kkt_error = err;
    shed_from(uu);
    for (int i = 0; i < nu; ++i) out.controls[static_cast<std::size_t>(i)] = uu[i];
    try {
      out.state = solve_multi_energy_flow(degraded, flow_options, uu);
    } catch (const Error&) {
      out.state = SteadyState{};
    }
    return out;
  };

  if (nz == 0) {
    out.status = ShedStatus::Optimal;
    shed_from(Eigen::VectorXd());
    out.state = solve_multi_energy_flow(degraded, flow_options);
    return out;
  }

  // Interior start: with everything nearly shed the flat no-load state is
  // close to feasible for every carrier.
  Eigen::VectorXd u(nu), sched(nu);
  for (int i = 0; i < nu; ++i) {
    const auto& ctrl = sys.controls()[static_cast<std::size_t>(i)];
    sched[i] = ctrl.sched;
    u[i] = is_shed(ctrl.kind) ? 1.0 - 1e-3 : std::clamp(ctrl.sched, 1e-3, 1.0 - 1e-3);
  }
  Eigen::VectorXd x = sys.flat_start();
  try {
    solve_multi_energy_flow(degraded, flow_options, u, nullptr, &x);
  } catch (const Error&) {
    x = sys.flat_start();
  }

  double mu = opt.mu_initial;
  Eigen::VectorXd g, h;
  sys.eval(x, u, g);
  sys.eval_inequalities(x, u, h);
  Eigen::VectorXd s = h.cwiseMax(1e-4);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(mg);
  Eigen::VectorXd w(mh), zlo(nu), zhi(nu);
  for (int i = 0; i < mh; ++i) w[i] = mu / s[i];
  for (int i = 0; i < nu; ++i) {
    zlo[i] = mu / u[i];
    zhi[i] = mu / (1.0 - u[i]);
  }

  auto barrier_value = [&](const Eigen::VectorXd& uu, const Eigen::VectorXd& ss) {
    double v = sys.objective_w(uu) / wscale;
    for (int i = 0; i < nu; ++i) {
      const double d = uu[i] - sched[i];
      v += opt.control_reg * d * d;
      v -= mu * (std::log(uu[i]) + std::log(1.0 - uu[i]));
    }
    for (int i = 0; i < mh; ++i) v -= mu * std::log(ss[i]);
    return v;
  };

  Eigen::SparseMatrix<double> jgx, jgu, jhx, jhu;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double rho = 10.0;
  double err = std::numeric_limits<double>::infinity();
  int total = 0, stalls = 0;
  bool failed = false, done = false;

  while (!failed && !done) {
    if (total >= opt.max_iterations) {
      failed = true;
      break;
    }
    sys.eval(x, u, g);
    sys.eval_inequalities(x, u, h);
    sys.jacobian(x, u, &jgx, &jgu);
    sys.inequality_jacobian(x, u, &jhx, &jhu);
    const Eigen::SparseMatrix<double> jz = hcat(jhx, jhu);
    const Eigen::SparseMatrix<double> jg = hcat(jgx, jgu);

    Eigen::VectorXd grad_w;
    sys.objective_gradient_w(u, grad_w);
    Eigen::VectorXd grad_f = grad_w / wscale;
    for (int i = 0; i < nu; ++i) grad_f[i] += 2.0 * opt.control_reg * (u[i] - sched[i]);

    // optimality error at the current barrier weight
    Eigen::VectorXd rz = Eigen::VectorXd::Zero(nz);
    rz.tail(nu) = grad_f - zlo + zhi;
    if (mg > 0) rz += jg.transpose() * lambda;
    if (mh > 0) rz -= jz.transpose() * w;
    err = rz.lpNorm<Eigen::Infinity>();
    if (mg > 0) err = std::max(err, g.lpNorm<Eigen::Infinity>());
    if (mh > 0) err = std::max(err, (h - s).lpNorm<Eigen::Infinity>());
    for (int i = 0; i < mh; ++i) err = std::max(err, std::abs(s[i] * w[i] - mu));
    for (int i = 0; i < nu; ++i) {
      err = std::max(err, std::abs(u[i] * zlo[i] - mu));
      err = std::max(err, std::abs((1.0 - u[i]) * zhi[i] - mu));
    }
    if (err <= std::max(10.0 * mu, opt.kkt_tolerance)) {
      if (mu <= opt.mu_final * (1.0 + 1e-12)) {
        done = true;
        break;
      }
      mu = std::max(mu * opt.mu_shrink, opt.mu_final);
      stalls = 0;
      continue;
    }

    // condensed KKT: slack and box multipliers eliminated
    Eigen::VectorXd sigma(mh), what(mh);
    for (int i = 0; i < mh; ++i) {
      sigma[i] = w[i] / s[i];
      what[i] = mu / s[i] - sigma[i] * (h[i] - s[i]);
    }
    Eigen::VectorXd curv_u(nu), rhs_u(nu);
    for (int i = 0; i < nu; ++i) {
      const double slo = zlo[i] / u[i];
      const double shi = zhi[i] / (1.0 - u[i]);
      curv_u[i] = slo + shi + 2.0 * opt.control_reg;
      rhs_u[i] = -grad_f[i] + mu / u[i] - mu / (1.0 - u[i]);
    }

    Eigen::SparseMatrix<double> bs = jz;
    for (int k = 0; k < bs.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(bs, k); itr; ++itr)
        itr.valueRef() *= std::sqrt(sigma[itr.row()]);
    const Eigen::SparseMatrix<double> gauss = Eigen::SparseMatrix<double>(bs.transpose()) * bs;

    std::vector<Eigen::Triplet<double>> kt;
    kt.reserve(static_cast<std::size_t>(gauss.nonZeros() + 2 * jg.nonZeros() + nz + nu));
    for (int k = 0; k < gauss.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(gauss, k); itr; ++itr)
        kt.emplace_back(static_cast<int>(itr.row()), static_cast<int>(itr.col()), itr.value());
    for (int i = 0; i < nz; ++i) kt.emplace_back(i, i, opt.hessian_floor);
    for (int i = 0; i < nu; ++i) kt.emplace_back(nx + i, nx + i, curv_u[i]);
    for (int k = 0; k < jg.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(jg, k); itr; ++itr) {
        kt.emplace_back(nz + static_cast<int>(itr.row()), static_cast<int>(itr.col()),
                        itr.value());
        kt.emplace_back(static_cast<int>(itr.col()), nz + static_cast<int>(itr.row()),
                        itr.value());
      }
    Eigen::SparseMatrix<double> kkt(nz + mg, nz + mg);
    kkt.setFromTriplets(kt.begin(), kt.end());
    kkt.makeCompressed();

    lu.compute(kkt);
    if (lu.info() != Eigen::Success) {
      failed = true;
      break;
    }

    // direction from the factored system for given constraint residuals; the
    // second-order correction reuses the factorization with shifted residuals
    struct Dir {
      Eigen::VectorXd dz, ds, lam, wn, zln, zhn;
      double ap = 1.0, ad = 1.0;
    };
    const double tau = std::max(opt.boundary_fraction, 1.0 - mu);
    auto build_dir = [&](const Eigen::VectorXd& gres, const Eigen::VectorXd& hres, Dir& d) {
      Eigen::VectorXd wres(mh);
      for (int i = 0; i < mh; ++i) wres[i] = mu / s[i] - sigma[i] * hres[i];
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nz + mg);
      rhs.segment(nx, nu) = rhs_u;
      if (mh > 0) rhs.head(nz) += jz.transpose() * wres;
      if (mg > 0) rhs.tail(mg) = -gres;
      const Eigen::VectorXd sol = lu.solve(rhs);
      if (!sol.allFinite()) return false;
      d.dz = sol.head(nz);
      d.lam = sol.tail(mg);
      if (mh > 0) {
        const Eigen::VectorXd jzdz = jz * d.dz;
        d.ds = jzdz + hres;
        d.wn = wres - sigma.cwiseProduct(jzdz);
      }
      d.zln.resize(nu);
      d.zhn.resize(nu);
      for (int i = 0; i < nu; ++i) {
        const double du = d.dz[nx + i];
        d.zln[i] = mu / u[i] - (zlo[i] / u[i]) * du;
        d.zhn[i] = mu / (1.0 - u[i]) + (zhi[i] / (1.0 - u[i])) * du;
      }
      d.ap = 1.0;
      d.ad = 1.0;
      for (int i = 0; i < mh; ++i) {
        if (d.ds[i] < 0.0) d.ap = std::min(d.ap, -tau * s[i] / d.ds[i]);
        const double dw = d.wn[i] - w[i];
        if (dw < 0.0) d.ad = std::min(d.ad, -tau * w[i] / dw);
      }
      for (int i = 0; i < nu; ++i) {
        const double du = d.dz[nx + i];
        if (du < 0.0) d.ap = std::min(d.ap, -tau * u[i] / du);
        else if (du > 0.0) d.ap = std::min(d.ap, tau * (1.0 - u[i]) / du);
        const double dlo = d.zln[i] - zlo[i];
        if (dlo < 0.0) d.ad = std::min(d.ad, -tau * zlo[i] / dlo);
        const double dhi = d.zhn[i] - zhi[i];
        if (dhi < 0.0) d.ad = std::min(d.ad, -tau * zhi[i] / dhi);
      }
      return true;
    };

    Dir d0;
    if (!build_dir(g, h - s, d0)) {
      failed = true;
      break;
    }

    double bound = 10.0;
    if (mg > 0) bound = std::max(bound, 1.2 * d0.lam.lpNorm<Eigen::Infinity>());
    if (mh > 0) bound = std::max(bound, 1.2 * d0.wn.lpNorm<Eigen::Infinity>());
    rho = bound > rho ? bound : std::max(bound, 0.5 * rho);

    auto merit = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& uu,
                     const Eigen::VectorXd& ss) {
      Eigen::VectorXd gg, hh;
      sys.eval(xx, uu, gg);
      sys.eval_inequalities(xx, uu, hh);
      double feas = 0.0;
      if (mg > 0) feas += gg.lpNorm<1>();
      if (mh > 0) feas += (hh - ss).lpNorm<1>();
      return barrier_value(uu, ss) + rho * feas;
    };

    auto kkt_error = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& uu,
                         const Eigen::VectorXd& ss, const Eigen::VectorXd& ll,
                         const Eigen::VectorXd& ww, const Eigen::VectorXd& zl,
                         const Eigen::VectorXd& zh) {
      Eigen::VectorXd gg, hh, gw;
      Eigen::SparseMatrix<double> agx, agu, ahx, ahu;
      sys.eval(xx, uu, gg);
      sys.eval_inequalities(xx, uu, hh);
      sys.jacobian(xx, uu, &agx, &agu);
      sys.inequality_jacobian(xx, uu, &ahx, &ahu);
      sys.objective_gradient_w(uu, gw);
      Eigen::VectorXd gf = gw / wscale;
      for (int i = 0; i < nu; ++i) gf[i] += 2.0 * opt.control_reg * (uu[i] - sched[i]);
      Eigen::VectorXd rr = Eigen::VectorXd::Zero(nz);
      rr.tail(nu) = gf - zl + zh;
      if (mg > 0) rr += hcat(agx, agu).transpose() * ll;
      if (mh > 0) rr -= hcat(ahx, ahu).transpose() * ww;
      double e = rr.lpNorm<Eigen::Infinity>();
      if (mg > 0) e = std::max(e, gg.lpNorm<Eigen::Infinity>());
      if (mh > 0) e = std::max(e, (hh - ss).lpNorm<Eigen::Infinity>());
      for (int i = 0; i < mh; ++i) e = std::max(e, std::abs(ss[i] * ww[i] - mu));
      for (int i = 0; i < nu; ++i) {
        e = std::max(e, std::abs(uu[i] * zl[i] - mu));
        e = std::max(e, std::abs((1.0 - uu[i]) * zh[i] - mu));
      }
      return e;
    };

    const double m0 = merit(x, u, s);
    bool accepted = false;
    const Dir* acc = &d0;
    double alpha = d0.ap;
    Dir dsoc;

    // tries one candidate; full-length candidates may also pass on a
    // contraction of the barrier KKT residual where the merit function
    // rejects the second-order constraint violation
    auto attempt = [&](const Dir& d, double a, bool allow_residual) {
      const Eigen::VectorXd xt = x + a * d.dz.head(nx);
      const Eigen::VectorXd ut = u + a * d.dz.tail(nu);
      const Eigen::VectorXd st = mh > 0 ? Eigen::VectorXd(s + a * d.ds) : s;
      const double mt = merit(xt, ut, st);
      bool take = std::isfinite(mt) && mt < m0 - 1e-14 * std::abs(m0);
      if (!take && allow_residual) {
        const double at = std::min(d.ad, a);
        const Eigen::VectorXd lt = lambda + a * (d.lam - lambda);
        const Eigen::VectorXd wt = mh > 0 ? Eigen::VectorXd(w + at * (d.wn - w)) : w;
        const Eigen::VectorXd zlt = zlo + at * (d.zln - zlo);
        const Eigen::VectorXd zht = zhi + at * (d.zhn - zhi);
        const double et = kkt_error(xt, ut, st, lt, wt, zlt, zht);
        take = std::isfinite(et) && et < 0.9 * err;
      }
      if (take) {
        x = xt;
        u = ut;
        s = st;
        accepted = true;
        acc = &d;
        alpha = a;
      }
      return take;
    };

    for (int half = 0; half <= 20; ++half) {
      const double a = d0.ap * std::pow(0.5, half);
      if (a <= 1e-14) break;
      if (attempt(d0, a, half == 0)) break;
      if (half == 0) {
        // second-order correction: the constraint residuals advanced by the
        // rejected full step replace the current ones, same factorization
        Eigen::VectorXd gt, ht;
        const Eigen::VectorXd xt = x + a * d0.dz.head(nx);
        const Eigen::VectorXd ut = u + a * d0.dz.tail(nu);
        const Eigen::VectorXd st = mh > 0 ? Eigen::VectorXd(s + a * d0.ds) : s;
        sys.eval(xt, ut, gt);
        sys.eval_inequalities(xt, ut, ht);
        if (gt.allFinite() && ht.allFinite() && build_dir(a * g + gt, a * (h - s) + (ht - st), dsoc)) {
          if (attempt(dsoc, dsoc.ap, true)) break;
        }
      }
    }
    ++total;
    if (!accepted) {
      double feas = 0.0;
      if (mg > 0) feas += g.lpNorm<1>();
      if (mh > 0) feas += (h - s).lpNorm<1>();
      if (feas > 1e-8) rho *= 10.0;
      if (++stalls >= 4) failed = true;
      continue;
    }
    stalls = 0;

    const double adx = std::min(acc->ad, alpha);
    lambda += alpha * (acc->lam - lambda);
    if (mh > 0) w += adx * (acc->wn - w);
    zlo += adx * (acc->zln - zlo);
    zhi += adx * (acc->zhn - zhi);
    // dual safeguard keeps the multipliers within a band of the barrier path
    const double kap = 1e10;
    for (int i = 0; i < mh; ++i)
      w[i] = std::clamp(w[i], mu / (kap * s[i]), kap * mu / s[i]);
    for (int i = 0; i < nu; ++i) {
      zlo[i] = std::clamp(zlo[i], mu / (kap * u[i]), kap * mu / u[i]);
      zhi[i] = std::clamp(zhi[i], mu / (kap * (1.0 - u[i])), kap * mu / (1.0 - u[i]));
    }
  }

  // a stalled run can still hold a feasible iterate with a good optimality
  // certificate; only the fallback covers the rest
  if (x.allFinite()) {
    sys.eval(x, u, g);
    sys.eval_inequalities(x, u, h);
    const double gerr = mg > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
    const double hmin = mh > 0 ? h.minCoeff() : 0.0;
    if (gerr <= 1e-7 && hmin >= -1e-8 && err <= 1e-4) {
      Eigen::VectorXd us = u;
      for (int i = 0; i < nu; ++i) {
        if (us[i] < opt.control_snap) us[i] = 0.0;
        else if (us[i] > 1.0 - opt.control_snap) us[i] = 1.0;
      }
      out.status = ShedStatus::Optimal;
      out.iterations = total;
      out.kkt_error = err;
      shed_from(us);
      for (int i = 0; i < nu; ++i) out.controls[static_cast<std::size_t>(i)] = us[i];
      try {
        out.state = solve_multi_energy_flow(degraded, flow_options, us, &x, nullptr);
      } catch (const Error&) {
        out.state = sys.extract_state(x, u);
        out.state.converged = true;
        out.state.residual_inf = gerr;
      }
      return out;
    }
  }
  return fallback(total, err);
}

}  // namespace mesres
