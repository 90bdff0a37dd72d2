#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "heatadapt/errors.hpp"
#include "heatadapt/field.hpp"
#include "heatadapt/solver.hpp"
#include "heatadapt/state_derivatives.hpp"
#include "heatadapt/sweep.hpp"

namespace heatadapt {

/// dE/d(stored parameter) for every step of one tape.
struct GradientSet {
  std::vector<double> d_phi_x;
  std::vector<double> d_omega_x;
  std::vector<double> d_phi_y;
  std::vector<double> d_omega_y;

  GradientSet() = default;
  explicit GradientSet(std::size_t n) : d_phi_x(n, 0.0), d_omega_x(n, 0.0), d_phi_y(n, 0.0), d_omega_y(n, 0.0) {}

  std::size_t size() const noexcept { return d_phi_x.size(); }

  double l2_norm() const {
    double acc = 0.0;
    for (const auto* v : {&d_phi_x, &d_omega_x, &d_phi_y, &d_omega_y})
      for (double g : *v) acc += g * g;
    return std::sqrt(acc);
  }

  bool all_zero() const {
    for (const auto* v : {&d_phi_x, &d_omega_x, &d_phi_y, &d_omega_y})
      for (double g : *v)
        if (g != 0.0) return false;
    return true;
  }
};

enum class BackpropMode {
  /// Reverse-mode differentiation of the complete discrete step (every sweep, both passes). Exact.
  Adjoint,
  /// Scalar recursion along the probe lines with the delta factors; sweep coefficients treated as fixed.
  ProbeChain,
};

namespace detail {

struct LineGrad {
  double phi = 0.0;
  double omega = 0.0;
};

struct StartPartials {
  double da_dphi, da_domega;
  double db_du0, db_dphi, db_domega;
};

inline StartPartials start_partials_x(double phi, double omega, const BoundaryConditions& bc, double h, double tau,
                                      double u0) {
  const double D = omega * h * h + 2.0 * tau * (phi + bc.kappa1 * h);
  const double beta0 = sweep_start_x(phi, omega, bc, h, tau, u0).beta0;
  return {2.0 * tau * (D - 2.0 * phi * tau) / (D * D),
          -2.0 * phi * tau * h * h / (D * D),
          (omega * h * h - 8.0 * tau * bc.eps1 * bc.sigma * h * u0 * u0 * u0) / D,
          -beta0 * 2.0 * tau / D,
          (h * h * u0 - beta0 * h * h) / D};
}

inline StartPartials start_partials_y(double phi, double omega, const BoundaryConditions& bc, double h, double tau,
                                      double u0) {
  const double a = phi / omega;
  const double E = h * h + 2.0 * a * tau;
  const double E2 = E * E;
  const double dalpha_da = 2.0 * tau * h * h / E2;
  const double w2E2 = omega * omega * E2;
  return {dalpha_da / omega,
          -dalpha_da * phi / (omega * omega),
          h * h / E,
          -h * h * u0 / E2 * (2.0 * tau / omega) - 2.0 * tau * h * bc.q1 / (omega * E2) * (2.0 * tau / omega),
          2.0 * phi * tau * h * h * u0 / w2E2 - 2.0 * tau * h * bc.q1 * h * h / w2E2};
}

// Reverse of one line solve. `u` is the line input (previous layer), `vbar` the adjoint of the line output
// (overwritten), `ubar` receives the adjoint of the input. Returns the parameter adjoints.
inline LineGrad line_adjoint(Axis axis, std::span<const double> u, std::span<double> vbar, std::span<double> ubar,
                             double phi, double omega, const BoundaryConditions& bc, double h, double tau,
                             std::vector<double>& alpha, std::vector<double>& beta, std::vector<double>& v,
                             std::vector<double>& abar, std::vector<double>& bbar) {
  const std::size_t m = u.size();
  alpha.resize(m - 1);
  beta.resize(m - 1);
  v.resize(m);
  abar.assign(m - 1, 0.0);
  bbar.assign(m - 1, 0.0);

  const SweepStart start = axis == Axis::X ? sweep_start_x(phi, omega, bc, h, tau, u[0])
                                           : sweep_start_y(phi, omega, bc, h, tau, u[0]);
  forward_sweep_into(u, start, phi, omega, h, tau, alpha, beta);
  const ClosurePoint cp{u[m - 1], alpha[m - 2], beta[m - 2], phi, omega, h, tau, bc};
  back_substitute_into(alpha, beta, closure_value(axis, cp), v);

  LineGrad g;
  // back substitution: v_l = alpha_l v_{l+1} + beta_l
  for (std::size_t l = 0; l + 1 < m; ++l) {
    abar[l] += vbar[l] * v[l + 1];
    bbar[l] += vbar[l];
    vbar[l + 1] += vbar[l] * alpha[l];
  }
  // closure
  const double cb = vbar[m - 1];
  if (cb != 0.0) {
    ubar[m - 1] += dstate_dT(axis, cp) * cb;
    g.phi += dstate_dphi(axis, cp) * cb;
    g.omega += dstate_domega(axis, cp) * cb;
    abar[m - 2] += dstate_dalpha(axis, cp) * cb;
    bbar[m - 2] += dstate_dbeta(axis, cp) * cb;
  }
  // interior recursion
  const double A = phi / (h * h);
  const double r = omega / tau;
  double A_bar = 0.0, r_bar = 0.0;
  for (std::size_t l = m - 2; l >= 1; --l) {
    const double d = 2.0 * A + r - A * alpha[l - 1];
    const double d_bar = -(abar[l] * alpha[l] + bbar[l] * beta[l]) / d;
    const double nb = bbar[l] / d;
    A_bar += abar[l] / d + nb * beta[l - 1] + d_bar * (2.0 - alpha[l - 1]);
    bbar[l - 1] += nb * A;
    ubar[l] += nb * r;
    r_bar += nb * u[l] + d_bar;
    abar[l - 1] -= d_bar * A;
  }
  g.phi += A_bar / (h * h);
  g.omega += r_bar / tau;
  // sweep start
  const StartPartials sp = axis == Axis::X ? start_partials_x(phi, omega, bc, h, tau, u[0])
                                           : start_partials_y(phi, omega, bc, h, tau, u[0]);
  g.phi += abar[0] * sp.da_dphi + bbar[0] * sp.db_dphi;
  g.omega += abar[0] * sp.da_domega + bbar[0] * sp.db_domega;
  ubar[0] += bbar[0] * sp.db_du0;
  return g;
}

inline GradientSet backprop_adjoint(const StateTape& tape, double residual) {
  const auto& g = tape.grid;
  const std::size_t N = tape.size();
  GradientSet out(N);
  if (residual == 0.0) return out;

  TemperatureField adj(g, 0.0);  // adjoint of the current whole layer
  adj.at(tape.probe_k, tape.probe_q) = -residual;
  TemperatureField adj_half(g, 0.0);

  std::vector<double> alpha, beta, v, abar, bbar;
  std::vector<double> u_col(g.ny + 1), vbar_col(g.ny + 1), ubar_col(g.ny + 1);

  for (std::size_t n = N; n-- > 0;) {
    const TapeStep& s = tape.steps[n];
    const StepParams& p = s.params;

    std::fill(adj_half.values().begin(), adj_half.values().end(), 0.0);
    LineGrad gy;
    for (std::size_t k = 0; k <= g.nx; ++k) {
      bool any = false;
      for (std::size_t q = 0; q <= g.ny; ++q) {
        u_col[q] = s.half.at(k, q);
        vbar_col[q] = adj.at(k, q);
        ubar_col[q] = 0.0;
        any = any || vbar_col[q] != 0.0;
      }
      if (!any) continue;
      const auto lg = line_adjoint(Axis::Y, u_col, vbar_col, ubar_col, p.phi_y, p.omega_y, s.bc, g.hy, tape.tau, alpha,
                                   beta, v, abar, bbar);
      gy.phi += lg.phi;
      gy.omega += lg.omega;
      for (std::size_t q = 0; q <= g.ny; ++q) adj_half.at(k, q) = ubar_col[q];
    }

    std::fill(adj.values().begin(), adj.values().end(), 0.0);
    LineGrad gx;
    for (std::size_t q = 0; q <= g.ny; ++q) {
      auto vbar_row = adj_half.row(q);
      if (std::all_of(vbar_row.begin(), vbar_row.end(), [](double x) { return x == 0.0; })) continue;
      const auto lg = line_adjoint(Axis::X, s.whole.row(q), vbar_row, adj.row(q), p.phi_x, p.omega_x, s.bc, g.hx,
                                   tape.tau, alpha, beta, v, abar, bbar);
      gx.phi += lg.phi;
      gx.omega += lg.omega;
    }

    out.d_phi_x[n] = gx.phi * tape.scale.phi;
    out.d_omega_x[n] = gx.omega * tape.scale.omega;
    out.d_phi_y[n] = gy.phi * tape.scale.phi;
    out.d_omega_y[n] = gy.omega * tape.scale.omega;
  }
  return out;
}

inline GradientSet backprop_probe_chain(const StateTape& tape, double residual) {
  const std::size_t N = tape.size();
  GradientSet out(N);
  double signal = -residual;
  for (std::size_t n = N; n-- > 0;) {
    const TapeStep& s = tape.steps[n];
    out.d_phi_y[n] = signal * dstate_dphi(Axis::Y, s.closure_y) * tape.scale.phi;
    out.d_omega_y[n] = signal * dstate_domega(Axis::Y, s.closure_y) * tape.scale.omega;
    // the Ox system reaches the readout through the Oy step of the same index
    const double x_signal = signal * dstate_dT(Axis::Y, s.closure_y);
    out.d_phi_x[n] = x_signal * dstate_dphi(Axis::X, s.closure_x) * tape.scale.phi;
    out.d_omega_x[n] = x_signal * dstate_domega(Axis::X, s.closure_x) * tape.scale.omega;
    signal *= s.delta_x * s.delta_y;
  }
  return out;
}

}  // namespace detail

/// Gradient of E = 1/2 (y - prediction)^2 with respect to the stored trajectory values, given the tape of the
/// forward run and residual = y - prediction. The L1 term is not part of this.
inline GradientSet backprop(const StateTape& tape, double residual, BackpropMode mode = BackpropMode::Adjoint) {
  if (!std::isfinite(residual)) throw InvalidTape("residual is not finite");
  if (tape.tau <= 0.0 || tape.grid.nx < 3 || tape.grid.ny < 3) throw InvalidTape("tape carries no grid");
  for (const auto& s : tape.steps) {
    if (s.whole.nx() != tape.grid.nx || s.whole.ny() != tape.grid.ny || s.half.nx() != tape.grid.nx ||
        s.half.ny() != tape.grid.ny)
      throw InvalidTape("tape step is incomplete");
  }
  return mode == BackpropMode::Adjoint ? detail::backprop_adjoint(tape, residual)
                                       : detail::backprop_probe_chain(tape, residual);
}

/// Chain multipliers of the probe recursion: factor[n] multiplies the signal when moving from step n to n-1.
inline std::vector<double> probe_chain_factors(const StateTape& tape) {
  std::vector<double> f;
  f.reserve(tape.size());
  for (const auto& s : tape.steps) f.push_back(s.delta_x * s.delta_y);
  return f;
}

// ---------------------------------------------------------------------------------------------------------------
// Finite-difference verification harness

enum class FdTarget { DstateDT, DstateDphi, DstateDomega, Backprop };

inline const char* to_string(FdTarget t) {
  switch (t) {
    case FdTarget::DstateDT: return "dstate_dT";
    case FdTarget::DstateDphi: return "dstate_dphi";
    case FdTarget::DstateDomega: return "dstate_domega";
    case FdTarget::Backprop: return "backprop";
  }
  return "?";
}

struct FdReport {
  FdTarget target;
  std::size_t trials = 0;
  double max_rel_err = 0.0;
  std::string worst_point;
  std::size_t rejected = 0;  // backprop samples redrawn because the forward run left the physical range
};

/// Sampling ranges. phi and omega are drawn as [0.1, 100] times the scale.
struct FdCheckConfig {
  ParamScale scale{1.0, 1e5};
  double T_lo = 300.0, T_hi = 1600.0;
  double rel_step = 1e-6;
  // larger step for the end-to-end loss, whose small components would otherwise drown in rounding
  double e2e_rel_step = 1e-4;
  // end-to-end problem
  std::size_t e2e_nx = 6, e2e_ny = 6, e2e_steps = 3;
  double e2e_extent = 0.06;  // m, square section
  double e2e_tau = 5.0;      // s
};

namespace detail {

// Relative error with a floor so that components which are zero to rounding do not dominate.
inline double rel_err(double analytic, double numeric, double floor) {
  const double d = std::max({std::abs(analytic), std::abs(numeric), floor});
  return d > 0.0 ? std::abs(analytic - numeric) / d : 0.0;
}

inline std::string describe(const ClosurePoint& p, Axis axis) {
  std::ostringstream os;
  os.precision(6);
  os << "axis=" << to_string(axis) << " T=" << p.T_prev << " alpha=" << p.alpha << " beta=" << p.beta
     << " phi=" << p.phi << " omega=" << p.omega << " h=" << p.h << " tau=" << p.tau;
  return os.str();
}

inline ClosurePoint sample_closure(std::mt19937_64& rng, const FdCheckConfig& cfg) {
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ClosurePoint p{};
  p.T_prev = U(cfg.T_lo, cfg.T_hi);
  p.alpha = U(0.0, 0.95);
  p.beta = U(cfg.T_lo, cfg.T_hi);
  p.phi = U(0.1, 100.0) * cfg.scale.phi;
  p.omega = U(0.1, 100.0) * cfg.scale.omega;
  p.h = U(0.001, 0.05);
  p.tau = U(0.1, 50.0);
  p.bc.T1 = U(cfg.T_lo, cfg.T_hi);
  p.bc.T2 = U(cfg.T_lo, cfg.T_hi);
  p.bc.kappa1 = U(0.0, 200.0);
  p.bc.kappa2 = U(0.0, 200.0);
  p.bc.eps1 = U(0.0, 1.0);
  p.bc.eps2 = U(0.0, 1.0);
  p.bc.q1 = U(-1e4, 1e4);
  p.bc.q2 = U(-1e4, 1e4);
  return p;
}

inline double closure_fd(Axis axis, ClosurePoint p, double ClosurePoint::*field, double rel_step) {
  const double x = p.*field;
  const double dx = rel_step * std::max(std::abs(x), 1e-12);
  p.*field = x + dx;
  const double up = closure_value(axis, p);
  p.*field = x - dx;
  const double dn = closure_value(axis, p);
  return (up - dn) / (2.0 * dx);
}

struct EndToEndProblem {
  SpatialGrid grid;
  double tau;
  double T0;
  double target;
  BoundaryConditions bc;
  BoundarySchedule schedule;
  ParamTrajectory params;
  ParamScale scale;
};

inline double end_to_end_loss(const EndToEndProblem& pb, const ParamTrajectory& params) {
  const ParametricProvider prov{params, pb.scale};
  const auto res = simulate(pb.T0, prov, pb.bc, pb.schedule, pb.grid, pb.tau);
  const double r = pb.target - probe_readout(res.final_field);
  return 0.5 * r * r;
}

inline EndToEndProblem sample_end_to_end(std::mt19937_64& rng, const FdCheckConfig& cfg) {
  auto U = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  EndToEndProblem pb;
  pb.grid = build_spatial_grid(cfg.e2e_extent, cfg.e2e_extent, cfg.e2e_nx, cfg.e2e_ny);
  pb.tau = cfg.e2e_tau;
  pb.T0 = U(cfg.T_lo, cfg.T_hi);
  pb.target = U(cfg.T_lo, cfg.T_hi);
  pb.bc.kappa1 = U(0.0, 200.0);
  pb.bc.kappa2 = U(0.0, 200.0);
  pb.bc.eps1 = U(0.0, 1.0);
  pb.bc.eps2 = U(0.0, 1.0);
  pb.bc.q1 = U(-1e4, 1e4);
  pb.bc.q2 = U(-1e4, 1e4);
  pb.scale = cfg.scale;
  for (std::size_t n = 0; n < cfg.e2e_steps; ++n) pb.schedule.push_back({U(cfg.T_lo, cfg.T_hi), U(cfg.T_lo, cfg.T_hi)});
  pb.params = ParamTrajectory(cfg.e2e_steps);
  for (auto* v : {&pb.params.phi_x, &pb.params.omega_x, &pb.params.phi_y, &pb.params.omega_y})
    for (double& x : *v) x = U(0.1, 100.0);
  return pb;
}

}  // namespace detail

/// Compares analytic derivatives against central differences on `trials` seeded random points.
/// Single-step targets check both axes per trial. The backprop target checks all 4N step parameters of
/// a small end-to-end problem; errors are measured on elasticities (parameter times derivative) with a
/// floor of 1e-7 of the largest elasticity of that trial.
inline FdReport finite_difference_check(FdTarget target, std::size_t trials, std::uint64_t seed,
                                        const FdCheckConfig& cfg = {}) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  std::mt19937_64 rng(seed);
  FdReport rep{target, trials, 0.0, "", 0};

  auto note = [&](double err, std::string where) {
    rep.max_rel_err = err;
    rep.worst_point = std::move(where);
  };

  if (target != FdTarget::Backprop) {
    for (std::size_t t = 0; t < trials; ++t) {
      const ClosurePoint p = detail::sample_closure(rng, cfg);
      for (Axis axis : {Axis::X, Axis::Y}) {
        double analytic = 0.0, numeric = 0.0, scale = 0.0;
        switch (target) {
          case FdTarget::DstateDT:
            analytic = dstate_dT(axis, p);
            numeric = detail::closure_fd(axis, p, &ClosurePoint::T_prev, cfg.rel_step);
            scale = p.T_prev;
            break;
          case FdTarget::DstateDphi:
            analytic = dstate_dphi(axis, p);
            numeric = detail::closure_fd(axis, p, &ClosurePoint::phi, cfg.rel_step);
            scale = p.phi;
            break;
          default:
            analytic = dstate_domega(axis, p);
            numeric = detail::closure_fd(axis, p, &ClosurePoint::omega, cfg.rel_step);
            scale = p.omega;
            break;
        }
        // floor: a derivative whose elasticity is below 1e-9 of the closure value counts as zero
        const double floor = 1e-9 * std::abs(closure_value(axis, p)) / scale;
        const double err = detail::rel_err(analytic, numeric, floor);
        if (err >= rep.max_rel_err) note(err, detail::describe(p, axis));
      }
    }
    return rep;
  }

  for (std::size_t t = 0; t < trials; ++t) {
    detail::EndToEndProblem pb;
    std::optional<SimulationResult> run;
    for (int attempt = 0; attempt < 1000 && !run; ++attempt) {
      pb = detail::sample_end_to_end(rng, cfg);
      try {
        const ParametricProvider prov{pb.params, pb.scale};
        run = simulate(pb.T0, prov, pb.bc, pb.schedule, pb.grid, pb.tau, SimulateOptions{{}, true});
        // perturbed runs must stay valid too; stay well inside the physical range
        if (run->final_field.min() < 50.0 || run->final_field.max() > 5000.0) run.reset();
      } catch (const NumericalError&) {
        run.reset();
      }
      if (!run) ++rep.rejected;
    }
    if (!run) throw NumericalError("could not sample a valid end-to-end problem");

    const double residual = pb.target - probe_readout(run->final_field);
    const GradientSet g = backprop(*run->tape, residual);

    std::vector<double> an, fd;
    std::vector<std::string> names;
    const char* labels[] = {"phi_x", "omega_x", "phi_y", "omega_y"};
    std::vector<double>* pv[] = {&pb.params.phi_x, &pb.params.omega_x, &pb.params.phi_y, &pb.params.omega_y};
    const std::vector<double>* gv[] = {&g.d_phi_x, &g.d_omega_x, &g.d_phi_y, &g.d_omega_y};
    for (int c = 0; c < 4; ++c) {
      for (std::size_t n = 0; n < cfg.e2e_steps; ++n) {
        double& x = (*pv[c])[n];
        const double x0 = x;
        const double dx = cfg.e2e_rel_step * x0;
        x = x0 + dx;
        const double up = detail::end_to_end_loss(pb, pb.params);
        x = x0 - dx;
        const double dn = detail::end_to_end_loss(pb, pb.params);
        x = x0;
        an.push_back(x0 * (*gv[c])[n]);
        fd.push_back(x0 * (up - dn) / (2.0 * dx));
        names.push_back(std::string(labels[c]) + "[" + std::to_string(n) + "]");
      }
    }
    double big = 0.0;
    for (double v : fd) big = std::max(big, std::abs(v));
    for (std::size_t i = 0; i < an.size(); ++i) {
      const double err = detail::rel_err(an[i], fd[i], 1e-7 * big);
      if (err >= rep.max_rel_err) {
        std::ostringstream os;
        os.precision(6);
        os << "trial=" << t << " param=" << names[i] << " analytic=" << an[i] << " fd=" << fd[i];
        note(err, os.str());
      }
    }
  }
  return rep;
}

}  // namespace heatadapt
