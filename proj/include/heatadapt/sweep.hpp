#pragma once

// One-dimensional building blocks of the split scheme: tridiagonal row coefficients, the sweep starts on
// both axes, the forward sweep, the two boundary closures and back substitution.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "heatadapt/errors.hpp"
#include "heatadapt/field.hpp"

namespace heatadapt {

inline constexpr double pow4(double t) {
  const double t2 = t * t;
  return t2 * t2;
}

/// Row of the tridiagonal system  F_l = A T_{l+1} - B T_l + C T_{l-1}.
struct RowCoefficients {
  double A;
  double B;
  double C;
  double F;
};

inline RowCoefficients tridiag_row_coeffs(double phi, double omega, double h, double tau, double T_prev) {
  const double a = phi / (h * h);
  const double r = omega / tau;
  return {a, 2.0 * a + r, a, -r * T_prev};
}

struct SweepStart {
  double alpha0;
  double beta0;
};

/// Start on the convective-radiative face x = 0. Radiation uses the previous-layer surface value.
inline SweepStart sweep_start_x(double phi, double omega, const BoundaryConditions& bc, double hx, double tau,
                                double T_surface_prev) {
  const double D = omega * hx * hx + 2.0 * tau * (phi + bc.kappa1 * hx);
  const double rad = 2.0 * tau * bc.eps1 * bc.sigma * hx * (pow4(bc.T1) - pow4(T_surface_prev));
  return {2.0 * phi * tau / D, (omega * hx * hx * T_surface_prev + 2.0 * tau * bc.kappa1 * hx * bc.T1 + rad) / D};
}

/// Start on the flux face y = 0, written with the diffusivity a = phi / omega.
inline SweepStart sweep_start_y(double phi, double omega, const BoundaryConditions& bc, double hy, double tau,
                                double T_surface_prev) {
  const double a = phi / omega;
  const double E = hy * hy + 2.0 * a * tau;
  return {2.0 * a * tau / E, hy * hy * T_surface_prev / E + 2.0 * a * tau * hy * bc.q1 / (phi * E)};
}

/// alpha/beta for nodes 0 .. m-2 of a line with m nodes; the last node comes from a closure.
struct SweepCoefficients {
  std::vector<double> alpha;
  std::vector<double> beta;

  std::size_t size() const noexcept { return alpha.size(); }

  /// True when every alpha lies strictly inside (0, 1), which holds for diagonally dominant rows.
  bool contractive() const {
    for (double a : alpha)
      if (!(a > 0.0 && a < 1.0)) return false;
    return true;
  }
};

inline constexpr double kPivotFloor = 1e-300;

namespace detail {

// Allocation-free forward sweep used by the solver; alpha/beta must hold line.size() - 1 entries.
inline void forward_sweep_into(std::span<const double> line_prev, SweepStart start, double phi, double omega, double h,
                               double tau, std::span<double> alpha, std::span<double> beta) {
  const std::size_t m = line_prev.size();
  const double a = phi / (h * h);
  const double B = 2.0 * a + omega / tau;
  const double r = omega / tau;
  alpha[0] = start.alpha0;
  beta[0] = start.beta0;
  for (std::size_t l = 1; l + 1 < m; ++l) {
    const double d = B - a * alpha[l - 1];
    if (!(std::abs(d) >= kPivotFloor)) throw SingularSweep("near-zero pivot in forward sweep at node " + std::to_string(l));
    alpha[l] = a / d;
    beta[l] = (a * beta[l - 1] + r * line_prev[l]) / d;
  }
}

inline void back_substitute_into(std::span<const double> alpha, std::span<const double> beta, double closing,
                                 std::span<double> out) {
  const std::size_t n = alpha.size();
  out[n] = closing;
  for (std::size_t l = n; l-- > 0;) out[l] = alpha[l] * out[l + 1] + beta[l];
}

}  // namespace detail

inline SweepCoefficients forward_sweep(std::span<const double> line_prev, SweepStart start, double phi, double omega,
                                       double h, double tau) {
  if (line_prev.size() < 3) throw InvalidArgument("sweep line needs at least 3 nodes");
  SweepCoefficients s{std::vector<double>(line_prev.size() - 1), std::vector<double>(line_prev.size() - 1)};
  detail::forward_sweep_into(line_prev, start, phi, omega, h, tau, s.alpha, s.beta);
  return s;
}

/// Closure of the Ox sweep at x = x_max (state equation of the Ox system). alpha/beta belong to node k-1.
inline double closing_temperature_x(double T_node_prev, double alpha, double beta, double phi, double omega,
                                    const BoundaryConditions& bc, double hx, double tau) {
  const double a = phi / omega;
  const double num = 2.0 * a * tau * phi * beta - 2.0 * a * tau * hx * bc.q2 + hx * hx * phi * T_node_prev;
  const double den = phi * hx * hx + 2.0 * a * tau * phi * (1.0 - alpha);
  if (!(den > 0.0)) throw UnstableClosure("non-positive denominator in Ox closure");
  return num / den;
}

inline double closing_temperature_x(double T_node_prev, const SweepCoefficients& s, double phi, double omega,
                                    const BoundaryConditions& bc, double hx, double tau) {
  return closing_temperature_x(T_node_prev, s.alpha.back(), s.beta.back(), phi, omega, bc, hx, tau);
}

/// Closure of the Oy sweep at y = y_max (state equation of the Oy system), radiation lagged at layer n.
inline double closing_temperature_y(double T_node_prev, double alpha, double beta, double phi, double omega,
                                    const BoundaryConditions& bc, double hy, double tau) {
  const double num = 2.0 * phi * tau * beta + 2.0 * tau * bc.kappa2 * hy * bc.T2 + omega * hy * hy * T_node_prev +
                     2.0 * tau * bc.eps2 * bc.sigma * hy * (pow4(bc.T2) - pow4(T_node_prev));
  const double den = 2.0 * tau * phi * (1.0 - alpha) + 2.0 * tau * bc.kappa2 * hy + omega * hy * hy;
  if (!(den > 0.0)) throw UnstableClosure("non-positive denominator in Oy closure");
  return num / den;
}

inline double closing_temperature_y(double T_node_prev, const SweepCoefficients& s, double phi, double omega,
                                    const BoundaryConditions& bc, double hy, double tau) {
  return closing_temperature_y(T_node_prev, s.alpha.back(), s.beta.back(), phi, omega, bc, hy, tau);
}

inline std::vector<double> back_substitute(const SweepCoefficients& s, double T_closing) {
  std::vector<double> out(s.size() + 1);
  detail::back_substitute_into(s.alpha, s.beta, T_closing, out);
  return out;
}

}  // namespace heatadapt
