#pragma once

// Partial derivatives of the two closure (state) equations with the sweep coefficients held fixed.
//
// g1: Ox closure, output T at x = x_max on the half layer.
// g2: Oy closure, output T at y = y_max on the whole layer.
//
// dT, domega(Ox) and the delta factors use the original closed forms. dphi on both axes and
// domega(Oy) are the symbolic derivatives of g1/g2 arranged in the same substitution style; see
// docs/derivations.md for where the original substitutions differ.

#include <cmath>

#include "heatadapt/field.hpp"
#include "heatadapt/sweep.hpp"

namespace heatadapt {

enum class Axis { X, Y };

inline const char* to_string(Axis a) { return a == Axis::X ? "x" : "y"; }

/// Inputs of one closure evaluation: previous-layer node value, the penultimate sweep coefficients,
/// the physical coefficients of that half step and the boundary data.
struct ClosurePoint {
  double T_prev;
  double alpha;
  double beta;
  double phi;
  double omega;
  double h;
  double tau;
  BoundaryConditions bc;
};

inline double closure_value(Axis axis, const ClosurePoint& p) {
  return axis == Axis::X ? closing_temperature_x(p.T_prev, p.alpha, p.beta, p.phi, p.omega, p.bc, p.h, p.tau)
                         : closing_temperature_y(p.T_prev, p.alpha, p.beta, p.phi, p.omega, p.bc, p.h, p.tau);
}

namespace detail {

// Oy closure denominator X.
inline double oy_denominator(const ClosurePoint& p) {
  return 2.0 * p.tau * p.phi * (1.0 - p.alpha) + 2.0 * p.tau * p.bc.kappa2 * p.h + p.omega * p.h * p.h;
}

// Ox closure after dividing through by phi: h^2 + 2 phi tau (1 - alpha) / omega.
inline double ox_denominator(const ClosurePoint& p) {
  return p.h * p.h + 2.0 * p.phi * p.tau * (1.0 - p.alpha) / p.omega;
}

}  // namespace detail

inline double dstate_dT(Axis axis, const ClosurePoint& p) {
  const double h2 = p.h * p.h;
  if (axis == Axis::X) return h2 / (2.0 * (p.phi * p.tau * (1.0 - p.alpha) / p.omega) + h2);
  const double t3 = p.T_prev * p.T_prev * p.T_prev;
  return p.h * (p.h * p.omega - 8.0 * (p.bc.eps2 * p.bc.sigma * p.tau * t3)) /
         (h2 * p.omega + p.tau * (2.0 * (p.phi * (1.0 - p.alpha)) + 2.0 * (p.h * p.bc.kappa2)));
}

inline double dstate_dphi(Axis axis, const ClosurePoint& p) {
  if (axis == Axis::X) {
    // x1 = h^2, x2 = tau (1 - alpha) / omega, x3 = 2 tau h q2 / omega, x4 = 2 tau beta / omega
    const double x1 = p.h * p.h;
    const double x2 = p.tau * (1.0 - p.alpha) / p.omega;
    const double x3 = 2.0 * p.tau * p.h * p.bc.q2 / p.omega;
    const double x4 = 2.0 * p.tau * p.beta / p.omega;
    const double num = p.phi * x4 - x3 + x1 * p.T_prev;
    const double den = x1 + 2.0 * p.phi * x2;
    return (x4 * den - 2.0 * x2 * num) / (den * den);
  }
  // x1 = 1 - alpha, x3 = X; the bracket is g2 itself.
  const double x1 = 1.0 - p.alpha;
  const double x3 = detail::oy_denominator(p);
  const double g2 = closing_temperature_y(p.T_prev, p.alpha, p.beta, p.phi, p.omega, p.bc, p.h, p.tau);
  return p.tau * (2.0 * p.beta - 2.0 * (x1 * g2)) / x3;
}

inline double dstate_domega(Axis axis, const ClosurePoint& p) {
  if (axis == Axis::X) {
    const double x1 = 1.0 - p.alpha;
    const double x2 = p.h * p.h;
    const double x3 = 2.0 * (p.beta * p.phi);
    const double x4 = 2.0 * (p.phi * p.tau * (1.0 - p.alpha) / p.omega) + p.h * p.h;
    const double x5 = 2.0 * p.h * p.bc.q2;
    const double phi3 = p.phi * p.phi * p.phi;
    const double px4 = p.phi * x4;
    return p.tau * ((x5 - x3) / x4 + 2.0 * (phi3 * x1 * (x2 * p.T_prev + p.tau * (x3 - x5) / p.omega) / (px4 * px4))) /
           (p.omega * p.omega);
  }
  const double x2 = p.h * p.h;
  const double x3 = detail::oy_denominator(p);
  const double g2 = closing_temperature_y(p.T_prev, p.alpha, p.beta, p.phi, p.omega, p.bc, p.h, p.tau);
  return x2 * (p.T_prev - g2) / x3;
}

/// Sensitivities to the penultimate sweep coefficients; needed by the exact adjoint.
inline double dstate_dalpha(Axis axis, const ClosurePoint& p) {
  if (axis == Axis::X) {
    const double d = detail::ox_denominator(p);
    return closure_value(axis, p) * (2.0 * p.phi * p.tau / p.omega) / d;
  }
  return closure_value(axis, p) * 2.0 * p.tau * p.phi / detail::oy_denominator(p);
}

inline double dstate_dbeta(Axis axis, const ClosurePoint& p) {
  if (axis == Axis::X) return (2.0 * p.phi * p.tau / p.omega) / detail::ox_denominator(p);
  return 2.0 * p.phi * p.tau / detail::oy_denominator(p);
}

/// Per-step multiplicative factor of the probe chain.
inline double delta_coefficient(Axis axis, const ClosurePoint& p) {
  const double h2 = p.h * p.h;
  if (axis == Axis::X)
    return h2 * p.phi / (p.phi * h2 + 2.0 * (p.phi / p.omega) * p.tau * p.phi * (1.0 - p.alpha));
  const double X = detail::oy_denominator(p);
  return p.omega * h2 / X - 4.0 * std::sqrt(2.0 * p.tau * p.bc.eps2 * p.bc.sigma * p.h / X);
}

/// Substitution-style closed forms as originally derived, kept for comparison only.
namespace reference {

inline double dg1_dphi(const ClosurePoint& p) {
  const double x1 = p.h * p.h;
  const double x2 = p.phi * p.tau * (1.0 - p.alpha) / p.omega;
  const double x3 = 2.0 * (p.h * p.bc.q2);
  const double x4 = p.beta * p.phi;
  const double x5 = p.phi * (2.0 * (p.phi * p.tau * (1.0 - p.alpha) / p.omega) + p.h * p.h);
  const double x6 = p.h * p.h * p.T_prev;
  return (x6 + p.tau * (4.0 * x4 - x3) / p.omega) * x6 * x6 /
         (x5 - p.phi * (4.0 * (x2 + x1)) * (x6 + p.tau * (2.0 * x4 - x3) / p.omega));
}

inline double dg2_dphi(const ClosurePoint& p) {
  const double x1 = 1.0 - p.alpha;
  const double x2 = p.h * p.bc.kappa2;
  const double x3 = detail::oy_denominator(p);
  const double T = p.T_prev;
  return p.tau *
         (2.0 * p.beta -
          2.0 * (x1 * (p.h * (2.0 * (x2 * p.bc.sigma * p.tau * (pow4(p.bc.T2) - pow4(T))) + p.h * p.omega * T) / x3 +
                       p.tau * (2.0 * (p.beta * p.phi) + 2.0 * (x2 * T)) / x3))) /
         x3;
}

inline double dg2_domega(const ClosurePoint& p) {
  const double x1 = p.h * p.bc.kappa2;
  const double x2 = p.h * p.h;
  const double x3 = detail::oy_denominator(p);
  const double T = p.T_prev;
  return x2 *
         (T - (p.h * (2.0 * (x2 * p.bc.sigma * p.tau * (pow4(p.bc.T2) - pow4(T))) + p.h * p.omega * T) / x3 +
               p.tau * (2.0 * (p.beta * p.phi) + 2.0 * (x1 * p.bc.T2)) / x3)) /
         x3;
}

}  // namespace reference

}  // namespace heatadapt
