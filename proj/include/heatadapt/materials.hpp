#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "heatadapt/errors.hpp"

namespace heatadapt {

enum class PropertyKind { Conductivity, Density, HeatCapacity };

inline const char* to_string(PropertyKind kind) {
  switch (kind) {
    case PropertyKind::Conductivity: return "conductivity";
    case PropertyKind::Density: return "density";
    case PropertyKind::HeatCapacity: return "heat_capacity";
  }
  return "?";
}

struct PropertyPoint {
  double temperature;  // K
  double value;
};

/// Tabulated property as a function of temperature. Temperatures strictly increase, values are positive.
class PropertyTable {
 public:
  PropertyTable(PropertyKind kind, std::vector<PropertyPoint> points) : kind_(kind), points_(std::move(points)) {
    if (points_.size() < 2) throw InvalidArgument("property table needs at least 2 points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      if (!std::isfinite(p.temperature) || !std::isfinite(p.value))
        throw InvalidArgument("property table entries must be finite");
      if (!(p.value > 0.0)) throw InvalidArgument("property table values must be > 0");
      if (i > 0 && !(p.temperature > points_[i - 1].temperature))
        throw InvalidArgument("property table temperatures must be strictly increasing");
    }
  }

  PropertyKind kind() const noexcept { return kind_; }
  std::span<const PropertyPoint> points() const noexcept { return points_; }

 private:
  PropertyKind kind_;
  std::vector<PropertyPoint> points_;
};

/// Piecewise-linear interpolation, clamped to the end values outside the table.
inline double interpolate_property(const PropertyTable& table, double T) {
  if (!std::isfinite(T) || !(T > 0.0)) throw InvalidArgument("temperature must be finite and > 0");
  const auto pts = table.points();
  if (T <= pts.front().temperature) return pts.front().value;
  if (T >= pts.back().temperature) return pts.back().value;
  auto hi = std::upper_bound(pts.begin(), pts.end(), T,
                             [](double t, const PropertyPoint& p) { return t < p.temperature; });
  auto lo = hi - 1;
  const double w = (T - lo->temperature) / (hi->temperature - lo->temperature);
  return lo->value + w * (hi->value - lo->value);
}

template <class M>
concept ThermalProperties = requires(const M& m, double T) {
  { m.conductivity(T) } -> std::convertible_to<double>;
  { m.density(T) } -> std::convertible_to<double>;
  { m.heat_capacity(T) } -> std::convertible_to<double>;
};

struct MaterialModel {
  std::string name;
  PropertyTable lambda_table;
  PropertyTable rho_table;
  PropertyTable c_table;

  MaterialModel(std::string name_, PropertyTable lambda, PropertyTable rho, PropertyTable c)
      : name(std::move(name_)), lambda_table(std::move(lambda)), rho_table(std::move(rho)), c_table(std::move(c)) {
    if (lambda_table.kind() != PropertyKind::Conductivity || rho_table.kind() != PropertyKind::Density ||
        c_table.kind() != PropertyKind::HeatCapacity)
      throw InvalidArgument("material tables carry the wrong property kinds");
  }

  double conductivity(double T) const { return interpolate_property(lambda_table, T); }
  double density(double T) const { return interpolate_property(rho_table, T); }
  double heat_capacity(double T) const { return interpolate_property(c_table, T); }
};

/// Conductivity-role and capacity-role coefficients (W/(m K), J/(m^3 K)) entering one sweep.
struct PhysicalCoefficients {
  double phi;
  double omega;
};

template <ThermalProperties M>
PhysicalCoefficients physical_coefficients(const M& material, double T) {
  if (!std::isfinite(T) || !(T > 0.0)) throw InvalidArgument("temperature must be finite and > 0");
  return {material.conductivity(T), material.density(T) * material.heat_capacity(T)};
}

/// Least-squares polynomial fit; coefficients lowest degree first.
/// The solve runs on a centred and scaled abscissa and is mapped back, since raw Kelvin powers are
/// badly conditioned above degree 2.
inline std::vector<double> fit_polynomial(std::span<const PropertyPoint> points, std::size_t degree) {
  if (degree < 1 || degree > 5) throw InvalidArgument("polynomial degree must be in [1, 5]");
  if (points.size() <= degree) throw InvalidArgument("need more points than the polynomial degree");

  double t_min = points.front().temperature, t_max = t_min;
  for (const auto& p : points) {
    t_min = std::min(t_min, p.temperature);
    t_max = std::max(t_max, p.temperature);
  }
  const double centre = 0.5 * (t_min + t_max);
  const double half = 0.5 * (t_max - t_min);
  if (!(half > 0.0)) throw DegenerateFit("all abscissae coincide");

  const auto m = static_cast<Eigen::Index>(points.size());
  const auto n = static_cast<Eigen::Index>(degree + 1);
  Eigen::MatrixXd V(m, n);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = (points[static_cast<std::size_t>(i)].temperature - centre) / half;
    double pw = 1.0;
    for (Eigen::Index j = 0; j < n; ++j, pw *= s) V(i, j) = pw;
    b(i) = points[static_cast<std::size_t>(i)].value;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
  qr.setThreshold(1e-12);
  if (qr.rank() < n) throw DegenerateFit("rank-deficient design matrix");
  const Eigen::VectorXd c = qr.solve(b);

  // p(T) = sum_j c_j ((T - centre) / half)^j, expanded into powers of T.
  std::vector<double> out(degree + 1, 0.0);
  for (std::size_t j = 0; j <= degree; ++j) {
    const double cj = c(static_cast<Eigen::Index>(j)) / std::pow(half, static_cast<double>(j));
    double binom = 1.0;
    for (std::size_t i = 0; i <= j; ++i) {
      out[i] += cj * binom * std::pow(-centre, static_cast<double>(j - i));
      binom = binom * static_cast<double>(j - i) / static_cast<double>(i + 1);
    }
  }
  return out;
}

inline double eval_polynomial(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

/// Classical adaptation baseline: each property replaced by a regression polynomial fitted to its table.
/// Evaluation clamps T to the table range so the polynomial is never extrapolated.
class RegressionMaterial {
 public:
  RegressionMaterial(const MaterialModel& source, std::size_t degree)
      : lambda_(fit(source.lambda_table, degree)),
        rho_(fit(source.rho_table, degree)),
        c_(fit(source.c_table, degree)) {}

  double conductivity(double T) const { return lambda_(T); }
  double density(double T) const { return rho_(T); }
  double heat_capacity(double T) const { return c_(T); }

 private:
  struct Fitted {
    std::vector<double> coeffs;
    double t_lo, t_hi;
    double operator()(double T) const { return eval_polynomial(coeffs, std::clamp(T, t_lo, t_hi)); }
  };

  static Fitted fit(const PropertyTable& table, std::size_t degree) {
    auto pts = table.points();
    Fitted f{fit_polynomial(pts, degree), pts.front().temperature, pts.back().temperature};
    for (const auto& p : pts)
      if (!(f(p.temperature) > 0.0)) throw DegenerateFit("regression polynomial is not positive on its table");
    return f;
  }

  Fitted lambda_, rho_, c_;
};

/// Smooth low-carbon steel reference used by the synthetic benchmark. Values are rounded from public
/// handbook tables; the Curie-point peak in c is deliberately smoothed away.
inline MaterialModel default_carbon_steel() {
  return MaterialModel(
      "carbon_steel",
      PropertyTable(PropertyKind::Conductivity,
                    {{300, 52.0}, {500, 48.0}, {700, 42.0}, {900, 35.0}, {1100, 29.0}, {1300, 28.0}, {1500, 30.0}}),
      PropertyTable(PropertyKind::Density, {{300, 7850.0}, {700, 7720.0}, {1100, 7580.0}, {1500, 7400.0}}),
      PropertyTable(PropertyKind::HeatCapacity,
                    {{300, 470.0}, {600, 560.0}, {900, 640.0}, {1200, 660.0}, {1500, 680.0}}));
}

}  // namespace heatadapt
