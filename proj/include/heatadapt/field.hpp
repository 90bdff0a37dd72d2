#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heatadapt/errors.hpp"
#include "heatadapt/grid.hpp"

namespace heatadapt {

inline constexpr double kStefanBoltzmann = 5.67e-8;  // W m^-2 K^-4

/// Convective-radiative data on the two heated faces plus the fluxes on the other two.
/// T1/kappa1/eps1 act on x = 0, T2/kappa2/eps2 on y = y_max. q1 enters the Oy sweep start (y = 0),
/// q2 the Ox closure (x = x_max); positive q1 heats, positive q2 cools.
struct BoundaryConditions {
  double T1 = 300.0;
  double T2 = 300.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  static constexpr double sigma = kStefanBoltzmann;

  void validate() const {
    if (!(T1 > 0.0) || !(T2 > 0.0) || !std::isfinite(T1) || !std::isfinite(T2))
      throw InvalidArgument("ambient temperatures must be finite and > 0");
    if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0)) throw InvalidArgument("heat-transfer coefficients must be >= 0");
    if (!(eps1 >= 0.0 && eps1 <= 1.0) || !(eps2 >= 0.0 && eps2 <= 1.0))
      throw InvalidArgument("emissivities must lie in [0, 1]");
    if (!std::isfinite(q1) || !std::isfinite(q2)) throw InvalidArgument("fluxes must be finite");
  }
};

/// Ambient temperatures for one time step; everything else in BoundaryConditions is held fixed.
struct AmbientStep {
  double T1;
  double T2;
};

using BoundarySchedule = std::vector<AmbientStep>;

inline BoundarySchedule constant_schedule(const BoundaryConditions& bc, std::size_t n_steps) {
  return BoundarySchedule(n_steps, AmbientStep{bc.T1, bc.T2});
}

/// Node temperatures on one (whole or half) time layer. Stored row by row: row = y index q,
/// column = x index k, so lines along Ox are contiguous.
class TemperatureField {
 public:
  TemperatureField() = default;
  TemperatureField(std::size_t nx, std::size_t ny, double value)
      : nx_(nx), ny_(ny), values_((nx + 1) * (ny + 1), value) {}
  explicit TemperatureField(const SpatialGrid& g, double value = 0.0) : TemperatureField(g.nx, g.ny, value) {}

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(std::size_t k, std::size_t q) { return values_[q * (nx_ + 1) + k]; }
  double at(std::size_t k, std::size_t q) const { return values_[q * (nx_ + 1) + k]; }

  std::span<double> row(std::size_t q) { return {values_.data() + q * (nx_ + 1), nx_ + 1}; }
  std::span<const double> row(std::size_t q) const { return {values_.data() + q * (nx_ + 1), nx_ + 1}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::size_t step = 0;  // time layer index n
  bool half = false;     // true for the n + 1/2 layer

  double mean() const { return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(size()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

  bool physical() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v) && v > 0.0; });
  }

  friend bool operator==(const TemperatureField& a, const TemperatureField& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.values_ == b.values_;
  }

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> values_;
};

/// Physical coefficients used by one ADI step: (phi, omega) for the Ox half step and for the Oy half step.
struct StepParams {
  double phi_x;
  double omega_x;
  double phi_y;
  double omega_y;
};

/// Multipliers mapping stored trajectory values onto W/(m K) and J/(m^3 K). With the default of 1 the
/// trajectory holds physical values directly.
struct ParamScale {
  double phi = 1.0;
  double omega = 1.0;
};

/// Trainable per-step coefficient sequences for the two split systems.
struct ParamTrajectory {
  std::vector<double> phi_x;
  std::vector<double> omega_x;
  std::vector<double> phi_y;
  std::vector<double> omega_y;

  ParamTrajectory() = default;
  explicit ParamTrajectory(std::size_t n, double phi = 1.0, double omega = 1.0)
      : phi_x(n, phi), omega_x(n, omega), phi_y(n, phi), omega_y(n, omega) {}

  std::size_t size() const noexcept { return phi_x.size(); }

  bool consistent() const {
    return omega_x.size() == size() && phi_y.size() == size() && omega_y.size() == size();
  }

  StepParams physical(std::size_t n, const ParamScale& s) const {
    return {phi_x[n] * s.phi, omega_x[n] * s.omega, phi_y[n] * s.phi, omega_y[n] * s.omega};
  }

  /// Sum of |phi| + |omega| over both axes and all steps.
  double l1_norm() const {
    double acc = 0.0;
    for (const auto* v : {&phi_x, &omega_x, &phi_y, &omega_y})
      for (double x : *v) acc += std::abs(x);
    return acc;
  }

  friend bool operator==(const ParamTrajectory&, const ParamTrajectory&) = default;
};

/// Readout node. Unset indices default to the centre of the y = y_max face.
struct ProbeSpec {
  std::optional<std::size_t> k;
  std::optional<std::size_t> q;

  std::pair<std::size_t, std::size_t> resolve(const SpatialGrid& g) const {
    const std::size_t kk = k.value_or(g.nx / 2);
    const std::size_t qq = q.value_or(g.ny);
    if (kk > g.nx || qq > g.ny) throw InvalidArgument("probe node outside the grid");
    return {kk, qq};
  }
};

inline double probe_readout(const TemperatureField& field, const ProbeSpec& probe = {}) {
  const std::size_t kk = probe.k.value_or(field.nx() / 2);
  const std::size_t qq = probe.q.value_or(field.ny());
  if (kk > field.nx() || qq > field.ny()) throw InvalidArgument("probe node outside the grid");
  return field.at(kk, qq);
}

}  // namespace heatadapt
