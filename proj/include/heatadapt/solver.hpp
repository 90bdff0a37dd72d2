#pragma once

#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heatadapt/errors.hpp"
#include "heatadapt/field.hpp"
#include "heatadapt/grid.hpp"
#include "heatadapt/materials.hpp"
#include "heatadapt/state_derivatives.hpp"
#include "heatadapt/sweep.hpp"

namespace heatadapt {

/// Per-step record of everything the backward pass needs. Whole fields are kept so the exact adjoint can
/// re-run every sweep; the probe-line quantities feed the scalar probe chain.
struct TapeStep {
  StepParams params;      // physical values used in this step
  BoundaryConditions bc;  // with this step's ambient temperatures
  TemperatureField whole; // layer n
  TemperatureField half;  // layer n + 1/2

  // Ox row through the probe, closure node (nx, q_probe)
  ClosurePoint closure_x;
  // Oy column through the probe, closure node (k_probe, ny)
  ClosurePoint closure_y;

  double probe_n;
  double probe_half;
  double probe_next;
  double delta_x;
  double delta_y;
};

struct StateTape {
  SpatialGrid grid;
  double tau = 0.0;
  std::size_t probe_k = 0;
  std::size_t probe_q = 0;
  ParamScale scale;
  std::vector<TapeStep> steps;

  std::size_t size() const noexcept { return steps.size(); }
};

template <class P>
concept CoefficientProvider = requires(const P& p, std::size_t n, const TemperatureField& f) {
  { p.coefficients(n, f) } -> std::same_as<StepParams>;
};

/// Classical model: lambda, rho and c evaluated once per step at the volume-average temperature.
template <ThermalProperties M>
struct PhysicalProvider {
  const M& material;

  StepParams coefficients(std::size_t, const TemperatureField& f) const {
    const auto pc = physical_coefficients(material, f.mean());
    return {pc.phi, pc.omega, pc.phi, pc.omega};
  }
};

template <ThermalProperties M>
PhysicalProvider(const M&) -> PhysicalProvider<M>;

/// Trainable model: coefficients read from the trajectory at the step index.
struct ParametricProvider {
  const ParamTrajectory& params;
  ParamScale scale{};

  StepParams coefficients(std::size_t n, const TemperatureField&) const {
    if (n >= params.size()) throw InvalidArgument("trajectory shorter than the simulated horizon");
    return params.physical(n, scale);
  }
};

/// Reusable line buffers for adi_step.
struct AdiWorkspace {
  std::vector<double> line, out, alpha, beta;

  void reserve(std::size_t m) {
    line.resize(m);
    out.resize(m);
    alpha.resize(m - 1);
    beta.resize(m - 1);
  }
};

namespace detail {

inline void check_step_params(const StepParams& p) {
  if (!(p.phi_x > 0.0) || !(p.omega_x > 0.0) || !(p.phi_y > 0.0) || !(p.omega_y > 0.0))
    throw InvalidArgument("step coefficients must be > 0");
}

inline void sweep_x_rows(const TemperatureField& in, TemperatureField& out, const StepParams& p,
                         const BoundaryConditions& bc, const SpatialGrid& g, double tau, AdiWorkspace& ws) {
  const std::size_t m = g.nx + 1;
  ws.reserve(m);
  for (std::size_t q = 0; q <= g.ny; ++q) {
    auto line = in.row(q);
    const auto start = sweep_start_x(p.phi_x, p.omega_x, bc, g.hx, tau, line[0]);
    std::span<double> alpha(ws.alpha.data(), m - 1), beta(ws.beta.data(), m - 1);
    forward_sweep_into(line, start, p.phi_x, p.omega_x, g.hx, tau, alpha, beta);
    const double closing = closing_temperature_x(line[m - 1], alpha[m - 2], beta[m - 2], p.phi_x, p.omega_x, bc, g.hx, tau);
    back_substitute_into(alpha, beta, closing, out.row(q));
  }
}

inline void sweep_y_columns(const TemperatureField& in, TemperatureField& out, const StepParams& p,
                            const BoundaryConditions& bc, const SpatialGrid& g, double tau, AdiWorkspace& ws) {
  const std::size_t m = g.ny + 1;
  ws.reserve(m);
  for (std::size_t k = 0; k <= g.nx; ++k) {
    for (std::size_t q = 0; q < m; ++q) ws.line[q] = in.at(k, q);
    std::span<const double> line(ws.line.data(), m);
    const auto start = sweep_start_y(p.phi_y, p.omega_y, bc, g.hy, tau, line[0]);
    std::span<double> alpha(ws.alpha.data(), m - 1), beta(ws.beta.data(), m - 1);
    forward_sweep_into(line, start, p.phi_y, p.omega_y, g.hy, tau, alpha, beta);
    const double closing = closing_temperature_y(line[m - 1], alpha[m - 2], beta[m - 2], p.phi_y, p.omega_y, bc, g.hy, tau);
    std::span<double> col(ws.out.data(), m);
    back_substitute_into(alpha, beta, closing, col);
    for (std::size_t q = 0; q < m; ++q) out.at(k, q) = col[q];
  }
}

// Penultimate sweep coefficients of one line, recomputed for tape and probe-chain bookkeeping.
inline std::pair<double, double> penultimate(std::span<const double> line, SweepStart start, double phi, double omega,
                                             double h, double tau) {
  const auto s = forward_sweep(line, start, phi, omega, h, tau);
  return {s.alpha.back(), s.beta.back()};
}

}  // namespace detail

/// One split step: Ox sweeps over every row produce the half layer (written to `half`), then Oy sweeps
/// over every column produce the next whole layer.
inline TemperatureField adi_step(const TemperatureField& field, const StepParams& params, const BoundaryConditions& bc,
                                 const SpatialGrid& g, double tau, TemperatureField& half, AdiWorkspace& ws) {
  if (field.half) throw InvalidArgument("adi_step expects a whole time layer");
  if (field.nx() != g.nx || field.ny() != g.ny) throw InvalidArgument("field does not match the grid");
  detail::check_step_params(params);
  half = TemperatureField(g);
  detail::sweep_x_rows(field, half, params, bc, g, tau, ws);
  half.step = field.step;
  half.half = true;
  TemperatureField next(g);
  detail::sweep_y_columns(half, next, params, bc, g, tau, ws);
  next.step = field.step + 1;
  return next;
}

inline TemperatureField adi_step(const TemperatureField& field, const StepParams& params, const BoundaryConditions& bc,
                                 const SpatialGrid& g, double tau) {
  TemperatureField half;
  AdiWorkspace ws;
  return adi_step(field, params, bc, g, tau, half, ws);
}

struct SimulateOptions {
  ProbeSpec probe{};
  bool record_tape = false;
};

struct SimulationResult {
  TemperatureField final_field;
  std::vector<double> probe_history;  // probe value on layers 0 .. N
  std::optional<StateTape> tape;
};

/// Runs schedule.size() split steps from the uniform field T0. The ambient temperatures of step n come
/// from schedule[n]; every other boundary datum from `bc`.
template <CoefficientProvider P>
SimulationResult simulate(double T0, const P& provider, const BoundaryConditions& bc,
                          std::span<const AmbientStep> schedule, const SpatialGrid& g, double tau,
                          const SimulateOptions& opts = {}) {
  if (!(T0 > 0.0) || !std::isfinite(T0)) throw InvalidArgument("initial temperature must be finite and > 0");
  if (!(tau > 0.0)) throw InvalidArgument("tau must be > 0");
  bc.validate();
  const auto [pk, pq] = opts.probe.resolve(g);
  if constexpr (std::same_as<P, ParametricProvider>) {
    if (!provider.params.consistent()) throw InvalidArgument("trajectory sequences differ in length");
    if (provider.params.size() < schedule.size()) throw InvalidArgument("trajectory shorter than the simulated horizon");
  }

  SimulationResult res;
  res.final_field = TemperatureField(g, T0);
  res.probe_history.reserve(schedule.size() + 1);
  res.probe_history.push_back(res.final_field.at(pk, pq));
  if (opts.record_tape) {
    res.tape.emplace();
    res.tape->grid = g;
    res.tape->tau = tau;
    res.tape->probe_k = pk;
    res.tape->probe_q = pq;
    res.tape->steps.reserve(schedule.size());
    if constexpr (std::same_as<P, ParametricProvider>) res.tape->scale = provider.scale;
  }

  AdiWorkspace ws;
  TemperatureField half;
  for (std::size_t n = 0; n < schedule.size(); ++n) {
    BoundaryConditions step_bc = bc;
    step_bc.T1 = schedule[n].T1;
    step_bc.T2 = schedule[n].T2;
    step_bc.validate();
    const StepParams params = provider.coefficients(n, res.final_field);
    TemperatureField next = adi_step(res.final_field, params, step_bc, g, tau, half, ws);
    if (!next.physical())
      throw NumericalError("non-physical temperature after step " + std::to_string(n + 1));

    if (res.tape) {
      TapeStep t{params, step_bc, res.final_field, half, {}, {}, 0, 0, 0, 0, 0};
      const auto row = res.final_field.row(pq);
      const auto sx = sweep_start_x(params.phi_x, params.omega_x, step_bc, g.hx, tau, row[0]);
      const auto [ax, bx] = detail::penultimate(row, sx, params.phi_x, params.omega_x, g.hx, tau);
      t.closure_x = {row[g.nx], ax, bx, params.phi_x, params.omega_x, g.hx, tau, step_bc};

      std::vector<double> col(g.ny + 1);
      for (std::size_t q = 0; q <= g.ny; ++q) col[q] = half.at(pk, q);
      const auto sy = sweep_start_y(params.phi_y, params.omega_y, step_bc, g.hy, tau, col[0]);
      const auto [ay, by] = detail::penultimate(col, sy, params.phi_y, params.omega_y, g.hy, tau);
      t.closure_y = {col[g.ny], ay, by, params.phi_y, params.omega_y, g.hy, tau, step_bc};

      t.probe_n = res.final_field.at(pk, pq);
      t.probe_half = half.at(pk, pq);
      t.probe_next = next.at(pk, pq);
      t.delta_x = delta_coefficient(Axis::X, t.closure_x);
      t.delta_y = delta_coefficient(Axis::Y, t.closure_y);
      res.tape->steps.push_back(std::move(t));
    }
    res.final_field = std::move(next);
    res.probe_history.push_back(res.final_field.at(pk, pq));
  }
  return res;
}

/// Constant ambient over the whole time grid.
template <CoefficientProvider P>
SimulationResult simulate(double T0, const P& provider, const BoundaryConditions& bc, const SpatialGrid& g,
                          const TimeGrid& t, const SimulateOptions& opts = {}) {
  const auto schedule = constant_schedule(bc, t.n_steps);
  return simulate(T0, provider, bc, schedule, g, t.tau, opts);
}

}  // namespace heatadapt
