#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "heatadapt/errors.hpp"
#include "heatadapt/field.hpp"
#include "heatadapt/gradients.hpp"
#include "heatadapt/grid.hpp"
#include "heatadapt/materials.hpp"
#include "heatadapt/solver.hpp"

namespace heatadapt {

/// One billet of a furnace log. Times in s, temperatures in K. Pressures are carried but unused.
struct HeatingRecord {
  double zone_time_12 = 0.0;
  double zone_time_34 = 0.0;
  double zone_time_56 = 0.0;
  double zone_temp_135 = 0.0;
  double zone_temp_246 = 0.0;
  double zone_press_12 = 0.0;
  double zone_press_34 = 0.0;
  double zone_press_56 = 0.0;
  double cooling_time = 0.0;
  double target_temp = 0.0;

  void validate() const {
    for (double t : {zone_time_12, zone_time_34, zone_time_56, cooling_time})
      if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("record durations must be finite and >= 0");
    if (!(zone_time_12 + zone_time_34 + zone_time_56 + cooling_time > 0.0))
      throw InvalidArgument("record has zero total duration");
    if (!(zone_temp_135 > 0.0) || !(zone_temp_246 > 0.0) || !std::isfinite(zone_temp_135) ||
        !std::isfinite(zone_temp_246))
      throw InvalidArgument("zone temperatures must be finite and > 0");
    if (!std::isfinite(target_temp)) throw InvalidArgument("target temperature must be finite");
  }

  friend bool operator==(const HeatingRecord&, const HeatingRecord&) = default;
};

using Dataset = std::vector<HeatingRecord>;

/// Everything fixed across records: geometry, time step, initial temperature, heat-exchange data, readout.
struct ModelSetup {
  SpatialGrid grid;
  double tau = 0.0;
  double initial_temp = 300.0;     // K
  BoundaryConditions bc;           // T1/T2 are overwritten by each record's schedule
  ProbeSpec probe;
  ParamScale scale{0.4, 5e4};      // stored trajectory units: 0.4 W/(m K) and 5e4 J/(m^3 K)
  double cooling_ambient = 300.0;  // K
};

struct RecordSchedule {
  BoundarySchedule schedule;
  std::vector<std::size_t> segments;  // step counts of the non-empty segments, in order
  std::size_t horizon() const noexcept { return schedule.size(); }
};

namespace detail {

inline std::size_t segment_steps(double duration, double tau) {
  if (duration <= 0.0) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration / tau)));
}

}  // namespace detail

/// Piecewise-constant ambient history: three heating segments (T1 from the odd zones, T2 from the even
/// zones) and a cooling segment at `cooling_ambient`. Lengths are rounded to the nearest whole step.
inline RecordSchedule record_to_schedule(const HeatingRecord& r, double tau, double cooling_ambient = 300.0) {
  r.validate();
  if (!(tau > 0.0)) throw InvalidArgument("tau must be > 0");
  const double total = r.zone_time_12 + r.zone_time_34 + r.zone_time_56 + r.cooling_time;
  if (total < tau) throw DegenerateRecord("record lasts less than one time step");
  RecordSchedule out;
  auto add = [&](double duration, double T1, double T2) {
    const std::size_t n = detail::segment_steps(duration, tau);
    if (n == 0) return;
    out.segments.push_back(n);
    out.schedule.insert(out.schedule.end(), n, AmbientStep{T1, T2});
  };
  for (double d : {r.zone_time_12, r.zone_time_34, r.zone_time_56}) add(d, r.zone_temp_135, r.zone_temp_246);
  add(r.cooling_time, cooling_ambient, cooling_ambient);
  return out;
}

inline std::size_t max_horizon(std::span<const HeatingRecord> data, double tau, double cooling_ambient = 300.0) {
  std::size_t n = 0;
  for (const auto& r : data) n = std::max(n, record_to_schedule(r, tau, cooling_ambient).horizon());
  return n;
}

struct TrainConfig {
  double eta = 0.001;
  double lambda1 = 0.05;
  std::size_t max_epochs = 8450;
  double grad_stop = 1e-6;
  double grad_smoothing = 0.9;  // EMA factor of the stop rule
  double split_ratio = 0.8;
  std::uint64_t seed = 1;
  double omega_min = 1e-12;
  double phi_min = 1e-12;
  double init_low = 70.0;  // with the default scale: phi 28..56 W/(m K), omega 3.5e6..7e6 J/(m^3 K)
  double init_high = 140.0;
  std::size_t min_horizon = 0;  // trajectory length is max(min_horizon, longest record)
  bool batch = false;           // one averaged update per epoch instead of per-record updates
  std::size_t checkpoint_every = 550;
  unsigned threads = 1;         // evaluation only
  BackpropMode backprop = BackpropMode::Adjoint;

  void validate() const {
    if (!(eta > 0.0)) throw InvalidConfig("eta", "must be > 0");
    if (!(lambda1 >= 0.0)) throw InvalidConfig("lambda1", "must be >= 0");
    if (!(grad_stop >= 0.0)) throw InvalidConfig("grad_stop", "must be >= 0");
    if (!(grad_smoothing >= 0.0 && grad_smoothing < 1.0)) throw InvalidConfig("grad_smoothing", "must lie in [0, 1)");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw InvalidConfig("split_ratio", "must lie in (0, 1)");
    if (!(omega_min > 0.0)) throw InvalidConfig("omega_min", "must be > 0");
    if (!(phi_min > 0.0)) throw InvalidConfig("phi_min", "must be > 0");
    if (!(init_low > 0.0)) throw InvalidConfig("init_low", "must be > 0");
    if (!(init_high >= init_low)) throw InvalidConfig("init_high", "must be >= init_low");
    if (threads < 1) throw InvalidConfig("threads", "must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch;
  double train_mae;
  double test_mae;
  double grad_norm;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainState {
  ParamTrajectory params;
  std::size_t epoch = 0;
  std::vector<EpochRecord> history;
  double smoothed_grad = 0.0;
  bool stopped_by_gradient = false;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

namespace detail {

inline std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kSplitStream = 2;
inline constexpr std::uint64_t kShuffleStream = 3;

}  // namespace detail

/// Uniform positive draws on [init_low, init_high] for all four sequences; omega respects the floor.
inline ParamTrajectory init_params(std::size_t n_steps, const TrainConfig& cfg) {
  cfg.validate();
  auto rng = detail::seeded(cfg.seed, detail::kInitStream);
  std::uniform_real_distribution<double> U(cfg.init_low, cfg.init_high);
  ParamTrajectory p(n_steps);
  for (auto* v : {&p.phi_x, &p.omega_x, &p.phi_y, &p.omega_y})
    for (double& x : *v) x = U(rng);
  for (auto* v : {&p.omega_x, &p.omega_y})
    for (double& x : *v) x = std::max(x, cfg.omega_min);
  for (auto* v : {&p.phi_x, &p.phi_y})
    for (double& x : *v) x = std::max(x, cfg.phi_min);
  return p;
}

inline double predict(const HeatingRecord& r, const ParamTrajectory& params, const ModelSetup& m) {
  const auto rs = record_to_schedule(r, m.tau, m.cooling_ambient);
  const auto res = simulate(m.initial_temp, ParametricProvider{params, m.scale}, m.bc, rs.schedule, m.grid, m.tau,
                            SimulateOptions{m.probe, false});
  return probe_readout(res.final_field, m.probe);
}

template <ThermalProperties M>
double predict(const HeatingRecord& r, const M& material, const ModelSetup& m) {
  const auto rs = record_to_schedule(r, m.tau, m.cooling_ambient);
  const auto res = simulate(m.initial_temp, PhysicalProvider{material}, m.bc, rs.schedule, m.grid, m.tau,
                            SimulateOptions{m.probe, false});
  return probe_readout(res.final_field, m.probe);
}

struct SampleLoss {
  double loss;
  double residual;  // target - prediction
  double prediction;
  StateTape tape;
};

/// 1/2 (y - prediction)^2 + lambda1 * ||u||_1 for one record, with the tape for backprop.
inline SampleLoss sample_loss(const HeatingRecord& r, const ParamTrajectory& params, const ModelSetup& m,
                              double lambda1) {
  const auto rs = record_to_schedule(r, m.tau, m.cooling_ambient);
  auto res = simulate(m.initial_temp, ParametricProvider{params, m.scale}, m.bc, rs.schedule, m.grid, m.tau,
                      SimulateOptions{m.probe, true});
  const double pred = probe_readout(res.final_field, m.probe);
  const double resid = r.target_temp - pred;
  return {0.5 * resid * resid + lambda1 * params.l1_norm(), resid, pred, std::move(*res.tape)};
}

/// Mean of the per-record losses over a dataset for fixed parameters.
inline double dataset_loss(std::span<const HeatingRecord> data, const ParamTrajectory& params, const ModelSetup& m,
                           double lambda1) {
  if (data.empty()) throw InvalidArgument("cannot evaluate on an empty dataset");
  double acc = 0.0;
  for (const auto& r : data) {
    const double resid = r.target_temp - predict(r, params, m);
    acc += 0.5 * resid * resid;
  }
  return acc / static_cast<double>(data.size()) + lambda1 * params.l1_norm();
}

/// p <- p - eta (grad + lambda1 sign(p)) on the prefix the gradient covers, then the floors.
inline ParamTrajectory apply_update(ParamTrajectory params, const GradientSet& g, const TrainConfig& cfg) {
  if (g.size() > params.size()) throw InvalidArgument("gradient longer than the trajectory");
  auto sign = [](double x) { return double((x > 0.0) - (x < 0.0)); };
  auto step = [&](std::vector<double>& p, const std::vector<double>& d, double floor) {
    for (std::size_t n = 0; n < d.size(); ++n) p[n] = std::max(p[n] - cfg.eta * (d[n] + cfg.lambda1 * sign(p[n])), floor);
  };
  step(params.phi_x, g.d_phi_x, cfg.phi_min);
  step(params.omega_x, g.d_omega_x, cfg.omega_min);
  step(params.phi_y, g.d_phi_y, cfg.phi_min);
  step(params.omega_y, g.d_omega_y, cfg.omega_min);
  return params;
}

/// Mean absolute error of an arbitrary predictor. Records may be spread over threads; the sum is always
/// taken in record order so the result does not depend on the thread count.
template <class Predictor>
double evaluate_mae_with(std::span<const HeatingRecord> data, Predictor&& predictor, unsigned threads = 1) {
  if (data.empty()) throw InvalidArgument("cannot evaluate on an empty dataset");
  std::vector<double> err(data.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) err[i] = std::abs(data[i].target_temp - predictor(data[i]));
  };
  const std::size_t nt = std::min<std::size_t>(std::max(1u, threads), data.size());
  if (nt == 1) {
    work(0, data.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(nt);
    const std::size_t chunk = (data.size() + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t * chunk, std::min(data.size(), (t + 1) * chunk));
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }
  double sum = 0.0;
  for (double e : err) sum += e;
  return sum / static_cast<double>(data.size());
}

inline double evaluate_mae(std::span<const HeatingRecord> data, const ParamTrajectory& params, const ModelSetup& m,
                           unsigned threads = 1) {
  return evaluate_mae_with(data, [&](const HeatingRecord& r) { return predict(r, params, m); }, threads);
}

template <ThermalProperties M>
double evaluate_mae(std::span<const HeatingRecord> data, const M& material, const ModelSetup& m,
                    unsigned threads = 1) {
  return evaluate_mae_with(data, [&](const HeatingRecord& r) { return predict(r, material, m); }, threads);
}

/// Seeded shuffle, then the first floor(ratio * size) records train and the rest test.
inline std::pair<Dataset, Dataset> split_dataset(std::span<const HeatingRecord> data, double ratio,
                                                 std::uint64_t seed) {
  if (data.size() < 2) throw InvalidArgument("need at least 2 records to split");
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0, 1)");
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto rng = detail::seeded(seed, detail::kSplitStream);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(data.size())));
  std::pair<Dataset, Dataset> out;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < cut ? out.first : out.second).push_back(data[idx[i]]);
  return out;
}

struct EpochStats {
  double mean_loss = 0.0;
  double grad_norm = 0.0;  // mean L2 norm of the per-record data gradients
};

/// One pass over the training records in a seeded order that depends only on (seed, epoch number).
inline EpochStats train_epoch(std::span<const HeatingRecord> data, TrainState& state, const ModelSetup& m,
                              const TrainConfig& cfg) {
  if (data.empty()) throw InvalidArgument("training set is empty");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = detail::seeded(cfg.seed, detail::kShuffleStream, state.epoch);
  std::shuffle(order.begin(), order.end(), rng);

  EpochStats st;
  GradientSet acc(cfg.batch ? state.params.size() : 0);
  for (std::size_t i : order) {
    const auto sl = sample_loss(data[i], state.params, m, cfg.lambda1);
    const auto g = backprop(sl.tape, sl.residual, cfg.backprop);
    st.mean_loss += sl.loss;
    st.grad_norm += g.l2_norm();
    if (cfg.batch) {
      for (std::size_t n = 0; n < g.size(); ++n) {
        acc.d_phi_x[n] += g.d_phi_x[n];
        acc.d_omega_x[n] += g.d_omega_x[n];
        acc.d_phi_y[n] += g.d_phi_y[n];
        acc.d_omega_y[n] += g.d_omega_y[n];
      }
    } else {
      state.params = apply_update(std::move(state.params), g, cfg);
    }
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  if (cfg.batch) {
    for (auto* v : {&acc.d_phi_x, &acc.d_omega_x, &acc.d_phi_y, &acc.d_omega_y})
      for (double& x : *v) x *= inv;
    state.params = apply_update(std::move(state.params), acc, cfg);
  }
  st.mean_loss *= inv;
  st.grad_norm *= inv;
  ++state.epoch;
  return st;
}

struct TrainCallbacks {
  std::function<void(const TrainState&, const EpochRecord&)> on_epoch;
  std::function<void(const TrainState&)> on_checkpoint;
};

/// Trains from a fresh random trajectory on `train_set`, reporting test MAE on `test_set` after every epoch.
/// history[0] holds the untrained MAEs. Stops at max_epochs or when the smoothed gradient norm changes by
/// less than grad_stop between consecutive epochs.
inline TrainState train(std::span<const HeatingRecord> train_set, std::span<const HeatingRecord> test_set,
                        const ModelSetup& m, const TrainConfig& cfg, const TrainCallbacks& cb = {}) {
  cfg.validate();
  if (train_set.empty()) throw InvalidConfig("split_ratio", "training split is empty");
  if (test_set.empty()) throw InvalidConfig("split_ratio", "test split is empty");
  std::size_t horizon = std::max(cfg.min_horizon, max_horizon(train_set, m.tau, m.cooling_ambient));
  horizon = std::max(horizon, max_horizon(test_set, m.tau, m.cooling_ambient));
  const std::size_t nodes = (m.grid.nx + 1) * (m.grid.ny + 1);
  if (horizon <= nodes)
    spdlog::warn("trajectory length {} does not exceed the node count {}; relying on the omega floor", horizon, nodes);

  TrainState state;
  state.params = init_params(horizon, cfg);
  state.history.push_back({0, evaluate_mae(train_set, state.params, m, cfg.threads),
                           evaluate_mae(test_set, state.params, m, cfg.threads), 0.0});
  if (cb.on_epoch) cb.on_epoch(state, state.history.back());

  double prev_smoothed = 0.0;
  while (state.epoch < cfg.max_epochs) {
    const auto st = train_epoch(train_set, state, m, cfg);
    state.smoothed_grad =
        state.epoch == 1 ? st.grad_norm : cfg.grad_smoothing * state.smoothed_grad + (1.0 - cfg.grad_smoothing) * st.grad_norm;
    const EpochRecord row{state.epoch, evaluate_mae(train_set, state.params, m, cfg.threads),
                          evaluate_mae(test_set, state.params, m, cfg.threads), st.grad_norm};
    state.history.push_back(row);
    if (cb.on_epoch) cb.on_epoch(state, row);
    if (cb.on_checkpoint && cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0) cb.on_checkpoint(state);
    const bool slow = std::abs(state.smoothed_grad - prev_smoothed) < cfg.grad_stop;
    prev_smoothed = state.smoothed_grad;
    if (slow) {
      state.stopped_by_gradient = true;
      break;
    }
  }
  return state;
}

inline TrainState train(std::span<const HeatingRecord> data, const ModelSetup& m, const TrainConfig& cfg,
                        const TrainCallbacks& cb = {}) {
  cfg.validate();
  if (data.size() < 2) throw InvalidConfig("split_ratio", "need at least 2 records to split");
  const auto [tr, te] = split_dataset(data, cfg.split_ratio, cfg.seed);
  return train(tr, te, m, cfg, cb);
}

}  // namespace heatadapt
