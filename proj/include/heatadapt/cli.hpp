#pragma once

// Command implementations behind the heatadapt executable. Each command reads a RunConfig, writes its
// outputs plus a manifest into output_dir and returns the process exit status:
// 0 success, 1 failed gradient check, 2 bad configuration or input, 3 numerical failure.

#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "heatadapt/config.hpp"
#include "heatadapt/datagen.hpp"
#include "heatadapt/errors.hpp"
#include "heatadapt/gradients.hpp"
#include "heatadapt/io.hpp"
#include "heatadapt/materials.hpp"
#include "heatadapt/solver.hpp"
#include "heatadapt/trainer.hpp"

#ifndef HEATADAPT_VERSION
#define HEATADAPT_VERSION "0.1.0"
#endif

namespace heatadapt::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kBadConfig = 2, kNumerical = 3 };

inline constexpr std::string_view kCommands[] = {"gen-data", "simulate", "train", "eval", "gradcheck"};

/// Seed key that `--seed` maps to for each command.
inline std::string_view seed_key(std::string_view command) {
  if (command == "gen-data") return "gen.seed";
  if (command == "gradcheck") return "gradcheck.seed";
  return "train.seed";
}

namespace detail {

inline std::filesystem::path output_dir(const RunConfig& c) { return std::filesystem::path(c.str("output_dir")); }

inline void write_manifest(const RunConfig& c, std::string_view command) {
  const auto path = output_dir(c) / (std::string(command) + ".manifest");
  auto out = io::detail::open_out(path);
  out << "# heatadapt " << HEATADAPT_VERSION << '\n';
  out << "# command: " << command << '\n';
  out << "# seed: " << c.str(seed_key(command)) << '\n';
  write_config(out, c);
}

inline ParamTrajectory read_trajectory_key(const RunConfig& c) {
  return heatadapt::detail::keyed("trajectory", [&] { return io::read_trajectory(std::filesystem::path(c.str("trajectory"))); });
}

inline std::string sig6(double v) { return fmt::format("{:.6g}", v); }

inline Dataset select_split(const Dataset& data, const RunConfig& c) {
  const auto which = c.str("eval.split");
  if (which == "all") return data;
  if (which != "train" && which != "test") throw InvalidConfig("eval.split", "expected all, train or test");
  const auto tc = train_config(c);
  auto [tr, te] = split_dataset(data, tc.split_ratio, tc.seed);
  return which == "train" ? tr : te;
}

inline int gen_data(const RunConfig& c, std::ostream& out) {
  const auto g = generator_config(c);
  const auto res = generate_dataset(g);
  const std::filesystem::path path = c.str("dataset");
  io::write_dataset(path, res.records);
  write_manifest(c, "gen-data");
  out << "records=" << res.records.size() << '\n';
  out << "skipped=" << res.skipped.size() << '\n';
  out << "dataset=" << path.string() << '\n';
  return kOk;
}

inline int simulate_cmd(const RunConfig& c, std::ostream& out) {
  const auto m = model_setup(c);
  const auto rec = sim_record(c);
  const auto rs = record_to_schedule(rec, m.tau, m.cooling_ambient);
  const SimulateOptions opts{m.probe, false};
  const auto model = c.str("sim.model");
  SimulationResult res;
  if (model == "physical") {
    const auto mat = material(c);
    res = simulate(m.initial_temp, PhysicalProvider{mat}, m.bc, rs.schedule, m.grid, m.tau, opts);
  } else if (model == "regression") {
    const auto mat = material(c);
    const RegressionMaterial reg(mat, c.count("material.regression_degree"));
    res = simulate(m.initial_temp, PhysicalProvider{reg}, m.bc, rs.schedule, m.grid, m.tau, opts);
  } else if (model == "parametric") {
    if (c.str("trajectory").empty()) throw InvalidConfig("trajectory", "parametric simulation needs a trajectory file");
    const auto traj = read_trajectory_key(c);
    if (traj.size() < rs.horizon()) throw InvalidConfig("trajectory", "shorter than the simulated horizon");
    res = simulate(m.initial_temp, ParametricProvider{traj, m.scale}, m.bc, rs.schedule, m.grid, m.tau, opts);
  } else {
    throw InvalidConfig("sim.model", "expected physical, regression or parametric");
  }
  const auto dir = output_dir(c);
  io::write_field(dir / "field.csv", res.final_field);
  io::write_probe_history(dir / "probe.csv", res.probe_history, m.tau);
  write_manifest(c, "simulate");
  out << "steps=" << rs.horizon() << '\n';
  out << "probe_T=" << sig6(res.probe_history.back()) << '\n';
  out << "field_mean_T=" << sig6(res.final_field.mean()) << '\n';
  return kOk;
}

inline int train_cmd(const RunConfig& c, std::ostream& out) {
  const auto m = model_setup(c);
  const auto tc = train_config(c);
  const auto data = heatadapt::detail::keyed("dataset", [&] { return io::read_dataset(std::filesystem::path(c.str("dataset"))); });
  if (data.size() < 2) throw InvalidConfig("dataset", "need at least 2 records");
  const auto [tr, te] = split_dataset(data, tc.split_ratio, tc.seed);
  const auto dir = output_dir(c);

  auto curve = io::detail::open_out(dir / "curve.csv");
  curve << io::kCurveHeader << '\n';
  TrainCallbacks cb;
  cb.on_epoch = [&](const TrainState&, const EpochRecord& row) {
    curve << io::curve_row(row);
    curve.flush();
    if (row.epoch % 50 == 0)
      spdlog::info("epoch {} train_mae={:.6g} test_mae={:.6g} grad_norm={:.6g}", row.epoch, row.train_mae, row.test_mae,
                   row.grad_norm);
  };
  cb.on_checkpoint = [&](const TrainState& s) { io::write_trajectory(dir / "checkpoint.csv", s.params); };
  const auto st = heatadapt::detail::prefixed("train.", [&] { return train(tr, te, m, tc, cb); });
  io::write_trajectory(dir / "trajectory.csv", st.params);
  write_manifest(c, "train");

  out << "epochs=" << st.epoch << '\n';
  out << "stopped_by=" << (st.stopped_by_gradient ? "gradient" : "max_epochs") << '\n';
  out << "initial_test_mae=" << sig6(st.history.front().test_mae) << '\n';
  out << "final_train_mae=" << sig6(st.history.back().train_mae) << '\n';
  out << "l1_norm=" << sig6(st.params.l1_norm()) << '\n';
  out << "final_test_mae=" << sig6(st.history.back().test_mae) << '\n';
  return kOk;
}

inline int eval_cmd(const RunConfig& c, std::ostream& out) {
  const auto m = model_setup(c);
  const auto threads = thread_count(c);
  const auto all = heatadapt::detail::keyed("dataset", [&] { return io::read_dataset(std::filesystem::path(c.str("dataset"))); });
  const auto data = select_split(all, c);
  if (data.empty()) throw InvalidConfig("dataset", "no records to evaluate");
  const auto model = c.str("eval.model");
  double mae = 0.0;
  if (model == "parametric") {
    if (c.str("trajectory").empty()) throw InvalidConfig("trajectory", "parametric evaluation needs a trajectory file");
    const auto traj = read_trajectory_key(c);
    if (traj.size() < max_horizon(data, m.tau, m.cooling_ambient))
      throw InvalidConfig("trajectory", "shorter than the longest record");
    mae = evaluate_mae(data, traj, m, threads);
  } else if (model == "physical") {
    mae = evaluate_mae(data, material(c), m, threads);
  } else if (model == "regression") {
    const RegressionMaterial reg(material(c), c.count("material.regression_degree"));
    mae = evaluate_mae(data, reg, m, threads);
  } else {
    throw InvalidConfig("eval.model", "expected parametric, physical or regression");
  }
  write_manifest(c, "eval");
  out << "records=" << data.size() << '\n';
  // a temperature difference has the same magnitude in K and degC
  out << fmt::format("mae={:.3f} K ({:.3f} degC-equivalent)\n", mae, mae);
  out << fmt::format("mae_exact={}\n", mae);
  return kOk;
}

inline int gradcheck_cmd(const RunConfig& c, std::ostream& out) {
  const auto trials = c.count("gradcheck.trials");
  if (trials < 1) throw InvalidConfig("gradcheck.trials", "must be >= 1");
  const auto seed = static_cast<std::uint64_t>(c.count("gradcheck.seed"));
  const double tol_local = c.real("gradcheck.tol_local");
  const double tol_bp = c.real("gradcheck.tol_backprop");
  if (!(tol_local > 0.0)) throw InvalidConfig("gradcheck.tol_local", "must be > 0");
  if (!(tol_bp > 0.0)) throw InvalidConfig("gradcheck.tol_backprop", "must be > 0");

  bool ok = true;
  out << fmt::format("{:<14} {:>6} {:>12} {:>10} {:>6}  {}\n", "target", "trials", "max_rel_err", "tolerance",
                     "status", "worst_point");
  for (auto t : {FdTarget::DstateDT, FdTarget::DstateDphi, FdTarget::DstateDomega, FdTarget::Backprop}) {
    const auto rep = finite_difference_check(t, trials, seed);
    const double tol = t == FdTarget::Backprop ? tol_bp : tol_local;
    const bool pass = rep.max_rel_err <= tol;
    ok = ok && pass;
    out << fmt::format("{:<14} {:>6} {:>12.6g} {:>10.3g} {:>6}  {}\n", to_string(t), rep.trials, rep.max_rel_err, tol,
                       pass ? "PASS" : "FAIL", rep.worst_point);
  }
  write_manifest(c, "gradcheck");
  return ok ? kOk : kCheckFailed;
}

}  // namespace detail

/// Runs one command. `config_path` may be empty to start from the defaults; overrides are `--key=value`.
inline int dispatch(std::string_view command, const std::optional<std::filesystem::path>& config_path,
                    std::span<const std::string> overrides, std::ostream& out, std::ostream& err) {
  try {
    RunConfig c = config_path ? load_config(*config_path) : RunConfig{};
    apply_overrides(c, overrides);
    if (command == "gen-data") return detail::gen_data(c, out);
    if (command == "simulate") return detail::simulate_cmd(c, out);
    if (command == "train") return detail::train_cmd(c, out);
    if (command == "eval") return detail::eval_cmd(c, out);
    if (command == "gradcheck") return detail::gradcheck_cmd(c, out);
    err << "error: unknown command '" << command << "'\n";
    return kBadConfig;
  } catch (const InvalidConfig& e) {
    err << "error: bad configuration: " << e.what() << '\n';
    return kBadConfig;
  } catch (const InvalidArgument& e) {
    err << "error: bad input: " << e.what() << '\n';
    return kBadConfig;
  } catch (const NumericalError& e) {
    err << "error: numerical failure in " << command << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  }
}

}  // namespace heatadapt::cli
