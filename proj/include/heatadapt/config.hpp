#pragma once

// Flat key=value run configuration. Every key has a default, a unit and a one-line description;
// unknown keys and unparsable values are rejected with the key named in the error.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heatadapt/datagen.hpp"
#include "heatadapt/errors.hpp"
#include "heatadapt/field.hpp"
#include "heatadapt/gradients.hpp"
#include "heatadapt/grid.hpp"
#include "heatadapt/io.hpp"
#include "heatadapt/materials.hpp"
#include "heatadapt/trainer.hpp"

namespace heatadapt {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view unit;
  std::string_view help;
};

// clang-format off
inline constexpr ConfigKey kConfigKeys[] = {
  // geometry and time
  {"grid.x_max", "0.1", "m", "section extent along x"},
  {"grid.y_max", "0.1", "m", "section extent along y"},
  {"grid.nx", "20", "-", "mesh steps along x (nodes = nx + 1)"},
  {"grid.ny", "20", "-", "mesh steps along y (nodes = ny + 1)"},
  {"tau", "120", "s", "time step"},
  {"initial_temp", "300", "K", "uniform initial billet temperature"},
  {"cooling_ambient", "300", "K", "ambient temperature during the cooling segment"},
  {"probe.k", "-1", "-", "x index of the pyrometer node, -1 for nx / 2"},
  {"probe.q", "-1", "-", "y index of the pyrometer node, -1 for ny"},
  // boundary
  {"bc.kappa1", "30", "W/(m^2 K)", "convective coefficient on x = 0"},
  {"bc.kappa2", "30", "W/(m^2 K)", "convective coefficient on y = y_max"},
  {"bc.eps1", "0.7", "-", "emissivity on x = 0"},
  {"bc.eps2", "0.7", "-", "emissivity on y = y_max"},
  {"bc.q1", "0", "W/m^2", "imposed flux on y = 0, positive heats"},
  {"bc.q2", "0", "W/m^2", "imposed flux on x = x_max, positive cools"},
  // material
  {"material.conductivity_file", "", "path", "T,value table in W/(m K); empty for the built-in carbon steel"},
  {"material.density_file", "", "path", "T,value table in kg/m^3; empty for the built-in carbon steel"},
  {"material.heat_capacity_file", "", "path", "T,value table in J/(kg K); empty for the built-in carbon steel"},
  {"material.regression_degree", "2", "-", "polynomial degree of the classical baseline"},
  // trainable parameter units
  {"scale.phi", "0.4", "W/(m K)", "physical value of one stored phi unit"},
  {"scale.omega", "5e4", "J/(m^3 K)", "physical value of one stored omega unit"},
  // training
  {"train.eta", "0.001", "-", "learning rate"},
  {"train.lambda1", "0.05", "-", "L1 weight"},
  {"train.max_epochs", "8450", "-", "epoch cap"},
  {"train.grad_stop", "1e-6", "-", "stop when the smoothed gradient norm changes by less than this"},
  {"train.grad_smoothing", "0.9", "-", "exponential smoothing factor of the gradient norm"},
  {"train.split_ratio", "0.8", "-", "training share of the dataset"},
  {"train.seed", "1", "-", "seed for initialisation, split and shuffling"},
  {"train.init_low", "70", "stored units", "lower bound of the uniform initial parameters"},
  {"train.init_high", "140", "stored units", "upper bound of the uniform initial parameters"},
  {"train.omega_min", "1e-12", "stored units", "lower clamp for omega"},
  {"train.phi_min", "1e-12", "stored units", "lower clamp for phi"},
  {"train.min_horizon", "0", "steps", "minimum trajectory length"},
  {"train.batch", "false", "-", "average gradients over the epoch instead of per-record updates"},
  {"train.checkpoint_every", "550", "epochs", "trajectory checkpoint cadence, 0 disables"},
  {"train.backprop", "adjoint", "-", "adjoint or probe_chain"},
  // synthetic data
  {"gen.n_records", "200", "-", "records to draw"},
  {"gen.zone_time_min", "690", "s", "shortest zone-pair dwell"},
  {"gen.zone_time_max", "750", "s", "longest zone-pair dwell"},
  {"gen.zone_temp_min", "1100", "K", "coolest zone temperature"},
  {"gen.zone_temp_max", "1500", "K", "hottest zone temperature"},
  {"gen.cooling_time_min", "190", "s", "shortest cooling time"},
  {"gen.cooling_time_max", "290", "s", "longest cooling time"},
  {"gen.pressure_min", "0.5", "-", "zone pressure lower bound (carried, not used)"},
  {"gen.pressure_max", "1.5", "-", "zone pressure upper bound (carried, not used)"},
  {"gen.noise_sigma", "5", "K", "pyrometer noise standard deviation"},
  {"gen.seed", "1", "-", "generator seed"},
  {"gen.max_skip_fraction", "0.01", "-", "largest tolerated share of failed draws"},
  // single simulation
  {"sim.model", "physical", "-", "physical, regression or parametric"},
  {"sim.zt12", "720", "s", "dwell in zones 1-2"},
  {"sim.zt34", "720", "s", "dwell in zones 3-4"},
  {"sim.zt56", "720", "s", "dwell in zones 5-6"},
  {"sim.T135", "1200", "K", "odd-zone temperature"},
  {"sim.T246", "1400", "K", "even-zone temperature"},
  {"sim.cool", "240", "s", "cooling time"},
  // evaluation
  {"eval.model", "parametric", "-", "parametric, physical or regression"},
  {"eval.split", "all", "-", "all, train or test (train/test use train.split_ratio and train.seed)"},
  // gradient checks
  {"gradcheck.trials", "100", "-", "random points per check"},
  {"gradcheck.seed", "7", "-", "sampling seed"},
  {"gradcheck.tol_local", "1e-4", "-", "relative tolerance of the single-step checks"},
  {"gradcheck.tol_backprop", "1e-3", "-", "relative tolerance of the end-to-end check"},
  // files and execution
  {"dataset", "dataset.csv", "path", "dataset read by train and eval, written by gen-data"},
  {"trajectory", "", "path", "parameter trajectory read by eval and parametric simulate"},
  {"output_dir", "out", "path", "directory for run outputs and the manifest"},
  {"threads", "1", "-", "worker cap for evaluation and generation"},
};
// clang-format on

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : kConfigKeys)
    if (k.name == name) return &k;
  return nullptr;
}

class RunConfig {
 public:
  RunConfig() {
    for (const auto& k : kConfigKeys) values_.emplace(std::string(k.name), std::string(k.default_value));
  }

  void set(std::string_view key, std::string_view value) {
    if (!find_config_key(key)) throw InvalidConfig(std::string(key), "unknown key");
    values_[std::string(key)] = std::string(value);
  }

  const std::string& raw(std::string_view key) const {
    const auto it = values_.find(std::string(key));
    if (it == values_.end()) throw InvalidConfig(std::string(key), "unknown key");
    return it->second;
  }

  std::string str(std::string_view key) const { return raw(key); }

  double real(std::string_view key) const {
    const auto& s = raw(key);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
      if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
      throw InvalidConfig(std::string(key), "expected a number, got '" + s + "'");
    }
    return v;
  }

  std::int64_t integer(std::string_view key) const {
    const auto& s = raw(key);
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size())
      throw InvalidConfig(std::string(key), "expected an integer, got '" + s + "'");
    return v;
  }

  std::size_t count(std::string_view key) const {
    const auto v = integer(key);
    if (v < 0) throw InvalidConfig(std::string(key), "must be >= 0");
    return static_cast<std::size_t>(v);
  }

  bool boolean(std::string_view key) const {
    const auto& s = raw(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InvalidConfig(std::string(key), "expected true or false, got '" + s + "'");
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

 private:
  std::map<std::string, std::string> values_;
};

/// Lines are `key = value`; `#` starts a comment; blank lines are ignored. Later lines win.
inline void parse_config(std::istream& in, RunConfig& cfg, std::string_view source = "<stream>") {
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto t = io::detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw InvalidConfig(std::string(t), std::string(source) + ":" + std::to_string(no) + ": expected key = value");
    const auto key = io::detail::trim(t.substr(0, eq));
    if (!find_config_key(key))
      throw InvalidConfig(std::string(key), std::string(source) + ":" + std::to_string(no) + ": unknown key");
    cfg.set(key, io::detail::trim(t.substr(eq + 1)));
  }
}

inline RunConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InvalidConfig("config", "cannot open '" + p.string() + "'");
  RunConfig cfg;
  parse_config(in, cfg, p.string());
  return cfg;
}

/// Applies `--key=value` (or `key=value`) overrides in order.
inline void apply_overrides(RunConfig& cfg, std::span<const std::string> overrides) {
  for (const auto& o : overrides) {
    std::string_view s = o;
    if (s.starts_with("--")) s.remove_prefix(2);
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw InvalidConfig(std::string(s), "override must be --key=value");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
}

/// Every key with its value, unit and description; loadable by parse_config.
inline void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& k : kConfigKeys)
    out << k.name << " = " << cfg.raw(k.name) << "  # [" << k.unit << "] " << k.help << '\n';
}

// ---- typed views

namespace detail {

template <class F>
auto keyed(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const InvalidConfig&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(std::string(key), e.what());
  }
}

/// Re-raises a library config error under its dotted run-config key.
template <class F>
auto prefixed(std::string_view prefix, F&& f) {
  try {
    return f();
  } catch (const InvalidConfig& e) {
    const std::string msg = e.what();
    throw InvalidConfig(std::string(prefix) + e.key(), msg.substr(std::min(msg.size(), e.key().size() + 2)));
  }
}

inline std::optional<std::size_t> probe_index(const RunConfig& c, std::string_view key) {
  const auto v = c.integer(key);
  if (v < -1) throw InvalidConfig(std::string(key), "must be -1 or a node index");
  return v < 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(v));
}

}  // namespace detail

inline unsigned thread_count(const RunConfig& c) {
  const auto n = c.count("threads");
  if (n < 1 || n > 1024) throw InvalidConfig("threads", "must lie in [1, 1024]");
  return static_cast<unsigned>(n);
}

inline ModelSetup model_setup(const RunConfig& c) {
  ModelSetup m;
  m.grid = detail::keyed("grid", [&] {
    return build_spatial_grid(c.real("grid.x_max"), c.real("grid.y_max"), c.count("grid.nx"), c.count("grid.ny"));
  });
  m.tau = c.real("tau");
  if (!(m.tau > 0.0)) throw InvalidConfig("tau", "must be > 0");
  m.initial_temp = c.real("initial_temp");
  if (!(m.initial_temp > 0.0)) throw InvalidConfig("initial_temp", "must be > 0");
  m.cooling_ambient = c.real("cooling_ambient");
  if (!(m.cooling_ambient > 0.0)) throw InvalidConfig("cooling_ambient", "must be > 0");
  m.probe.k = detail::probe_index(c, "probe.k");
  m.probe.q = detail::probe_index(c, "probe.q");
  detail::keyed("probe", [&] { return m.probe.resolve(m.grid); });
  m.bc.kappa1 = c.real("bc.kappa1");
  m.bc.kappa2 = c.real("bc.kappa2");
  m.bc.eps1 = c.real("bc.eps1");
  m.bc.eps2 = c.real("bc.eps2");
  m.bc.q1 = c.real("bc.q1");
  m.bc.q2 = c.real("bc.q2");
  detail::keyed("bc", [&] {
    m.bc.validate();
    return 0;
  });
  m.scale = {c.real("scale.phi"), c.real("scale.omega")};
  if (!(m.scale.phi > 0.0)) throw InvalidConfig("scale.phi", "must be > 0");
  if (!(m.scale.omega > 0.0)) throw InvalidConfig("scale.omega", "must be > 0");
  return m;
}

inline MaterialModel material(const RunConfig& c) {
  const auto builtin = default_carbon_steel();
  auto table = [&](std::string_view key, PropertyKind kind, const PropertyTable& fallback) {
    const auto path = c.str(key);
    if (path.empty()) return fallback;
    return detail::keyed(key, [&] { return io::read_property_table(std::filesystem::path(path), kind); });
  };
  const bool custom = !c.str("material.conductivity_file").empty() || !c.str("material.density_file").empty() ||
                      !c.str("material.heat_capacity_file").empty();
  return MaterialModel(custom ? "custom" : builtin.name,
                       table("material.conductivity_file", PropertyKind::Conductivity, builtin.lambda_table),
                       table("material.density_file", PropertyKind::Density, builtin.rho_table),
                       table("material.heat_capacity_file", PropertyKind::HeatCapacity, builtin.c_table));
}

inline BackpropMode backprop_mode(const RunConfig& c) {
  const auto s = c.str("train.backprop");
  if (s == "adjoint") return BackpropMode::Adjoint;
  if (s == "probe_chain") return BackpropMode::ProbeChain;
  throw InvalidConfig("train.backprop", "expected adjoint or probe_chain, got '" + s + "'");
}

inline TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.eta = c.real("train.eta");
  t.lambda1 = c.real("train.lambda1");
  t.max_epochs = c.count("train.max_epochs");
  t.grad_stop = c.real("train.grad_stop");
  t.grad_smoothing = c.real("train.grad_smoothing");
  t.split_ratio = c.real("train.split_ratio");
  t.seed = static_cast<std::uint64_t>(c.count("train.seed"));
  t.init_low = c.real("train.init_low");
  t.init_high = c.real("train.init_high");
  t.omega_min = c.real("train.omega_min");
  t.phi_min = c.real("train.phi_min");
  t.min_horizon = c.count("train.min_horizon");
  t.batch = c.boolean("train.batch");
  t.checkpoint_every = c.count("train.checkpoint_every");
  t.threads = thread_count(c);
  t.backprop = backprop_mode(c);
  detail::prefixed("train.", [&] {
    t.validate();
    return 0;
  });
  return t;
}

inline GeneratorConfig generator_config(const RunConfig& c) {
  GeneratorConfig g;
  g.n_records = c.count("gen.n_records");
  g.material = material(c);
  g.zone_time = {c.real("gen.zone_time_min"), c.real("gen.zone_time_max")};
  g.zone_temp = {c.real("gen.zone_temp_min"), c.real("gen.zone_temp_max")};
  g.cooling_time = {c.real("gen.cooling_time_min"), c.real("gen.cooling_time_max")};
  g.pressure = {c.real("gen.pressure_min"), c.real("gen.pressure_max")};
  g.noise_sigma = c.real("gen.noise_sigma");
  g.seed = static_cast<std::uint64_t>(c.count("gen.seed"));
  g.setup = model_setup(c);
  g.threads = thread_count(c);
  g.max_skip_fraction = c.real("gen.max_skip_fraction");
  detail::prefixed("gen.", [&] {
    g.validate();
    return 0;
  });
  return g;
}

inline HeatingRecord sim_record(const RunConfig& c) {
  HeatingRecord r;
  r.zone_time_12 = c.real("sim.zt12");
  r.zone_time_34 = c.real("sim.zt34");
  r.zone_time_56 = c.real("sim.zt56");
  r.zone_temp_135 = c.real("sim.T135");
  r.zone_temp_246 = c.real("sim.T246");
  r.cooling_time = c.real("sim.cool");
  detail::keyed("sim", [&] {
    r.validate();
    return 0;
  });
  return r;
}

}  // namespace heatadapt
