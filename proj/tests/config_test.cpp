#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "heatadapt/config.hpp"
#include "support/temp_dir.hpp"

using namespace heatadapt;
using heatadapt::testing_support::TempDir;

namespace {

std::string key_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InvalidConfig& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(RunConfig, KeysAreUniqueAndDefaultsParse) {
  std::set<std::string_view> seen;
  for (const auto& k : kConfigKeys) {
    EXPECT_TRUE(seen.insert(k.name).second) << k.name;
    EXPECT_FALSE(k.unit.empty()) << k.name;
    EXPECT_FALSE(k.help.empty()) << k.name;
  }
  const RunConfig c;
  EXPECT_NO_THROW(model_setup(c));
  EXPECT_NO_THROW(train_config(c));
  EXPECT_NO_THROW(generator_config(c));
  EXPECT_NO_THROW(sim_record(c));
}

TEST(RunConfig, DefaultsMatchLibraryDefaults) {
  const RunConfig c;
  const auto t = train_config(c);
  const TrainConfig lib;
  EXPECT_EQ(t.eta, lib.eta);
  EXPECT_EQ(t.lambda1, lib.lambda1);
  EXPECT_EQ(t.max_epochs, lib.max_epochs);
  EXPECT_EQ(t.grad_stop, lib.grad_stop);
  EXPECT_EQ(t.split_ratio, lib.split_ratio);
  EXPECT_EQ(t.init_low, lib.init_low);
  EXPECT_EQ(t.init_high, lib.init_high);
  const auto m = model_setup(c);
  const ModelSetup lm;
  EXPECT_EQ(m.scale.phi, lm.scale.phi);
  EXPECT_EQ(m.scale.omega, lm.scale.omega);
  const auto g = generator_config(c);
  const GeneratorConfig lg;
  EXPECT_EQ(g.zone_time.lo, lg.zone_time.lo);
  EXPECT_EQ(g.cooling_time.hi, lg.cooling_time.hi);
  EXPECT_EQ(g.noise_sigma, lg.noise_sigma);
}

TEST(RunConfig, ParsesCommentsWhitespaceAndLaterLinesWin) {
  std::istringstream in("# heading\n  grid.nx = 30   # trailing\n\ntau=60\ntau = 90\ntrain.batch = true\n");
  RunConfig c;
  parse_config(in, c);
  EXPECT_EQ(c.count("grid.nx"), 30u);
  EXPECT_EQ(c.real("tau"), 90.0);
  EXPECT_TRUE(c.boolean("train.batch"));
  EXPECT_EQ(model_setup(c).grid.nx, 30u);
}

TEST(RunConfig, UnknownKeyNamesTheKey) {
  std::istringstream in("grid.nx = 10\ngrid.nz = 3\n");
  RunConfig c;
  EXPECT_EQ(key_of([&] { parse_config(in, c); }), "grid.nz");
  EXPECT_EQ(key_of([&] { c.set("nope", "1"); }), "nope");
  std::istringstream noeq("grid.nx 10\n");
  EXPECT_THROW(parse_config(noeq, c), InvalidConfig);
}

TEST(RunConfig, BadValuesNameTheKey) {
  auto with = [](std::string key, std::string value) {
    RunConfig c;
    c.set(key, value);
    return c;
  };
  EXPECT_EQ(key_of([&] { model_setup(with("tau", "fast")); }), "tau");
  EXPECT_EQ(key_of([&] { model_setup(with("tau", "-1")); }), "tau");
  EXPECT_EQ(key_of([&] { model_setup(with("grid.nx", "2.5")); }), "grid.nx");
  EXPECT_EQ(key_of([&] { model_setup(with("grid.nx", "2")); }), "grid");
  EXPECT_EQ(key_of([&] { model_setup(with("probe.k", "99")); }), "probe");
  EXPECT_EQ(key_of([&] { model_setup(with("bc.eps2", "1.5")); }), "bc");
  EXPECT_EQ(key_of([&] { train_config(with("train.eta", "0")); }), "train.eta");
  EXPECT_EQ(key_of([&] { train_config(with("train.split_ratio", "1")); }), "train.split_ratio");
  EXPECT_EQ(key_of([&] { train_config(with("train.batch", "maybe")); }), "train.batch");
  EXPECT_EQ(key_of([&] { train_config(with("train.backprop", "magic")); }), "train.backprop");
  EXPECT_EQ(key_of([&] { train_config(with("threads", "0")); }), "threads");
  EXPECT_EQ(key_of([&] { generator_config(with("gen.zone_temp_min", "2000")); }), "gen.zone_temp");
  EXPECT_EQ(key_of([&] { generator_config(with("gen.n_records", "-4")); }), "gen.n_records");
  EXPECT_EQ(key_of([&] { sim_record(with("sim.zt12", "-5")); }), "sim");
}

TEST(RunConfig, InfinityAcceptedForStopThreshold) {
  RunConfig c;
  c.set("train.grad_stop", "inf");
  EXPECT_TRUE(std::isinf(train_config(c).grad_stop));
}

TEST(RunConfig, OverridesWin) {
  RunConfig c;
  const std::vector<std::string> ov{"--grid.nx=40", "tau=30", "--grid.nx=50"};
  apply_overrides(c, ov);
  EXPECT_EQ(c.count("grid.nx"), 50u);
  EXPECT_EQ(c.real("tau"), 30.0);
  const std::vector<std::string> bad{"--grid.nx"};
  EXPECT_THROW(apply_overrides(c, bad), InvalidConfig);
}

TEST(RunConfig, WrittenConfigReloadsIdentically) {
  RunConfig c;
  c.set("grid.nx", "33");
  c.set("train.lambda1", "0");
  c.set("dataset", "some dir/data.csv");
  std::stringstream s;
  write_config(s, c);
  RunConfig back;
  parse_config(s, back);
  EXPECT_EQ(back, c);
}

TEST(RunConfig, MaterialTablesFromFiles) {
  TempDir dir("config");
  {
    std::ofstream f(dir / "k.csv");
    f << "T,value\n300,40\n1500,20\n";
  }
  RunConfig c;
  c.set("material.conductivity_file", (dir / "k.csv").string());
  const auto m = material(c);
  EXPECT_DOUBLE_EQ(m.conductivity(900), 30.0);
  EXPECT_DOUBLE_EQ(m.density(300), default_carbon_steel().density(300));
  c.set("material.density_file", (dir / "missing.csv").string());
  EXPECT_EQ(key_of([&] { material(c); }), "material.density_file");
}

TEST(RunConfig, LoadConfigFile) {
  TempDir dir("config");
  {
    std::ofstream f(dir / "run.conf");
    f << "grid.nx = 12\n";
  }
  EXPECT_EQ(load_config(dir / "run.conf").count("grid.nx"), 12u);
  EXPECT_THROW(load_config(dir / "none.conf"), InvalidConfig);
}

TEST(ShippedConfigs, ParseAndDescribeFixedHorizons) {
  const std::filesystem::path dir = HEATADAPT_SOURCE_DIR "/configs";
  const std::pair<const char*, std::size_t> expected[] = {{"benchmark.conf", 20}, {"full_scale.conf", 50}, {"quick.conf", 11}};
  for (const auto& [name, horizon] : expected) {
    SCOPED_TRACE(name);
    const auto c = load_config(dir / name);
    auto g = generator_config(c);
    ASSERT_NO_THROW(train_config(c));
    g.n_records = 30;
    g.setup.grid = build_spatial_grid(0.1, 0.1, 4, 4);  // horizon depends only on the timing keys
    const auto data = generate_dataset(g).records;
    for (const auto& r : data) EXPECT_EQ(record_to_schedule(r, g.setup.tau).horizon(), horizon);
  }
}
