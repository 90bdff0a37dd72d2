#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <spdlog/spdlog.h>

#include "heatadapt/cli.hpp"
#include "support/temp_dir.hpp"

using namespace heatadapt;
using heatadapt::testing_support::TempDir;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::string_view command, std::vector<std::string> overrides) {
  std::ostringstream out, err;
  const int rc = cli::dispatch(command, std::nullopt, overrides, out, err);
  return {rc, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.starts_with(key + "=")) return line.substr(key.size() + 1);
  return "<missing>";
}

// Small, fast problem shared by the workflow tests.
std::vector<std::string> base(const TempDir& d) {
  return {"--grid.nx=8", "--grid.ny=8", "--tau=240", "--gen.n_records=20",
          "--dataset=" + (d / "data.csv").string(), "--output_dir=" + (d / "out").string()};
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class Quiet : public ::testing::Environment {
  void SetUp() override { spdlog::set_level(spdlog::level::off); }
};
const auto* const quiet = ::testing::AddGlobalTestEnvironment(new Quiet);

}  // namespace

TEST(Cli, NoiselessDataEvaluatesToZeroAgainstItsModel) {
  TempDir d("cli");
  ASSERT_EQ(run("gen-data", base(d) + std::vector<std::string>{"--gen.noise_sigma=0"}).status, 0);
  const auto r = run("eval", base(d) + std::vector<std::string>{"--eval.model=physical"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("mae=0.000 K"), std::string::npos) << r.out;
}

TEST(Cli, TrainThenEvalReproducesFinalTestMae) {
  TempDir d("cli");
  ASSERT_EQ(run("gen-data", base(d)).status, 0);
  const auto t = run("train", base(d) + std::vector<std::string>{"--train.max_epochs=5", "--train.grad_stop=0"});
  ASSERT_EQ(t.status, 0) << t.err;
  const auto curve = io::read_curve(d / "out/curve.csv");
  ASSERT_EQ(curve.size(), 6u);
  EXPECT_EQ(value_of(t.out, "final_test_mae"), fmt::format("{:.6g}", curve.back().test_mae));
  const auto e = run("eval", base(d) + std::vector<std::string>{"--eval.split=test",
                                                                "--trajectory=" + (d / "out/trajectory.csv").string()});
  ASSERT_EQ(e.status, 0) << e.err;
  EXPECT_EQ(std::stod(value_of(e.out, "mae_exact")), curve.back().test_mae);
}

TEST(Cli, RerunsAreByteIdentical) {
  TempDir d("cli");
  const auto args = base(d) + std::vector<std::string>{"--train.max_epochs=3", "--train.grad_stop=0"};
  ASSERT_EQ(run("gen-data", args).status, 0);
  const auto data1 = slurp(d / "data.csv");
  ASSERT_EQ(run("train", args).status, 0);
  const auto curve1 = slurp(d / "out/curve.csv"), traj1 = slurp(d / "out/trajectory.csv");
  const auto man1 = slurp(d / "out/train.manifest");
  ASSERT_EQ(run("gen-data", args).status, 0);
  ASSERT_EQ(run("train", args).status, 0);
  EXPECT_EQ(slurp(d / "data.csv"), data1);
  EXPECT_EQ(slurp(d / "out/curve.csv"), curve1);
  EXPECT_EQ(slurp(d / "out/trajectory.csv"), traj1);
  EXPECT_EQ(slurp(d / "out/train.manifest"), man1);
}

TEST(Cli, ManifestCapturesTheConfiguration) {
  TempDir d("cli");
  const auto args = base(d) + std::vector<std::string>{"--gen.seed=17"};
  ASSERT_EQ(run("gen-data", args).status, 0);
  const auto text = slurp(d / "out/gen-data.manifest");
  EXPECT_NE(text.find("# seed: 17"), std::string::npos);
  EXPECT_NE(text.find("# heatadapt " HEATADAPT_VERSION), std::string::npos);
  std::istringstream in(text);
  RunConfig back;
  parse_config(in, back);
  RunConfig expected;
  apply_overrides(expected, args);
  EXPECT_EQ(back, expected);
}

TEST(Cli, SimulateWritesFieldAndProbe) {
  TempDir d("cli");
  const auto r = run("simulate", base(d));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto steps = std::stoul(value_of(r.out, "steps"));
  std::ifstream f(d / "out/field.csv");
  const auto m = io::read_matrix(f);
  ASSERT_EQ(m.size(), 9u);
  EXPECT_EQ(m[0].size(), 9u);
  const auto probe = slurp(d / "out/probe.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(probe.begin(), probe.end(), '\n')), steps + 2);
  EXPECT_EQ(run("simulate", base(d) + std::vector<std::string>{"--sim.model=regression"}).status, 0);
}

TEST(Cli, BadConfigurationExitsTwoAndNamesTheKey) {
  TempDir d("cli");
  auto r = run("train", base(d) + std::vector<std::string>{"--train.eta=-1"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("train.eta"), std::string::npos) << r.err;
  r = run("gen-data", base(d) + std::vector<std::string>{"--grid.nz=4"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("grid.nz"), std::string::npos) << r.err;
  EXPECT_EQ(run("eval", base(d) + std::vector<std::string>{"--dataset=" + (d / "missing.csv").string()}).status, 2);
  EXPECT_EQ(run("eval", base(d)).status, 2);  // no dataset written yet
  EXPECT_EQ(run("fly", base(d)).status, 2);
  std::ostringstream out, err;
  EXPECT_EQ(cli::dispatch("train", d / "none.conf", {}, out, err), 2);
}

TEST(Cli, NumericalFailureExitsThree) {
  TempDir d("cli");
  {
    std::ofstream f(d / "bad.csv");
    f << "n,phi_x,omega_x,phi_y,omega_y\n";
    for (int n = 0; n < 30; ++n) f << n << ",1,1e-6,1,1e-6\n";
  }
  const auto r =
      run("simulate", base(d) + std::vector<std::string>{"--sim.model=parametric", "--trajectory=" + (d / "bad.csv").string()});
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.err.find("numerical failure"), std::string::npos) << r.err;
}

TEST(Cli, GradcheckPassesAndFailsOnTolerance) {
  TempDir d("cli");
  auto r = run("gradcheck", base(d) + std::vector<std::string>{"--gradcheck.trials=100", "--gradcheck.seed=7"});
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  r = run("gradcheck", base(d) + std::vector<std::string>{"--gradcheck.trials=5", "--gradcheck.tol_local=1e-300"});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(CliBinary, ExitStatuses) {
  TempDir d("clibin");
  const std::string bin = HEATADAPT_CLI_PATH;
  const std::string out = " --output_dir=" + (d / "out").string() + " >/dev/null 2>&1";
  auto status = [](const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  EXPECT_EQ(status(bin + " gradcheck --trials 100 --seed 7" + out), 0);
  EXPECT_EQ(status(bin + " train --bogus=1" + out), 2);
  EXPECT_EQ(status(bin + " train --threads=abc" + out), 2);
  EXPECT_EQ(status(bin + " >/dev/null 2>&1"), 2);
  EXPECT_EQ(status(bin + " --version >/dev/null 2>&1"), 0);
}
