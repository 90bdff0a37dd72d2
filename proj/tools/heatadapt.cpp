// heatadapt command-line entry point. Argument parsing only; the commands live in heatadapt/cli.hpp.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "heatadapt/cli.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("heatadapt"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Heat-conduction model with trainable per-step coefficients"};
  app.set_version_flag("--version", HEATADAPT_VERSION);
  app.require_subcommand(1);

  struct Options {
    std::string config;
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    bool quiet = false;
  } opt;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "draw a synthetic dataset from the physical model"},
      {"simulate", "run one heating record and write the final field and probe history"},
      {"train", "fit the per-step trajectory to a dataset"},
      {"eval", "mean absolute error of a trajectory or a material model on a dataset"},
      {"gradcheck", "compare analytic derivatives with finite differences"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", opt.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--threads", opt.threads, "worker cap (overrides the threads key)");
    sub->add_option("--seed", opt.seed, "seed for this command");
    if (name == "gradcheck") sub->add_option("--trials", opt.trials, "random points per check");
    sub->add_flag("-q,--quiet", opt.quiet, "only warnings and errors on stderr");
    sub->allow_extras();
    sub->footer("Any configuration key can be overridden as --key=value, e.g. --grid.nx=50.");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : heatadapt::cli::kBadConfig;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  std::vector<std::string> overrides = sub->remaining();
  if (opt.threads) overrides.push_back("--threads=" + std::to_string(*opt.threads));
  if (opt.seed) overrides.push_back("--" + std::string(heatadapt::cli::seed_key(command)) + "=" + std::to_string(*opt.seed));
  if (opt.trials) overrides.push_back("--gradcheck.trials=" + std::to_string(*opt.trials));
  if (opt.quiet) spdlog::set_level(spdlog::level::warn);

  std::optional<std::filesystem::path> config;
  if (!opt.config.empty()) config = opt.config;
  return heatadapt::cli::dispatch(command, config, overrides, std::cout, std::cerr);
}
