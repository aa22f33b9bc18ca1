#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "moneygas/errors.hpp"
#include "moneygas/experiment.hpp"

namespace {

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace moneygas;

  CLI::App app{"moneygas: kinetic money-exchange simulations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool assert_mode = false;
  std::size_t threads = 1;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--assert", assert_mode, "exit 2 when an assertion fails");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "run an experiment (replicates of one parameter point)");
  auto* sweep = app.add_subcommand("sweep", "run a grid sweep over the config's sweep_axes");
  auto* kinetic = app.add_subcommand("kinetic", "solve the kinetic equation to stationarity");
  auto* fit = app.add_subcommand("fit", "fit a histogram CSV offline");
  auto* oracle = app.add_subcommand("oracle", "exact small-system check");

  std::string input;
  std::optional<double> shift;
  fit->add_option("--input", input, "histogram CSV (bin_left,count,probability)")->required();
  fit->add_option("--shift", shift, "support shift (default: first bin edge)");

  std::optional<std::size_t> agents;
  std::optional<std::size_t> money;
  std::optional<std::uint64_t> mc_sweeps;
  std::optional<std::uint64_t> seed;
  oracle->add_option("--agents", agents, "number of agents N");
  oracle->add_option("--money", money, "total money units M");
  oracle->add_option("--mc-sweeps", mc_sweeps, "Monte Carlo sweeps");
  oracle->add_option("--seed", seed, "Monte Carlo seed");

  for (auto* sub : {run, sweep, kinetic, fit, oracle}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  RunOptions options;
  options.out_dir = out_dir;
  options.assert_mode = assert_mode;
  options.threads = threads;
  options.log = &std::cerr;

  if (*fit) return run_fit(input, shift, options);

  ExperimentSpec spec;
  if (!config_path.empty()) {
    const auto text = slurp(config_path);
    if (!text) {
      std::cerr << "config error: cannot read " << config_path << "\n";
      return kExitConfig;
    }
    try {
      spec = parse_experiment(*text);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << config_path << ": " << e.what() << "\n";
      return kExitConfig;
    }
  } else if (!*oracle) {
    std::cerr << "config error: --config is required for this command\n";
    return kExitConfig;
  }

  if (*oracle) {
    if (!spec.oracle && !(agents && money)) {
      std::cerr << "config error: oracle needs an /oracle block or --agents and --money\n";
      return kExitConfig;
    }
    OracleSpec o = spec.oracle.value_or(OracleSpec{});
    if (agents) o.num_agents = *agents;
    if (money) o.total_money = *money;
    if (mc_sweeps) o.mc_sweeps = *mc_sweeps;
    if (seed) o.seed = *seed;
    if (o.num_agents < 2) {
      std::cerr << "config error: --agents must be >= 2\n";
      return kExitConfig;
    }
    spec.oracle = o;
    return run_oracle(spec, options);
  }
  if (*kinetic) return run_kinetic(spec, options);
  if (*sweep && spec.sweep_axes.empty()) {
    std::cerr << "config error: /experiment/sweep_axes: sweep needs at least one axis\n";
    return kExitConfig;
  }
  if (*run && !spec.sweep_axes.empty()) {
    std::cerr << "config error: /experiment/sweep_axes: use the sweep command for configs with axes\n";
    return kExitConfig;
  }
  return run_experiment(spec, options);
}
