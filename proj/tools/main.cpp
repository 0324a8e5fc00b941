#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "experiments/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bsgd::cli::ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Options {
  std::string config_path;
  std::string output;
  std::string seeds;
  int jobs = 1;
  std::vector<std::string> sets;
  bool print_config = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config_path, "config file (key = value lines with [section] headers)");
  cmd->add_option("-o,--output", o.output, "output directory (overrides output_dir and $BSGD_OUTPUT_DIR)");
  cmd->add_option("--seeds", o.seeds, "comma-separated seed indices (overrides seeds)");
  cmd->add_option("-j,--jobs", o.jobs, "parallel workers")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.sets, "override a key, e.g. --set engine.T=500 (repeatable)");
  cmd->add_flag("--print-config", o.print_config, "print the resolved config and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biased SGD for conditional stochastic optimization: experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BSGD_VERSION);

  Options opts;
  std::string pinned;
  struct Sub {
    const char* name;
    const char* experiment;
    const char* help;
  };
  const Sub subs[] = {
      {"run", "", "run the experiment named in the config"},
      {"bias-sweep", "bias_sweep", "Monte-Carlo estimator bias versus inner batch size"},
      {"rate-study", "rate_study", "suboptimality traces and bound reports on the quadratic instance"},
      {"logistic", "logistic", "invariant logistic regression: BSGD versus SAA at matched budgets"},
      {"maml", "maml", "sine-wave MAML: BSGD, first-order MAML and Adam"},
      {"iv", "iv", "instrumental-variable regression: BSGD, 2SLS, Poly2SLS and direct regression"},
      {"floor", "floor", "lower-bound instances: error floor versus oracle bias"},
  };
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, opts);
    cmd->callback([&pinned, &s] { pinned = s.experiment; });
  }

  std::ostringstream command_line;
  for (int i = 0; i < argc; ++i) command_line << (i ? " " : "") << argv[i];

  CLI11_PARSE(app, argc, argv);

  using namespace bsgd::cli;
  try {
    const std::string text = opts.config_path.empty() ? std::string() : read_file(opts.config_path);
    std::vector<std::string> overrides = opts.sets;
    if (!opts.seeds.empty()) overrides.push_back("seeds=" + opts.seeds);
    const Config config = parse_config(text, pinned, overrides);
    if (opts.print_config) {
      std::cout << echo_config(config);
      return 0;
    }
    const auto dir = resolve_output_dir(config, opts.output);
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult result = run_experiment(config, {opts.jobs});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(config, result, dir, {command_line.str(), wall, opts.jobs});
    std::cerr << config.experiment() << ": wrote " << result.tables.size() << " tables to " << dir.string() << " in "
              << wall << " s";
    if (result.failed_runs > 0) std::cerr << " (" << result.failed_runs << " failed runs recorded)";
    std::cerr << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
