// Command-line front-end: check, bound, run, sweep, presets.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "pushpull/commands.hpp"

namespace {

using namespace pushpull;

struct ConfigOptions {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string alpha;
  std::string out;
  long max_iters = 0;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts, bool with_run_flags) {
  auto* config = cmd->add_option("--config", opts.config_path, "Experiment config (JSON)");
  auto* preset = cmd->add_option("--preset", opts.preset_name, "Built-in preset name");
  config->excludes(preset);
  cmd->add_option("--seed", opts.seed, "Override every seed in the config");
  if (with_run_flags) {
    cmd->add_option("--alpha", opts.alpha, "Step size: a number or 'theorem'");
    cmd->add_option("--out", opts.out, "Output CSV path");
    cmd->add_option("--max-iters", opts.max_iters, "Iteration budget");
  }
}

ExperimentConfig resolve_config(const ConfigOptions& opts) {
  ExperimentConfig config;
  if (!opts.config_path.empty()) {
    config = load_config(opts.config_path);
  } else if (!opts.preset_name.empty()) {
    config = preset(opts.preset_name);
  } else {
    throw Error(ErrorCode::InvalidArgument, "one of --config or --preset is required");
  }
  if (opts.seed) override_seed(config, *opts.seed);
  if (!opts.alpha.empty()) config.alpha = parse_alpha(opts.alpha);
  if (!opts.out.empty()) config.output = opts.out;
  if (opts.max_iters > 0) config.max_iters = opts.max_iters;
  spdlog::debug("resolved config: {}", config_to_json(config).dump());
  return config;
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_logger_mt("pushpull"));
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("PUSHPULL_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Push-pull gradient tracking over directed graphs"};
  app.require_subcommand(1);

  CheckInputs check_in;
  std::string graph, column_graph, row_csv, column_csv;
  auto* check = app.add_subcommand("check", "Validate mixing matrices or a graph");
  check->add_option("--graph", graph, "Edge-list file driving both R and C");
  check->add_option("--column-graph", column_graph, "Separate edge list for C");
  check->add_option("--R", row_csv, "Row-stochastic matrix CSV");
  check->add_option("--C", column_csv, "Column-stochastic matrix CSV");

  ConfigOptions bound_opts, run_opts, sweep_opts;
  auto* bound = app.add_subcommand("bound", "Print the step-size certificate");
  add_config_options(bound, bound_opts, false);
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its trace");
  add_config_options(run_cmd, run_opts, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the step-size grid");
  add_config_options(sweep_cmd, sweep_opts, true);

  std::string dump_name;
  auto* presets = app.add_subcommand("presets", "List presets or dump one as JSON");
  presets->add_option("--dump", dump_name, "Preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : kExitInput;
  }

  try {
    if (*check) {
      if (!graph.empty()) check_in.graph_path = graph;
      if (!column_graph.empty()) check_in.column_graph_path = column_graph;
      if (!row_csv.empty()) check_in.row_matrix_path = row_csv;
      if (!column_csv.empty()) check_in.column_matrix_path = column_csv;
      return cmd_check(check_in, std::cout);
    }
    if (*bound) return cmd_bound(resolve_config(bound_opts), std::cout);
    if (*run_cmd) {
      const auto config = resolve_config(run_opts);
      return cmd_run(config, config.output, std::cout);
    }
    if (*sweep_cmd) {
      const auto config = resolve_config(sweep_opts);
      return cmd_sweep(config, config.output, std::cout);
    }
    if (*presets) {
      if (!dump_name.empty()) {
        std::cout << config_to_json(preset(dump_name)).dump(2) << '\n';
      } else {
        for (const auto& name : preset_names()) std::cout << name << '\n';
      }
      return kExitSuccess;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitInput;
}
