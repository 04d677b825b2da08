// Entry point of the udw command line tool.
//
//   udw <validate|distribution|stats|oracle|classical2d> --config <file>
//       [--json] [--out <dir>] [--seed <u64>] [--threads <n>]
//
// Exit codes: 0 success, 1 usage/parse error, 2 infeasible physics,
// 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "udw/cli.hpp"
#include "udw/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  bool json = false;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")->required();
  cmd->add_flag("--json", args.json, "machine-readable stdout where supported");
  cmd->add_option("--out", args.out_dir, "output directory (overrides [output] directory)");
  cmd->add_option("--seed", args.seed, "seed override (overrides [output] seed)")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads,
                  "worker threads (0 = UDW_THREADS env, then hardware)");
}

udw::cli::CliOptions to_options(const CommonArgs& args) {
  udw::cli::CliOptions options;
  options.json = args.json;
  if (!args.out_dir.empty()) options.out_dir = args.out_dir;
  if (args.seed_set) options.seed = args.seed;
  options.threads = args.threads;
  return options;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"azimuthal-distribution toolkit for detector-pair momentum reconstruction"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*run)(const udw::cli::RunConfig&, const udw::cli::CliOptions&) = nullptr;

  auto* validate = app.add_subcommand("validate", "check parameter feasibility");
  add_common(validate, args);
  validate->callback([&run] { run = &udw::cli::cmd_validate; });

  auto* distribution = app.add_subcommand("distribution", "tabulate the azimuthal density");
  add_common(distribution, args);
  distribution->callback([&run] { run = &udw::cli::cmd_distribution; });

  auto* stats = app.add_subcommand("stats", "entropy / best-guess sweep");
  add_common(stats, args);
  stats->callback([&run] { run = &udw::cli::cmd_stats; });

  auto* oracle = app.add_subcommand("oracle", "brute-force cross-check");
  add_common(oracle, args);
  oracle->callback([&run] { run = &udw::cli::cmd_oracle; });

  auto* classical = app.add_subcommand("classical2d", "planar nonrelativistic solver");
  add_common(classical, args);
  classical->callback([&run] { run = &udw::cli::cmd_classical2d; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : udw::cli::exit_usage;
  }

  try {
    const udw::cli::RunConfig config = udw::cli::parse_config(args.config_path);
    return run(config, to_options(args));
  } catch (const udw::cli::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return udw::cli::exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return udw::cli::exit_usage;
  }
}
