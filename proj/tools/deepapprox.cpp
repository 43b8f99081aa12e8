#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "deepapprox/cli.hpp"

namespace cli = deepapprox::cli;

int main(int argc, char** argv) {
  CLI::App app{"Constructive ReLU/step approximation networks: build, verify, analyze"};
  app.require_subcommand(1);

  cli::CommandOptions o;
  std::uint64_t seed = 0;
  std::size_t grid = 0;
  app.add_option("--seed", seed, "seed for sampled grids (overrides config and DEEPAPPROX_SEED)");
  app.add_option("--grid", grid, "grid point count")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "output directory");
  app.add_flag("--verbose", o.verbose, "print stage plans and audits to stderr");

  auto* build = app.add_subcommand("build", "build one network from a config");
  build->add_option("--config", o.config, "experiment config (JSON)")->required();
  auto* eval = app.add_subcommand("eval", "evaluate a network file on a grid");
  eval->add_option("net", o.net_file, "network file")->required();
  eval->add_option("--target", o.target, "named univariate target for error columns");
  auto* sweep = app.add_subcommand("sweep", "build over an eps list; CSV and SVG");
  sweep->add_option("--config", o.config, "experiment config (JSON)")->required();
  auto* gap = app.add_subcommand("gap", "deep versus shallow size experiment");
  gap->add_option("--config", o.config, "gap config (JSON)")->required();
  auto* bp = app.add_subcommand("breakpoints", "list break points of a 1-D network");
  bp->add_option("net", o.net_file, "network file")->required();
  bp->add_option("--resolution", o.resolution, "scan 2^m intervals")->check(CLI::Range(2, 26));

  // global options are accepted after the subcommand too
  for (auto* sub : {build, eval, sweep, gap, bp}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (app.count("--seed")) o.seed = seed;
  if (app.count("--grid")) o.grid = grid;

  try {
    if (*build) return cli::cmd_build(o, std::cerr);
    if (*eval) return cli::cmd_eval(o, std::cout, std::cerr);
    if (*sweep) return cli::cmd_sweep(o, std::cerr);
    if (*gap) return cli::cmd_gap(o, std::cerr);
    if (*bp) return cli::cmd_breakpoints(o, std::cout, std::cerr);
  } catch (const deepapprox::BuildError& e) {
    std::cerr << "build failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
