#include "greedy_eig/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Greedy rank-one eigensolvers for Kronecker-sum operators"};
  app.require_subcommand(1);

  geig::CommandOptions opts;
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  for (const char* name : {"gen", "solve", "compare"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Run configuration (JSON)")->required();
    sub->add_option("--out", out, "Output path (operator file, trace CSV or combined CSV)");
    sub->add_option("--seed", seed, "Overrides problem.seed and solver.rng_seed");
  }
  app.get_subcommand("gen")->description("Generate an operator file from the config's problem");
  app.get_subcommand("solve")->description("Run one solver variant and write trace CSV + result JSON");
  app.get_subcommand("compare")->description("Run a list of variants on one problem, merged CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : geig::kExitInvalid;
  }

  opts.config = config;
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--out") > 0) opts.out = out;
    if (sub->count("--seed") > 0) opts.seed = seed;
    const std::string cmd = sub->get_name();
    if (cmd == "gen") return geig::cmd_gen(opts, std::cerr);
    if (cmd == "solve") return geig::cmd_solve(opts, std::cerr);
    if (cmd == "compare") return geig::cmd_compare(opts, std::cerr);
  }
  return geig::kExitInvalid;
}
