#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qbary/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decentralized semi-discrete Wasserstein barycenters with quantized gradients"};
  app.require_subcommand(1);

  std::string config;
  qbary::RunOverrides overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  long iters = 0;
  unsigned threads = 0;
  auto* run = app.add_subcommand("run", "Run the decentralized solver described by a config file");
  run->add_option("config", config, "JSON config")->required()->check(CLI::ExistingFile);
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  auto* seed_opt = run->add_option("--seed", seed, "Master seed");
  auto* iters_opt = run->add_option("--iters", iters, "Number of rounds")->check(CLI::PositiveNumber);
  auto* threads_opt = run->add_option("--threads", threads, "Worker threads per round")->check(CLI::PositiveNumber);

  std::string suite;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", suite, "gradients, lemma3, schedules, equivalence, convergence, scaling, "
                                     "accounting, gaussian or determinism")
      ->required();

  std::string graph_config;
  auto* info = app.add_subcommand("graph-info", "Print spectral constants of the configured graph");
  info->add_option("config", graph_config, "JSON config")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qbary::kExitConfig;
  }

  if (*run) {
    if (*out_opt) overrides.out = out_dir;
    if (*seed_opt) overrides.seed = seed;
    if (*iters_opt) overrides.iterations = iters;
    if (*threads_opt) overrides.threads = threads;
    return qbary::cmd_run(config, overrides, std::cout, std::cerr);
  }
  if (*verify) return qbary::cmd_verify(suite, std::cout, std::cerr);
  return qbary::cmd_graph_info(graph_config, std::cout, std::cerr);
}
