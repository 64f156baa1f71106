#include <CLI11.hpp>

#include "oncodyn/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tumor / host / immune dynamics: simulation, stability and basin certificates"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;

  oncodyn::RunMode mode = oncodyn::RunMode::Analyze;
  auto add = [&](const char* name, const char* help, oncodyn::RunMode m) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "Scenario config (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Override sampling.seed");
    sub->add_option("--threads", threads, "Worker threads for Monte Carlo batches")
        ->check(CLI::PositiveNumber);
    sub->callback([&mode, m] { mode = m; });
    return sub;
  };
  CLI::App* simulate = add("simulate", "Integrate the scenario trajectory only", oncodyn::RunMode::Simulate);
  CLI::App* analyze = add("analyze", "Run every analysis requested by the config", oncodyn::RunMode::Analyze);
  CLI::App* verify = add("verify", "Analyze, then check certificate invariants", oncodyn::RunMode::Verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : oncodyn::kExitConfig;
  }

  oncodyn::RunOptions options;
  options.mode = mode;
  options.out_dir = out_dir;
  options.threads = threads;
  for (CLI::App* sub : {simulate, analyze, verify}) {
    if (sub->parsed() && sub->count("--seed") > 0) options.seed = seed;
  }
  return oncodyn::run(config, options);
}
