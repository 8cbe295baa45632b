#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdpair/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Full-duplex UL/DL pairing and power control: Monte Carlo runs and property checks"};
  app.require_subcommand(1);

  std::string config = fdpair::kBuiltinConfig;
  std::string methods = "chun,dauc,hd,repa";
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool trace = false;
  std::size_t threads = 0;

  auto* run = app.add_subcommand("run", "Run the Monte Carlo experiment and write CSV results");
  run->add_option("--config", config, "Config file (key=value), or 'tableI' for the built-in defaults");
  run->add_option("--methods", methods, "Comma-separated subset of eopt,chun,dauc,hd,repa");
  run->add_option("--set", overrides, "Override a config key: KEY=VALUE (repeatable)");
  auto* run_seed = run->add_option("--seed", seed, "Master RNG seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--trace", trace, "Write per-drop auction message traces (JSONL)");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");

  fdpair::VerifyOptions verify_opts;
  std::string fault = "none";
  auto* verify = app.add_subcommand("verify", "Check auction optimality/termination properties on random instances");
  verify->add_option("--seed", verify_opts.seed, "Seed of the random instance set");
  verify->add_option("--instances", verify_opts.instances, "Number of random instances");
  verify->add_option("--inject-fault", fault, "Deliberate protocol fault: none | skip-price-update")
      ->check(CLI::IsMember({"none", "skip-price-update"}));

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    fdpair::RunSpec spec;
    spec.config_path = config;
    try {
      spec.methods = fdpair::parse_methods(methods);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
    spec.output_dir = out_dir;
    spec.emit_trace = trace;
    spec.overrides = overrides;
    if (run_seed->count() > 0) spec.seed = seed;
    spec.threads = threads;
    return fdpair::cmd_run(spec, std::cout, std::cerr);
  }
  verify_opts.fault = fault == "skip-price-update" ? fdpair::AuctionFault::SkipPriceUpdate : fdpair::AuctionFault::None;
  return fdpair::cmd_verify(verify_opts, std::cout, std::cerr);
}
