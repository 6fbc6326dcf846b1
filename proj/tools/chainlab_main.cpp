// chainlab: experiment runner for oscillator-chain decoherence and
// hydrodynamics diagnostics.  One subcommand per experiment; every run
// writes its resolved config, CSV outputs and a manifest with content
// hashes into the output directory.
//
// Exit codes: 0 all checks passed, 2 at least one check failed, 1 error.

#include "chainlab/experiments.hpp"
#include "chainlab/version.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"oscillator-chain decoherence and hydrodynamics toolkit"};
  app.set_version_flag("--version", chainlab::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool quiet = false;

  const char* names[] = {"decoherence-scan", "thermalization", "hydro-compare",
                         "bessel-accuracy", "conservation-check"};
  for (const char* name : names) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON, // comments allowed)")
        ->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_flag("--quiet", quiet, "suppress per-check output");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string subcommand = app.get_subcommands().front()->get_name();
    chainlab::ExperimentConfig cfg = chainlab::ExperimentConfig::load(config_path);
    if (cfg.experiment != chainlab::experiment_from_string(subcommand)) {
      std::cerr << "error: config is for '" << to_string(cfg.experiment)
                << "' but the subcommand is '" << subcommand << "'\n";
      return 1;
    }
    chainlab::RunOptions opts;
    opts.output_dir = out_dir;
    opts.quiet = quiet;
    opts.has_seed_override = seed_set;
    opts.seed_override = seed;
    const chainlab::RunManifest manifest = chainlab::run_experiment(cfg, opts);
    return manifest.all_passed() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
