#pragma once

#include "chainlab/config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace chainlab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunManifest {
  nlohmann::json config_echo;
  std::string version;
  double wall_time_s = 0.0;
  std::vector<CheckResult> checks;
  nlohmann::json derived;          // Omega, gamma, (gamma Omega)^-1, ...
  nlohmann::json extra;            // per-experiment blocks (hydro scheme etc.)
  std::vector<std::string> notes;
  std::vector<std::pair<std::string, std::string>> outputs; // file, sha256

  bool all_passed() const;
  nlohmann::json to_json() const;
};

struct RunOptions {
  std::string output_dir; // overrides config when non-empty
  bool quiet = false;
  bool has_seed_override = false;
  uint64_t seed_override = 0;
};

// Runs one experiment, writes resolved_config.json, the CSV/JSON outputs and
// manifest.json into the output directory, and returns the manifest.
RunManifest run_experiment(const ExperimentConfig& config,
                           const RunOptions& opts = {});

std::string sha256_file(const std::string& path);

} // namespace chainlab
