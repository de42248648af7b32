#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bsheet {

enum ExitStatus : int { kExitOk = 0, kExitValidation = 1, kExitContract = 2 };

// One experiment run. `params` holds every kind parameter with defaults
// filled in, so the echo in the manifest is complete.
struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  unsigned jobs = 0;  // 0: all available cores
  std::string out = "out";
  nlohmann::json params = nlohmann::json::object();

  // Throws InvalidConfig on unknown kinds, unknown fields, wrong types, or
  // parameters that violate a module precondition.
  static ExperimentConfig from_json(const nlohmann::json& raw);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  unsigned effective_jobs() const;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::vector<CheckResult> checks;
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
  double wall_time = 0.0;
};

// Runs the experiment, writes <out>/<kind>.csv and <out>/manifest.json.
// Never throws for experiment failures: validation problems give exit 1,
// failed checks and module contract breaches give exit 2. The manifest is
// written in every case.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

// Parses and runs a raw JSON config with optional command-line overrides.
// Invalid configs still produce a manifest under `out` (or "out").
ExperimentOutcome run_config(const nlohmann::json& raw, std::optional<std::uint64_t> seed,
                             std::optional<std::string> out, std::optional<unsigned> jobs);

std::vector<std::string> experiment_kinds();

// Descriptor table (kind, parameters, acceptance config it backs). Throws
// InvalidConfig for an unknown kind.
std::string list_experiments(bool as_json, const std::optional<std::string>& kind = std::nullopt);

}  // namespace bsheet
