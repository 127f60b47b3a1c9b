#pragma once

#include "spde/density.hpp"
#include "spde/malliavin.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace spde::experiments {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field(field) {}
  std::string field;
};

struct ExperimentConfig {
  std::string experiment;
  solvers::ModelSpec spec;
  double eta = 0.4;  // smoothness exponent the measure is checked against
  int n_trajectories = 20000;
  std::uint64_t master_seed = 42;
  std::vector<double> t_schedule;  // scaling experiments
  malliavin::GOptions regressor;
  std::string out_dir = "out";
  int jobs = 1;
  bool dump_trajectories = false;
};

// Catalog names in canonical order.
std::vector<std::string> experiment_names();
bool is_experiment_name(const std::string& name);

// Fully resolved defaults for one catalog entry.
ExperimentConfig default_config(const std::string& experiment);

// JSON round trip.  parse_config applies values on top of the experiment's
// defaults; config_json emits every resolved field.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
std::string config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);  // fnv-1a of config_json

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
};

// Structural checks plus theorem-applicability checks: the measure must keep
// the model's spectral integral finite, and out-of-hypothesis settings
// (eta outside (0, 3/4) for heat bounds, wave horizons past t = 0.5) warn.
ValidationReport validate(const ExperimentConfig& cfg);

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 config, 2 acceptance check failed, 3 numerical
  std::vector<std::string> artifacts;
  std::string message;
};

RunResult run(const ExperimentConfig& cfg);

// Deterministic parallel sample collection: results are ordered by index, so
// the job count never changes the output.
std::vector<malliavin::ShiftPairSample> collect_parallel(const solvers::ModelSpec& spec, int n,
                                                         std::uint64_t master_seed, int jobs);

}  // namespace spde::experiments
