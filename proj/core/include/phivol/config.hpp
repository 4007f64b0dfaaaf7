#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace phivol {

// Everything a harness run can consume.  Loaded from a JSON file and then
// overridden field by field from command line flags; unknown keys are
// rejected so a typo cannot silently change an experiment.
struct ExperimentConfig {
  std::string operation;
  std::string model = "sphere";
  int n = 1;
  std::string family = "real_circle";
  std::vector<double> params;
  std::vector<int> grid{64};
  int samples = 10;
  std::uint64_t seed = 1;
  // moduli walk controls
  int steps = 5;
  double step_size = 0.02;
  std::string mode = "rebased";
  std::string pattern = "sin";
  // flow and convexity window
  double horizon = 0.5;
  int flow_samples = 9;
  int geodesics = 5;
  // per-check tolerance overrides, keyed by check name
  std::map<std::string, double> tolerances;
  // output destinations; empty string means "do not write"
  std::string report_path;
  std::string csv_path;
  std::string svg_path;
  bool plots = true;
};

// Parses a JSON object onto a base config (keys absent from the text keep
// the base values, so defaults, file and flags can layer).  Throws
// ConfigError on malformed JSON, unknown keys, non-positive tolerances or
// out-of-range values.
ExperimentConfig parse_config(const std::string& json_text,
                              const ExperimentConfig& base = {});
ExperimentConfig load_config_file(const std::string& path,
                                  const ExperimentConfig& base = {});

// range checks shared by the file loader and the flag override path
void validate_config(const ExperimentConfig& cfg);

// tolerance for a named check, with the built-in default as fallback
double config_tol(const ExperimentConfig& cfg, const std::string& name,
                  double fallback);

}  // namespace phivol
