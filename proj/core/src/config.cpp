#include "phivol/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phivol/errors.hpp"

namespace phivol {

namespace {

using nlohmann::json;

double as_number(const json& value, const std::string& key) {
  if (!value.is_number())
    throw ConfigError("config key '" + key + "' must be a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& key) {
  if (!value.is_number_integer())
    throw ConfigError("config key '" + key + "' must be an integer");
  return value.get<int>();
}

std::string as_string(const json& value, const std::string& key) {
  if (!value.is_string())
    throw ConfigError("config key '" + key + "' must be a string");
  return value.get<std::string>();
}

bool as_bool(const json& value, const std::string& key) {
  if (!value.is_boolean())
    throw ConfigError("config key '" + key + "' must be a boolean");
  return value.get<bool>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text,
                              const ExperimentConfig& base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

  ExperimentConfig cfg = base;
  for (const auto& [key, value] : doc.items()) {
    if (key == "operation") {
      cfg.operation = as_string(value, key);
    } else if (key == "model") {
      cfg.model = as_string(value, key);
    } else if (key == "n") {
      cfg.n = as_int(value, key);
    } else if (key == "family") {
      cfg.family = as_string(value, key);
    } else if (key == "params") {
      if (!value.is_array())
        throw ConfigError("config key 'params' must be an array of numbers");
      cfg.params.clear();
      for (const auto& item : value) cfg.params.push_back(as_number(item, key));
    } else if (key == "grid") {
      if (!value.is_array())
        throw ConfigError("config key 'grid' must be an array of integers");
      cfg.grid.clear();
      for (const auto& item : value) cfg.grid.push_back(as_int(item, key));
    } else if (key == "samples") {
      cfg.samples = as_int(value, key);
    } else if (key == "seed") {
      if (!value.is_number_unsigned())
        throw ConfigError("config key 'seed' must be a nonnegative integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "steps") {
      cfg.steps = as_int(value, key);
    } else if (key == "step_size") {
      cfg.step_size = as_number(value, key);
    } else if (key == "mode") {
      cfg.mode = as_string(value, key);
    } else if (key == "pattern") {
      cfg.pattern = as_string(value, key);
    } else if (key == "horizon") {
      cfg.horizon = as_number(value, key);
    } else if (key == "flow_samples") {
      cfg.flow_samples = as_int(value, key);
    } else if (key == "geodesics") {
      cfg.geodesics = as_int(value, key);
    } else if (key == "tolerances") {
      if (!value.is_object())
        throw ConfigError("config key 'tolerances' must be an object");
      for (const auto& [name, tol] : value.items())
        cfg.tolerances[name] = as_number(tol, "tolerances." + name);
    } else if (key == "report_path") {
      cfg.report_path = as_string(value, key);
    } else if (key == "csv_path") {
      cfg.csv_path = as_string(value, key);
    } else if (key == "svg_path") {
      cfg.svg_path = as_string(value, key);
    } else if (key == "plots") {
      cfg.plots = as_bool(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path,
                                  const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), base);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("n must be at least 1");
  if (cfg.grid.empty()) throw ConfigError("grid must have at least one size");
  for (int size : cfg.grid)
    if (size < 3) throw ConfigError("grid sizes must be at least 3");
  if (cfg.samples < 1) throw ConfigError("samples must be at least 1");
  if (cfg.steps < 1) throw ConfigError("steps must be at least 1");
  if (!(cfg.step_size > 0.0)) throw ConfigError("step_size must be positive");
  if (cfg.mode != "rebased" && cfg.mode != "frozen")
    throw ConfigError("mode must be 'rebased' or 'frozen'");
  if (!(cfg.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (cfg.flow_samples < 2)
    throw ConfigError("flow_samples must be at least 2");
  if (cfg.geodesics < 1) throw ConfigError("geodesics must be at least 1");
  for (const auto& [name, tol] : cfg.tolerances)
    if (!(tol > 0.0))
      throw ConfigError("tolerance '" + name + "' must be positive");
}

double config_tol(const ExperimentConfig& cfg, const std::string& name,
                  double fallback) {
  auto it = cfg.tolerances.find(name);
  return it == cfg.tolerances.end() ? fallback : it->second;
}

}  // namespace phivol
