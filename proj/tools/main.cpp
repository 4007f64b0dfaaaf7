#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <phivol/config.hpp>
#include <phivol/errors.hpp>
#include <phivol/report.hpp>

#include "suites.hpp"

namespace {

// raw flag storage; CLI11 counts tell which ones were actually given
struct FlagValues {
  std::string config_path;
  std::string model;
  int n = 0;
  std::string family;
  std::vector<double> params;
  std::vector<int> grid;
  int samples = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  double step_size = 0.0;
  std::string mode;
  std::string pattern;
  double horizon = 0.0;
  int flow_samples = 0;
  int geodesics = 0;
  std::vector<std::string> tolerances;
  std::string report_path;
  std::string csv_path;
  std::string svg_path;
  bool no_plots = false;
};

void add_common_options(CLI::App* sub, FlagValues& fv) {
  sub->add_option("--config", fv.config_path,
                  "JSON config file; explicit flags override its values");
  sub->add_option("--model", fv.model, "ambient model name (sphere, heisenberg)");
  sub->add_option("--n", fv.n, "ambient dimension parameter, dim M = 2n+1");
  sub->add_option("--family", fv.family, "immersed family name");
  sub->add_option("--params", fv.params, "family parameters");
  sub->add_option("--grid", fv.grid, "grid nodes per direction");
  sub->add_option("--samples", fv.samples, "random samples or test fields");
  sub->add_option("--seed", fv.seed, "seed of the deterministic sampler");
  sub->add_option("--steps", fv.steps, "walk step count");
  sub->add_option("--step-size", fv.step_size, "walk step size");
  sub->add_option("--mode", fv.mode, "corrector mode: rebased or frozen");
  sub->add_option("--pattern", fv.pattern,
                  "walk direction pattern: sin, cos, sin2, mix");
  sub->add_option("--horizon", fv.horizon, "flow time window");
  sub->add_option("--flow-samples", fv.flow_samples, "samples along the flow");
  sub->add_option("--geodesics", fv.geodesics, "random geodesics to sample");
  sub->add_option("--tol", fv.tolerances,
                  "per-check tolerance override, name=value");
  sub->add_option("--report", fv.report_path,
                  "write the JSON report here instead of stdout");
  sub->add_option("--csv", fv.csv_path, "write CSV table dumps here");
  sub->add_option("--svg", fv.svg_path, "write SVG plots here");
  sub->add_flag("--no-plots", fv.no_plots, "skip plot emission");
}

phivol::ExperimentConfig assemble(const CLI::App* sub, const FlagValues& fv) {
  phivol::ExperimentConfig cfg = phivol::default_config(sub->get_name());
  if (sub->count("--config")) {
    cfg = phivol::load_config_file(fv.config_path, cfg);
    if (cfg.operation != sub->get_name())
      throw phivol::ConfigError("config file asks for operation '" +
                                cfg.operation + "' but the subcommand is '" +
                                sub->get_name() + "'");
  }
  if (sub->count("--model")) cfg.model = fv.model;
  if (sub->count("--n")) cfg.n = fv.n;
  if (sub->count("--family")) cfg.family = fv.family;
  if (sub->count("--params")) cfg.params = fv.params;
  if (sub->count("--grid")) cfg.grid = fv.grid;
  if (sub->count("--samples")) cfg.samples = fv.samples;
  if (sub->count("--seed")) cfg.seed = fv.seed;
  if (sub->count("--steps")) cfg.steps = fv.steps;
  if (sub->count("--step-size")) cfg.step_size = fv.step_size;
  if (sub->count("--mode")) cfg.mode = fv.mode;
  if (sub->count("--pattern")) cfg.pattern = fv.pattern;
  if (sub->count("--horizon")) cfg.horizon = fv.horizon;
  if (sub->count("--flow-samples")) cfg.flow_samples = fv.flow_samples;
  if (sub->count("--geodesics")) cfg.geodesics = fv.geodesics;
  if (sub->count("--report")) cfg.report_path = fv.report_path;
  if (sub->count("--csv")) cfg.csv_path = fv.csv_path;
  if (sub->count("--svg")) cfg.svg_path = fv.svg_path;
  if (fv.no_plots) cfg.plots = false;
  for (const std::string& pair : fv.tolerances) {
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == pair.size())
      throw phivol::ConfigError("tolerance override '" + pair +
                                "' is not of the form name=value");
    char* end = nullptr;
    const double value = std::strtod(pair.c_str() + eq + 1, &end);
    if (end != pair.c_str() + pair.size())
      throw phivol::ConfigError("tolerance override '" + pair +
                                "' has a non-numeric value");
    cfg.tolerances[pair.substr(0, eq)] = value;
  }
  phivol::validate_config(cfg);
  return cfg;
}

int run(const phivol::ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  phivol::SuiteReport report;
  try {
    report = phivol::run_experiment(cfg);
  } catch (const phivol::ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("operation '" + cfg.operation + "': " + e.what());
  }
  const std::string json = phivol::report_to_json(report);
  if (cfg.report_path.empty())
    std::cout << json;
  else
    phivol::write_text_file(cfg.report_path, json);
  if (!cfg.csv_path.empty()) phivol::write_tables(report, cfg.csv_path);
  if (!cfg.svg_path.empty() && cfg.plots)
    phivol::emit_plots(report, cfg.svg_path);

  for (const phivol::CheckRow& row : report.checks)
    std::fprintf(stderr, "%s %-36s measured %.6g tolerance %.6g\n",
                 row.pass ? "  ok " : " FAIL", row.name.c_str(), row.measured,
                 row.tolerance);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  std::fprintf(stderr, "%s: %s in %lld ms\n", cfg.operation.c_str(),
               report.all_pass() ? "all checks passed" : "CHECKS FAILED",
               static_cast<long long>(elapsed.count()));
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phi-volume toolkit for affine Legendrian geometry"};
  app.set_version_flag("--version", phivol::library_version());
  app.require_subcommand(1);
  app.footer("Environment: PHIVOL_THREADS sets the worker thread count "
             "(default 1).");

  FlagValues fv;
  const std::vector<std::pair<std::string, std::string>> operations = {
      {"verify-structure",
       "check the defining identities of the ambient structure"},
      {"rho-phi", "profile the calibration density of an immersed family"},
      {"first-variation",
       "compare analytic and finite difference first variation"},
      {"second-variation",
       "compare analytic and finite difference second variation"},
      {"stability-spectrum",
       "assemble the second variation form and inspect its spectrum"},
      {"convexity", "sample volume convexity along random geodesics"},
      {"angle", "compute the pullback angle and its gradient identity"},
      {"calibration", "verify the node-wise calibration inequality chain"},
      {"moduli-walk", "walk the space of special immersions by kernel steps"},
      {"flow", "evolve a geodesic family and record the volume along it"}};
  for (const auto& [name, description] : operations)
    add_common_options(app.add_subcommand(name, description), fv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(assemble(app.get_subcommands().front(), fv));
  } catch (const phivol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
