#pragma once

#include <string>

#include <phivol/config.hpp>
#include <phivol/report.hpp>

namespace phivol {

// operation-specific family, grid and sampling defaults, applied before the
// config file and before flag overrides
ExperimentConfig default_config(const std::string& operation);

// runs the suite named by cfg.operation and collects its checks, metrics,
// series and tables
SuiteReport run_experiment(const ExperimentConfig& cfg);

// One SVG per series in the report; a single series lands on svg_path
// itself, several get the series name spliced in before the extension.
// Residual histories are drawn on a log axis.  Returns the file count.
int emit_plots(const SuiteReport& report, const std::string& svg_path);

// one CSV per table in the report, same naming rule as the plots
int write_tables(const SuiteReport& report, const std::string& csv_path);

}  // namespace phivol
