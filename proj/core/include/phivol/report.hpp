#pragma once

#include <map>
#include <string>
#include <vector>

namespace phivol {

// One verification row.  The pass flag is computed at construction so a
// report can never claim a pass that its own numbers contradict.
struct CheckRow {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

CheckRow make_check(std::string name, double measured, double tolerance);
// boolean condition on the same scale: measured is 0 when it holds, 1 when not
CheckRow make_flag_check(std::string name, bool holds);

// sampled curve, e.g. a density profile or a residual history
struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

// rectangular numeric dump for CSV output
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct SuiteReport {
  int schema = 1;
  std::string operation;
  std::map<std::string, std::string> environment;
  std::vector<CheckRow> checks;
  std::map<std::string, double> metrics;
  std::map<std::string, Series> series;
  std::map<std::string, Table> tables;

  bool all_pass() const;
};

// version string baked into every report's environment block
std::string library_version();
// environment block shared by all suites: version, thread count, precision
std::map<std::string, std::string> environment_info();

// Deterministic encoding: object keys sorted, shortest round-trip number
// text, and nothing time or host dependent.  Identical report values give
// byte-identical output.
std::string report_to_json(const SuiteReport& report);

// header line plus one comma separated line per row
std::string table_to_csv(const Table& table);

void write_text_file(const std::string& path, const std::string& content);

// Writes a static line plot of the series.  With log_y the positive values
// are drawn on a log10 axis and non-positive ones are dropped.  An empty
// series (or one emptied by the log filter) produces a warning on stderr
// and no file; the return value says whether a file was written.
bool emit_line_plot(const Series& series, const std::string& title,
                    const std::string& path, bool log_y = false);

}  // namespace phivol
