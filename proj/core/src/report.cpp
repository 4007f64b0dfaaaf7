#include "phivol/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "phivol/errors.hpp"
#include "phivol/numerics.hpp"

namespace phivol {

namespace {

using nlohmann::json;

// shortest text that parses back to the same double, same rule json uses
std::string number_text(double value) {
  return json(value).dump();
}

json series_to_json(const Series& series) {
  json out;
  out["x"] = series.x;
  out["y"] = series.y;
  return out;
}

json table_to_json(const Table& table) {
  json out;
  out["columns"] = table.columns;
  out["rows"] = table.rows;
  return out;
}

}  // namespace

CheckRow make_check(std::string name, double measured, double tolerance) {
  if (!(tolerance > 0.0))
    throw ConfigError("check '" + name + "' needs a positive tolerance");
  CheckRow row;
  row.name = std::move(name);
  row.measured = measured;
  row.tolerance = tolerance;
  row.pass = std::isfinite(measured) && measured <= tolerance;
  return row;
}

CheckRow make_flag_check(std::string name, bool holds) {
  CheckRow row;
  row.name = std::move(name);
  row.measured = holds ? 0.0 : 1.0;
  row.tolerance = 0.5;
  row.pass = holds;
  return row;
}

bool SuiteReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckRow& row) { return row.pass; });
}

std::string library_version() { return "0.1.0"; }

std::map<std::string, std::string> environment_info() {
  std::map<std::string, std::string> env;
  env["version"] = library_version();
  env["threads"] = std::to_string(thread_count());
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  env["real"] = "ieee754-binary64";
  return env;
}

std::string report_to_json(const SuiteReport& report) {
  json doc;
  doc["schema"] = report.schema;
  doc["operation"] = report.operation;
  doc["environment"] = report.environment;
  doc["all_pass"] = report.all_pass();
  json checks = json::array();
  for (const CheckRow& row : report.checks) {
    json item;
    item["name"] = row.name;
    item["measured"] = row.measured;
    item["tolerance"] = row.tolerance;
    item["pass"] = row.pass;
    checks.push_back(item);
  }
  doc["checks"] = checks;
  doc["metrics"] = report.metrics;
  json series;
  for (const auto& [name, data] : report.series)
    series[name] = series_to_json(data);
  doc["series"] = std::move(series);
  json tables;
  for (const auto& [name, data] : report.tables)
    tables[name] = table_to_json(data);
  doc["tables"] = std::move(tables);
  return doc.dump(2) + "\n";
}

std::string table_to_csv(const Table& table) {
  for (const auto& row : table.rows)
    if (row.size() != table.columns.size())
      throw ConfigError("table row width does not match its column count");
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << number_text(row[i]);
    }
    out << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed while writing file '" + path + "'");
}

bool emit_line_plot(const Series& series, const std::string& title,
                    const std::string& path, bool log_y) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < series.x.size() && i < series.y.size(); ++i) {
    if (log_y && !(series.y[i] > 0.0)) continue;
    xs.push_back(series.x[i]);
    ys.push_back(log_y ? std::log10(series.y[i]) : series.y[i]);
  }
  if (xs.empty()) {
    std::cerr << "warning: series for plot '" << title
              << "' is empty, no file written\n";
    return false;
  }

  const double width = 640.0, height = 420.0;
  const double left = 70.0, right = 20.0, top = 40.0, bottom = 50.0;
  double x_min = *std::min_element(xs.begin(), xs.end());
  double x_max = *std::max_element(xs.begin(), xs.end());
  double y_min = *std::min_element(ys.begin(), ys.end());
  double y_max = *std::max_element(ys.begin(), ys.end());
  if (x_max - x_min < 1e-300) x_max = x_min + 1.0;
  if (y_max - y_min < 1e-300) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  auto px = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
  };
  auto py = [&](double y) {
    return height - bottom -
           (y - y_min) / (y_max - y_min) * (height - top - bottom);
  };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  auto label = [&](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, log_y ? "1e%.2f" : "%.4g", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title
      << "</text>\n";
  // axes
  svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(height - bottom)
      << "\" x2=\"" << fmt(width - right) << "\" y2=\""
      << fmt(height - bottom) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\""
      << fmt(left) << "\" y2=\"" << fmt(height - bottom)
      << "\" stroke=\"black\"/>\n";
  // extremal tick labels
  svg << "<text x=\"" << fmt(left) << "\" y=\"" << fmt(height - bottom + 18)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << label(x_min)
      << "</text>\n";
  svg << "<text x=\"" << fmt(width - right) << "\" y=\""
      << fmt(height - bottom + 18)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << label(x_max) << "</text>\n";
  svg << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(height - bottom)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << label(y_min) << "</text>\n";
  svg << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(top + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << label(y_max) << "</text>\n";
  // the curve itself
  svg << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" "
      << "points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) svg << ' ';
    svg << fmt(px(xs[i])) << ',' << fmt(py(ys[i]));
  }
  svg << "\"/>\n";
  if (xs.size() == 1) {
    svg << "<circle cx=\"" << fmt(px(xs[0])) << "\" cy=\"" << fmt(py(ys[0]))
        << "\" r=\"3\" fill=\"#1f6fb2\"/>\n";
  }
  svg << "</svg>\n";

  write_text_file(path, svg.str());
  return true;
}

}  // namespace phivol
