#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace biopsim {

/// Comparison applied to a metric value. `info` metrics carry no gate.
enum class GateOp { info, less, less_equal, greater, greater_equal, between, equal };

const char* to_string(GateOp op);
GateOp gate_op_from_string(const std::string& text);

struct Metric {
  std::string scenario;
  std::string name;
  double value = 0.0;
  std::string unit;
  GateOp op = GateOp::info;
  double bound = 0.0;     // upper/lower bound, or the low end for `between`
  double bound_hi = 0.0;  // high end for `between`

  bool operator==(const Metric&) const = default;
};

/// Gate evaluation; a pure function of the metric fields.
bool passes(const Metric& metric);

struct MetricsReport {
  std::string experiment;
  std::vector<Metric> metrics;

  bool passed() const;
  void add(std::string scenario, std::string name, double value, std::string unit,
           GateOp op = GateOp::info, double bound = 0.0, double bound_hi = 0.0);
  bool operator==(const MetricsReport&) const = default;
};

enum class ReportFormat { text, csv, json_lines };

/// CSV columns: experiment,scenario,metric,value,unit,op,bound,bound_hi,pass
std::string report_csv(const MetricsReport& report);
std::string report_json_lines(const MetricsReport& report);
std::string report_text(const MetricsReport& report);
std::string render_report(const MetricsReport& report, ReportFormat format);

/// Inverse of report_csv / report_json_lines. Throws IoError on bad input.
MetricsReport parse_report_csv(const std::string& text);
MetricsReport parse_report_json_lines(const std::string& text);

/// Writes the rendered report; throws IoError when the path is unwritable.
void emit_report(const MetricsReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace biopsim
