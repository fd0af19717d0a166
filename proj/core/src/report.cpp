#include "biopsim/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "biopsim/errors.hpp"
#include "biopsim/log_csv.hpp"

namespace biopsim {

const char* to_string(GateOp op) {
  switch (op) {
    case GateOp::info:
      return "info";
    case GateOp::less:
      return "<";
    case GateOp::less_equal:
      return "<=";
    case GateOp::greater:
      return ">";
    case GateOp::greater_equal:
      return ">=";
    case GateOp::between:
      return "between";
    case GateOp::equal:
      return "==";
  }
  return "info";
}

GateOp gate_op_from_string(const std::string& text) {
  for (GateOp op : {GateOp::info, GateOp::less, GateOp::less_equal, GateOp::greater,
                    GateOp::greater_equal, GateOp::between, GateOp::equal})
    if (text == to_string(op)) return op;
  throw IoError("unknown gate operator '" + text + "'");
}

bool passes(const Metric& m) {
  switch (m.op) {
    case GateOp::info:
      return true;
    case GateOp::less:
      return m.value < m.bound;
    case GateOp::less_equal:
      return m.value <= m.bound;
    case GateOp::greater:
      return m.value > m.bound;
    case GateOp::greater_equal:
      return m.value >= m.bound;
    case GateOp::between:
      return m.value >= m.bound && m.value <= m.bound_hi;
    case GateOp::equal:
      return m.value == m.bound;
  }
  return false;
}

bool MetricsReport::passed() const {
  for (const auto& m : metrics)
    if (!passes(m)) return false;
  return true;
}

void MetricsReport::add(std::string scenario, std::string name, double value, std::string unit,
                        GateOp op, double bound, double bound_hi) {
  metrics.push_back({std::move(scenario), std::move(name), value, std::move(unit), op, bound, bound_hi});
}

namespace {

constexpr const char* kCsvHeader = "experiment,scenario,metric,value,unit,op,bound,bound_hi,pass";

void require_csv_safe(const std::string& s) {
  if (s.find_first_of(",\n\r\"") != std::string::npos)
    throw IoError("report field '" + s + "' contains a CSV delimiter");
}

double parse_number(const std::string& cell) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw IoError("report: bad number '" + cell + "'");
  return v;
}

}  // namespace

std::string report_csv(const MetricsReport& report) {
  require_csv_safe(report.experiment);
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& m : report.metrics) {
    require_csv_safe(m.scenario);
    require_csv_safe(m.name);
    require_csv_safe(m.unit);
    out += report.experiment + ',' + m.scenario + ',' + m.name + ',' + format_double(m.value) + ',' +
           m.unit + ',' + to_string(m.op) + ',' + format_double(m.bound) + ',' +
           format_double(m.bound_hi) + ',' + (passes(m) ? "1" : "0") + '\n';
  }
  return out;
}

MetricsReport parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoError("report CSV: bad header");
  MetricsReport report;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) throw IoError("report CSV: expected 9 cells, got " + std::to_string(cells.size()));
    if (first) {
      report.experiment = cells[0];
      first = false;
    } else if (cells[0] != report.experiment) {
      throw IoError("report CSV: mixed experiments");
    }
    Metric m{cells[1], cells[2], parse_number(cells[3]), cells[4], gate_op_from_string(cells[5]),
             parse_number(cells[6]), parse_number(cells[7])};
    if ((cells[8] == "1") != passes(m)) throw IoError("report CSV: pass column disagrees with gate");
    report.metrics.push_back(std::move(m));
  }
  return report;
}

std::string report_json_lines(const MetricsReport& report) {
  // Numbers go through format_double so the bytes do not depend on the
  // JSON library's float printer.
  std::string out;
  for (const auto& m : report.metrics) {
    nlohmann::json j = {{"experiment", report.experiment}, {"scenario", m.scenario},
                        {"metric", m.name},                {"unit", m.unit},
                        {"op", to_string(m.op)},           {"pass", passes(m)}};
    std::string line = j.dump();
    line.pop_back();
    line += ",\"value\":" + format_double(m.value) + ",\"bound\":" + format_double(m.bound) +
            ",\"bound_hi\":" + format_double(m.bound_hi) + "}";
    out += line + '\n';
  }
  if (report.metrics.empty()) out += nlohmann::json({{"experiment", report.experiment}}).dump() + '\n';
  return out;
}

MetricsReport parse_report_json_lines(const std::string& text) {
  MetricsReport report;
  std::istringstream in(text);
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      report.experiment = j.at("experiment").get<std::string>();
      if (!j.contains("metric")) continue;
      report.metrics.push_back({j.at("scenario").get<std::string>(), j.at("metric").get<std::string>(),
                                j.at("value").get<double>(), j.at("unit").get<std::string>(),
                                gate_op_from_string(j.at("op").get<std::string>()),
                                j.at("bound").get<double>(), j.at("bound_hi").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("report JSON lines: ") + e.what());
  }
  return report;
}

std::string report_text(const MetricsReport& report) {
  std::ostringstream os;
  os << "== " << report.experiment << " : " << (report.passed() ? "PASS" : "FAIL") << " ==\n";
  for (const auto& m : report.metrics) {
    os << (m.op == GateOp::info ? "  [info] " : passes(m) ? "  [PASS] " : "  [FAIL] ") << m.scenario
       << " " << m.name << " = " << format_double(m.value) << " " << m.unit;
    if (m.op == GateOp::between) {
      os << " (gate " << format_double(m.bound) << " .. " << format_double(m.bound_hi) << ")";
    } else if (m.op != GateOp::info) {
      os << " (gate " << to_string(m.op) << " " << format_double(m.bound) << ")";
    }
    os << '\n';
  }
  return os.str();
}

std::string render_report(const MetricsReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv:
      return report_csv(report);
    case ReportFormat::json_lines:
      return report_json_lines(report);
    case ReportFormat::text:
      break;
  }
  return report_text(report);
}

void emit_report(const MetricsReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << render_report(report, format);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace biopsim
