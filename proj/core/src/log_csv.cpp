#include "biopsim/log_csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "biopsim/errors.hpp"

namespace biopsim {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string log_csv_header(std::size_t dof) {
  std::string h = "t";
  for (std::size_t i = 1; i <= dof; ++i) h += ",q" + std::to_string(i);
  for (std::size_t i = 1; i <= dof; ++i) h += ",dq" + std::to_string(i);
  h += ",px,py,pz,ox,oy,oz,xd_px,xd_py,xd_pz,xd_ox,xd_oy,xd_oz";
  for (int i = 1; i <= 6; ++i) h += ",err" + std::to_string(i);
  for (std::size_t i = 1; i <= dof; ++i) h += ",tau" + std::to_string(i);
  h += ",depth,theta,v,F_t,event_flags";
  return h;
}

namespace {

void put(std::string& line, double v) {
  line += ',';
  line += format_double(v);
}

double parse_double(const std::string& cell) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw IoError("log CSV: bad number '" + cell + "'");
  return v;
}

}  // namespace

void write_log_csv(std::ostream& out, const std::vector<LogRecord>& records) {
  const std::size_t dof = records.empty() ? 0 : static_cast<std::size_t>(records.front().q.size());
  out << log_csv_header(dof) << '\n';
  std::string line;
  for (const auto& r : records) {
    line = format_double(r.t);
    for (Eigen::Index i = 0; i < r.q.size(); ++i) put(line, r.q[i]);
    for (Eigen::Index i = 0; i < r.dq.size(); ++i) put(line, r.dq[i]);
    const Eigen::Vector3d o = so3_log(r.pose.rotation);
    const Eigen::Vector3d od = so3_log(r.desired.rotation);
    for (int i = 0; i < 3; ++i) put(line, r.pose.position[i]);
    for (int i = 0; i < 3; ++i) put(line, o[i]);
    for (int i = 0; i < 3; ++i) put(line, r.desired.position[i]);
    for (int i = 0; i < 3; ++i) put(line, od[i]);
    for (int i = 0; i < 6; ++i) put(line, r.task_error[i]);
    for (Eigen::Index i = 0; i < r.tau.size(); ++i) put(line, r.tau[i]);
    put(line, r.depth);
    put(line, r.theta);
    put(line, r.velocity);
    put(line, r.force);
    line += ',';
    line += std::to_string(r.events);
    out << line << '\n';
  }
}

std::string log_csv(const std::vector<LogRecord>& records) {
  std::ostringstream os;
  write_log_csv(os, records);
  return os.str();
}

std::vector<LogRecord> read_log_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("log CSV: empty input");
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  // 24 fixed columns plus three per joint
  if (columns < 27 || (columns - 24) % 3 != 0) throw IoError("log CSV: unexpected column count");
  const std::size_t dof = (columns - 24) / 3;
  if (header != log_csv_header(dof)) throw IoError("log CSV: header does not match schema");

  std::vector<LogRecord> records;
  std::string line;
  std::vector<std::string> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    cells.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) throw IoError("log CSV: row has wrong number of cells");
    std::size_t c = 0;
    LogRecord r;
    r.index = records.size();
    r.t = parse_double(cells[c++]);
    const auto n = static_cast<Eigen::Index>(dof);
    r.q.resize(n);
    r.dq.resize(n);
    r.tau.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) r.q[i] = parse_double(cells[c++]);
    for (Eigen::Index i = 0; i < n; ++i) r.dq[i] = parse_double(cells[c++]);
    Eigen::Vector3d o, od;
    for (int i = 0; i < 3; ++i) r.pose.position[i] = parse_double(cells[c++]);
    for (int i = 0; i < 3; ++i) o[i] = parse_double(cells[c++]);
    for (int i = 0; i < 3; ++i) r.desired.position[i] = parse_double(cells[c++]);
    for (int i = 0; i < 3; ++i) od[i] = parse_double(cells[c++]);
    r.pose.rotation = so3_exp(o);
    r.desired.rotation = so3_exp(od);
    for (int i = 0; i < 6; ++i) r.task_error[i] = parse_double(cells[c++]);
    for (Eigen::Index i = 0; i < n; ++i) r.tau[i] = parse_double(cells[c++]);
    r.depth = parse_double(cells[c++]);
    r.theta = parse_double(cells[c++]);
    r.velocity = parse_double(cells[c++]);
    r.force = parse_double(cells[c++]);
    r.events = static_cast<std::uint32_t>(std::stoul(cells[c++]));
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace biopsim
