#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "biopsim/sim_engine.hpp"

namespace biopsim {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Column order:
///   t, q1..qN, dq1..dqN, px, py, pz, ox, oy, oz,
///   xd_px, xd_py, xd_pz, xd_ox, xd_oy, xd_oz, err1..err6,
///   tau1..tauN, depth, theta, v, F_t, event_flags
/// Orientations are rotation vectors (rad) in the base frame.
std::string log_csv_header(std::size_t dof);

void write_log_csv(std::ostream& out, const std::vector<LogRecord>& records);
std::string log_csv(const std::vector<LogRecord>& records);

/// Parses a log written by write_log_csv. Throws IoError on schema mismatch.
std::vector<LogRecord> read_log_csv(std::istream& in);

}  // namespace biopsim
