#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "biopsim/sim_engine.hpp"

namespace biopsim {

/// Position-error statistics of a tracking run, per base axis.
struct TrackingStats {
  std::array<double, 3> mean_abs{};   // mean |p̃_i|
  std::array<double, 3> std_dev{};    // population std of p̃_i
  std::array<double, 3> std_error{};  // std_dev / sqrt(n)
  std::array<double, 3> max_abs{};
  std::size_t samples = 0;
};

TrackingStats tracking_stats(const std::vector<LogRecord>& records);

/// A strict drop in |F_t| between adjacent records, larger than
/// max(absolute, relative·|F_before|).
struct ForceDrop {
  std::size_t index = 0;  // record after the drop
  double depth = 0.0;     // tool depth at the record before the drop
  double before = 0.0;    // |F_t| before
  double after = 0.0;     // |F_t| after
  bool flagged = false;   // record carries the puncture event
};

struct DropThreshold {
  double absolute = 0.1;   // N
  double relative = 0.25;
};

std::vector<ForceDrop> force_drops(const std::vector<LogRecord>& records,
                                   DropThreshold threshold = {});

struct InsertionStats {
  double max_tracking_error = 0.0;  // max |x_h − x_t| (m)
  double final_depth = 0.0;
  double peak_force = 0.0;           // max |F_t|
  double peak_delivered_force = 0.0;
  std::size_t puncture_events = 0;
  std::vector<ForceDrop> drops;
};

InsertionStats insertion_stats(const std::vector<LogRecord>& records, DropThreshold threshold = {});

/// Segment [first, last] of records by index, inclusive.
struct Segment {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Displacement of the measured position along `axis` between the segment ends.
double displacement(const std::vector<LogRecord>& records, Segment segment, int axis);

/// max ‖p(k) − p(first)‖ over the segment.
double max_drift(const std::vector<LogRecord>& records, Segment segment);

}  // namespace biopsim
