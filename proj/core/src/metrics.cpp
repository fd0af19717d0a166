#include "biopsim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "biopsim/errors.hpp"

namespace biopsim {

TrackingStats tracking_stats(const std::vector<LogRecord>& records) {
  TrackingStats s;
  s.samples = records.size();
  if (records.empty()) throw DomainError("tracking statistics need at least one record");
  const auto n = static_cast<double>(records.size());
  for (int axis = 0; axis < 3; ++axis) {
    double sum = 0.0, sum_abs = 0.0, max_abs = 0.0;
    for (const auto& r : records) {
      const double e = r.task_error[axis];
      sum += e;
      sum_abs += std::abs(e);
      max_abs = std::max(max_abs, std::abs(e));
    }
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& r : records) var += (r.task_error[axis] - mean) * (r.task_error[axis] - mean);
    var /= n;
    s.mean_abs[axis] = sum_abs / n;
    s.std_dev[axis] = std::sqrt(var);
    s.std_error[axis] = s.std_dev[axis] / std::sqrt(n);
    s.max_abs[axis] = max_abs;
  }
  return s;
}

std::vector<ForceDrop> force_drops(const std::vector<LogRecord>& records, DropThreshold threshold) {
  std::vector<ForceDrop> drops;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double before = std::abs(records[k - 1].force);
    const double after = std::abs(records[k].force);
    const double needed = std::max(threshold.absolute, threshold.relative * before);
    if (before - after > needed)
      drops.push_back({k, records[k - 1].depth, before, after,
                       (records[k].events & event::puncture) != 0});
  }
  return drops;
}

InsertionStats insertion_stats(const std::vector<LogRecord>& records, DropThreshold threshold) {
  InsertionStats s;
  for (const auto& r : records) {
    s.max_tracking_error = std::max(s.max_tracking_error, std::abs(r.haptic_target - r.depth));
    s.peak_force = std::max(s.peak_force, std::abs(r.force));
    s.peak_delivered_force = std::max(s.peak_delivered_force, r.delivered_force);
    if (r.events & event::puncture) ++s.puncture_events;
  }
  if (!records.empty()) s.final_depth = records.back().depth;
  s.drops = force_drops(records, threshold);
  return s;
}

namespace {

void check_segment(const std::vector<LogRecord>& records, Segment segment) {
  if (segment.first > segment.last || segment.last >= records.size())
    throw DomainError("segment out of range");
}

}  // namespace

double displacement(const std::vector<LogRecord>& records, Segment segment, int axis) {
  check_segment(records, segment);
  if (axis < 0 || axis > 2) throw DomainError("displacement axis must be 0..2");
  return records[segment.last].pose.position[axis] - records[segment.first].pose.position[axis];
}

double max_drift(const std::vector<LogRecord>& records, Segment segment) {
  check_segment(records, segment);
  const Eigen::Vector3d origin = records[segment.first].pose.position;
  double drift = 0.0;
  for (std::size_t k = segment.first; k <= segment.last; ++k)
    drift = std::max(drift, (records[k].pose.position - origin).norm());
  return drift;
}

}  // namespace biopsim
