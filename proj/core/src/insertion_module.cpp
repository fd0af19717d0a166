#include "biopsim/insertion_module.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "biopsim/errors.hpp"

namespace biopsim {

void ToolSpec::validate() const {
  if (!(diameter > 0.0)) throw ConfigError("tool diameter must be > 0");
  if (!(min_clamp > 0.0) || !(min_clamp <= max_clamp))
    throw ConfigError("clamp range must satisfy 0 < min_clamp <= max_clamp");
  if (!(max_insertion_force > 0.0)) throw ConfigError("max_insertion_force must be > 0");
  if (!(max_speed > 0.0) || !(max_spin > 0.0)) throw ConfigError("speed limits must be > 0");
}

void Transmission::validate() const {
  if (!(roller_radius > 0.0) || !(m2_ratio > 0.0) || !(m1_ratio > 0.0))
    throw ConfigError("transmission radius and ratios must be > 0");
  if (!(slip_per_newton >= 0.0)) throw ConfigError("slip_per_newton must be >= 0");
}

ClampResult clamp_check(const ToolSpec& tool, const ClampRange& range) {
  if (tool.diameter < range.min)
    return ClampRejected{ClampRejected::Reason::too_small,
                         "tool diameter " + std::to_string(tool.diameter * 1e3) +
                             " mm below clamp minimum " + std::to_string(range.min * 1e3) + " mm"};
  if (tool.diameter > range.max)
    return ClampRejected{ClampRejected::Reason::too_large,
                         "tool diameter " + std::to_string(tool.diameter * 1e3) +
                             " mm above clamp maximum " + std::to_string(range.max * 1e3) + " mm"};
  return ClampAccepted{};
}

InsertionState actuate(const InsertionState& state, double commanded_velocity,
                       double commanded_spin, double external_force, double dt,
                       const ToolSpec& tool, const Transmission& transmission) {
  if (!(dt > 0.0)) throw ConfigError("insertion module step needs dt > 0");
  InsertionState next = state;

  double v = std::clamp(commanded_velocity, -tool.max_speed, tool.max_speed);
  const double w = std::clamp(commanded_spin, -tool.max_spin, tool.max_spin);
  next.speed_saturated = v != commanded_velocity;
  next.spin_saturated = w != commanded_spin;

  // Quasi-static roller: the drive pushes with whatever the tissue resists.
  const double drive = -external_force;
  const double drive_mag = std::abs(drive);
  next.force_limited = false;
  if (drive_mag > tool.max_insertion_force) {
    const bool moving_against = (v > 0.0 && drive > 0.0) || (v < 0.0 && drive < 0.0);
    if (moving_against) v *= tool.max_insertion_force / drive_mag;
    next.force_limited = true;
  }
  next.delivered_force = std::min(drive_mag, tool.max_insertion_force);

  const double slip = std::min(1.0, transmission.slip_per_newton * next.delivered_force);
  const double roller_surface = transmission.roller_radius * transmission.m2_ratio;

  next.m2.velocity = v / roller_surface;
  next.m2.angle = state.m2.angle + next.m2.velocity * dt;
  next.m1.velocity = w / transmission.m1_ratio;
  next.m1.angle = state.m1.angle + next.m1.velocity * dt;

  next.velocity = v * (1.0 - slip);
  next.omega = w;
  next.depth = state.depth + next.velocity * dt;
  next.theta = state.theta + w * dt;
  next.sensed_force = external_force;
  return next;
}

HelicalCommand helical_command(double pitch, double speed) {
  if (!(pitch > 0.0)) throw DomainError("helical pitch must be > 0");
  if (!(speed >= 0.0)) throw DomainError("helical speed must be >= 0");
  return {speed, 2.0 * std::numbers::pi * speed / pitch};
}

double transmission_residual(const InsertionState& state, const Transmission& transmission) {
  return std::abs(state.depth - transmission.roller_radius * transmission.m2_ratio * state.m2.angle);
}

}  // namespace biopsim
