#pragma once

#include <string>
#include <variant>

namespace biopsim {

/// Tool mounted in the module and the module's actuation limits.
struct ToolSpec {
  double diameter = 1.7e-3;            // m
  double min_clamp = 0.4e-3;           // m
  double max_clamp = 3.0e-3;           // m
  double max_insertion_force = 10.0;   // N
  double max_speed = 5.0e-3;           // m/s
  double max_spin = 10.0;              // rad/s

  void validate() const;
};

/// Roller and gearbox geometry. Tool depth = roller_radius · m2_ratio ·
/// m2 angle; tool rotation = m1_ratio · m1 angle. `slip_per_newton` is the
/// fraction of roller travel lost per newton transmitted (0 disables slip).
struct Transmission {
  double roller_radius = 6.0e-3;
  double m2_ratio = 1.0 / 16.0;
  double m1_ratio = 1.0 / 4.0;
  double slip_per_newton = 0.0;

  void validate() const;
};

struct MotorState {
  double angle = 0.0;     // rad
  double velocity = 0.0;  // rad/s
};

struct InsertionState {
  double depth = 0.0;         // m along the insertion axis
  double theta = 0.0;         // rad about the insertion axis
  double velocity = 0.0;      // m/s
  double omega = 0.0;         // rad/s
  double sensed_force = 0.0;  // N, signed; negative resists advance
  double delivered_force = 0.0;  // N, magnitude the roller transmits
  MotorState m1;
  MotorState m2;
  bool speed_saturated = false;
  bool spin_saturated = false;
  bool force_limited = false;
};

struct ClampRange {
  double min = 0.4e-3;
  double max = 3.0e-3;
};

struct ClampAccepted {};
struct ClampRejected {
  enum class Reason { too_small, too_large } reason;
  std::string message;
};
using ClampResult = std::variant<ClampAccepted, ClampRejected>;

/// Accepted iff range.min ≤ diameter ≤ range.max.
ClampResult clamp_check(const ToolSpec& tool, const ClampRange& range);
inline bool accepted(const ClampResult& r) { return std::holds_alternative<ClampAccepted>(r); }

/// Advance the module by dt under commanded axial velocity and spin.
/// Commands are saturated at the tool limits; when the drive force needed to
/// overcome `external_force` exceeds max_insertion_force the axial velocity is
/// scaled down so the delivered force stays at the limit. The sensor reading
/// is ideal (`sensed_force = external_force`). Throws ConfigError for dt ≤ 0.
InsertionState actuate(const InsertionState& state, double commanded_velocity,
                       double commanded_spin, double external_force, double dt,
                       const ToolSpec& tool, const Transmission& transmission = {});

struct HelicalCommand {
  double velocity;  // m/s
  double spin;      // rad/s
};

/// u_v = speed, u_w = 2π·speed/pitch. Throws DomainError for pitch ≤ 0 or
/// negative speed.
HelicalCommand helical_command(double pitch, double speed);

/// |depth − r·ratio·angle| for the roller drive; zero up to rounding when slip
/// is disabled.
double transmission_residual(const InsertionState& state, const Transmission& transmission);

}  // namespace biopsim
