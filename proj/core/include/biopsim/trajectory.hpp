#pragma once

#include "biopsim/geometry.hpp"

namespace biopsim {

enum class TrajectoryKind { hold, sine, point_to_point };

/// Desired task trajectory. Sine: A·sin(2πt/T) on one task axis (0..2
/// translation, 3..5 rotation about the base axes) around `start`.
/// Point-to-point: quintic blend from `start` to `goal` over `duration`.
/// Hold: `start` forever.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::hold;
  int axis = 0;
  double amplitude = 0.05;
  double period = 8.0;
  Pose start;
  Pose goal;
  double duration = 1.0;

  void validate() const;
};

struct TrajectorySample {
  TaskState state;                          // x_d, ẋ_d
  Vector6d acceleration = Vector6d::Zero();  // ẍ_d
};

/// Throws DomainError for t < 0.
TrajectorySample sample(const TrajectorySpec& spec, double t);

/// Quintic time scaling s(τ) = 10τ³ − 15τ⁴ + 6τ⁵ and its τ-derivatives.
struct QuinticScaling {
  double s, ds, dds;
};
QuinticScaling quintic_scaling(double tau);

/// Constant-speed haptic ramp x_h(t) = min(speed·t, depth).
class InsertionProfile {
 public:
  /// Throws DomainError unless speed > 0 and depth > 0.
  InsertionProfile(double speed, double depth);

  double operator()(double t) const;
  double speed() const noexcept { return speed_; }
  double depth() const noexcept { return depth_; }
  /// Time at which the ramp reaches full depth.
  double ramp_time() const noexcept { return depth_ / speed_; }

 private:
  double speed_;
  double depth_;
};

}  // namespace biopsim
