#include "biopsim/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "biopsim/errors.hpp"

namespace biopsim {

void TrajectorySpec::validate() const {
  if (!start.is_valid(1e-9)) throw ConfigError("trajectory start pose is not a rigid transform");
  switch (kind) {
    case TrajectoryKind::hold:
      break;
    case TrajectoryKind::sine:
      if (axis < 0 || axis > 5) throw ConfigError("sine axis must be in 0..5");
      if (!(amplitude > 0.0)) throw ConfigError("sine amplitude must be > 0");
      if (!(period > 0.0)) throw ConfigError("sine period must be > 0");
      break;
    case TrajectoryKind::point_to_point:
      if (!goal.is_valid(1e-9)) throw ConfigError("trajectory goal pose is not a rigid transform");
      if (!(duration > 0.0)) throw ConfigError("point-to-point duration must be > 0");
      break;
  }
}

QuinticScaling quintic_scaling(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  return {t3 * (10.0 - 15.0 * tau + 6.0 * t2), 30.0 * t2 * (1.0 - 2.0 * tau + t2),
          60.0 * tau * (1.0 - 3.0 * tau + 2.0 * t2)};
}

namespace {

TrajectorySample sample_sine(const TrajectorySpec& spec, double t) {
  const double w = 2.0 * std::numbers::pi / spec.period;
  const double x = spec.amplitude * std::sin(w * t);
  const double v = spec.amplitude * w * std::cos(w * t);
  const double a = -spec.amplitude * w * w * std::sin(w * t);

  TrajectorySample out;
  out.state.pose = spec.start;
  const auto axis = static_cast<Eigen::Index>(spec.axis);
  if (spec.axis < 3) {
    out.state.pose.position[axis] += x;
  } else {
    const Eigen::Vector3d base_axis = Eigen::Vector3d::Unit(axis - 3);
    if (x != 0.0) out.state.pose.rotation = axis_rotation(base_axis, x) * spec.start.rotation;
  }
  out.state.twist[axis] = v;
  out.acceleration[axis] = a;
  return out;
}

TrajectorySample sample_point_to_point(const TrajectorySpec& spec, double t) {
  TrajectorySample out;
  if (t >= spec.duration) {
    out.state.pose = spec.goal;
    return out;
  }
  const auto sc = quintic_scaling(t / spec.duration);
  const double ds = sc.ds / spec.duration;
  const double dds = sc.dds / (spec.duration * spec.duration);

  const Eigen::Vector3d dp = spec.goal.position - spec.start.position;
  const Eigen::Vector3d dphi = spec.goal.rotation == spec.start.rotation
                                   ? Eigen::Vector3d::Zero()
                                   : so3_log(spec.goal.rotation * spec.start.rotation.transpose());

  out.state.pose.position = spec.start.position + sc.s * dp;
  out.state.pose.rotation = sc.s == 0.0 ? spec.start.rotation : so3_exp(sc.s * dphi) * spec.start.rotation;
  out.state.twist << ds * dp, ds * dphi;
  out.acceleration << dds * dp, dds * dphi;
  return out;
}

}  // namespace

TrajectorySample sample(const TrajectorySpec& spec, double t) {
  if (!(t >= 0.0)) throw DomainError("trajectory sampled at negative time " + std::to_string(t));
  switch (spec.kind) {
    case TrajectoryKind::sine:
      return sample_sine(spec, t);
    case TrajectoryKind::point_to_point:
      return sample_point_to_point(spec, t);
    case TrajectoryKind::hold:
      break;
  }
  TrajectorySample out;
  out.state.pose = spec.start;
  return out;
}

InsertionProfile::InsertionProfile(double speed, double depth) : speed_(speed), depth_(depth) {
  if (!(speed > 0.0)) throw DomainError("insertion speed must be > 0");
  if (!(depth > 0.0)) throw DomainError("insertion depth must be > 0");
}

double InsertionProfile::operator()(double t) const {
  if (!(t >= 0.0)) throw DomainError("insertion profile sampled at negative time");
  return std::min(speed_ * t, depth_);
}

}  // namespace biopsim
