#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace biopsim {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Rigid placement of a frame in the base frame.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  /// RᵀR = I and det R = +1 within `tol`.
  bool is_valid(double tol = 1e-10) const;

  Pose operator*(const Pose& rhs) const {
    return {position + rotation * rhs.position, rotation * rhs.rotation};
  }
  Pose inverse() const {
    return {-(rotation.transpose() * position), rotation.transpose()};
  }
};

/// Pose plus base-frame twist [v; ω]. Linear velocity is that of the frame
/// origin; both halves are expressed in the base frame.
struct TaskState {
  Pose pose;
  Vector6d twist = Vector6d::Zero();
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Rotation vector (axis·angle) of R on the principal branch, ‖φ‖ ≤ π.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& rotation);

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& rotation_vector);

/// Rotation about a unit axis by `angle`, exact for axis-aligned inputs.
Eigen::Matrix3d axis_rotation(const Eigen::Vector3d& unit_axis, double angle);

/// Re-orthonormalize a nearly orthonormal matrix (polar projection).
Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m);

}  // namespace biopsim
