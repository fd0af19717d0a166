#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "biopsim/geometry.hpp"

namespace biopsim {

using Jacobian = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Revolute joint. `offset` places the joint frame in the previous joint's
/// (rotated) frame, or in the base frame for the first joint.
struct RevoluteJoint {
  std::string name;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Pose offset;
  double lower_limit = -1e9;
  double upper_limit = 1e9;
  double viscous_friction = 0.0;  // N·m·s/rad, plant side only
};

/// Inertial parameters of the link rigidly attached after a joint, expressed
/// in that joint's frame. `inertia` is taken about the center of mass.
struct LinkInertia {
  double mass = 1.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();
};

/// Serial chain of revolute joints, one link per joint, and a fixed tip
/// transform from the last joint frame to the end-effector mount.
class KinematicChain {
 public:
  KinematicChain() = default;

  /// Throws ConfigError when an invariant does not hold: unit axes, positive
  /// masses, symmetric positive-definite inertias, at least one joint.
  KinematicChain(std::vector<RevoluteJoint> joints, std::vector<LinkInertia> links,
                 Pose tip = {});

  std::size_t dof() const noexcept { return joints_.size(); }
  const std::vector<RevoluteJoint>& joints() const noexcept { return joints_; }
  const std::vector<LinkInertia>& links() const noexcept { return links_; }
  const Pose& tip() const noexcept { return tip_; }

  /// Dimension check shared by every chain-consuming operation.
  void require_dof(const Eigen::VectorXd& v, const char* what) const;

 private:
  std::vector<RevoluteJoint> joints_;
  std::vector<LinkInertia> links_;
  Pose tip_;
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd dq;
};

/// Finite and inside the declared joint limits.
bool within_limits(const KinematicChain& chain, const JointState& state);

/// Base-frame pose of every joint frame (after its own rotation), followed by
/// the end-effector frame. Size dof + 1.
std::vector<Pose> chain_frames(const KinematicChain& chain, const Eigen::VectorXd& q);

Pose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q);

/// Columns map q̇ᵢ to the base-frame twist [v; ω] of the end-effector frame.
Jacobian geometric_jacobian(const KinematicChain& chain, const Eigen::VectorXd& q);

/// dJ/dt by a directional central difference with step `h` along q̇.
Jacobian jacobian_time_derivative(const KinematicChain& chain, const JointState& state,
                                  double h = 1e-6);

TaskState task_state(const KinematicChain& chain, const JointState& state);

}  // namespace biopsim
