#include "biopsim/kinematics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "biopsim/errors.hpp"

namespace biopsim {

KinematicChain::KinematicChain(std::vector<RevoluteJoint> joints, std::vector<LinkInertia> links,
                               Pose tip)
    : joints_(std::move(joints)), links_(std::move(links)), tip_(std::move(tip)) {
  if (joints_.empty()) throw ConfigError("kinematic chain needs at least one joint");
  if (links_.size() != joints_.size())
    throw ConfigError("kinematic chain has " + std::to_string(joints_.size()) + " joints but " +
                      std::to_string(links_.size()) + " links");
  for (std::size_t i = 0; i < joints_.size(); ++i) {
    const auto& j = joints_[i];
    if (!j.axis.allFinite() || std::abs(j.axis.norm() - 1.0) > 1e-12)
      throw ConfigError("joint " + std::to_string(i) + " axis is not a unit vector");
    if (!j.offset.is_valid(1e-9))
      throw ConfigError("joint " + std::to_string(i) + " offset is not a rigid transform");
    if (!(j.lower_limit <= j.upper_limit))
      throw ConfigError("joint " + std::to_string(i) + " has lower limit above upper limit");
    if (!(j.viscous_friction >= 0.0))
      throw ConfigError("joint " + std::to_string(i) + " viscous friction must be >= 0");

    const auto& l = links_[i];
    if (!(l.mass > 0.0) || !std::isfinite(l.mass))
      throw ConfigError("link " + std::to_string(i) + " mass must be positive");
    if (!l.com.allFinite()) throw ConfigError("link " + std::to_string(i) + " com not finite");
    if (!l.inertia.allFinite() ||
        (l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + l.inertia.norm()))
      throw ConfigError("link " + std::to_string(i) + " inertia is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(l.inertia, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
      throw ConfigError("link " + std::to_string(i) + " inertia is not positive definite");
  }
  if (!tip_.is_valid(1e-9)) throw ConfigError("chain tip is not a rigid transform");
}

void KinematicChain::require_dof(const Eigen::VectorXd& v, const char* what) const {
  if (static_cast<std::size_t>(v.size()) != dof())
    throw ConfigError(std::string(what) + " has length " + std::to_string(v.size()) +
                      ", chain dof is " + std::to_string(dof()));
}

bool within_limits(const KinematicChain& chain, const JointState& state) {
  if (static_cast<std::size_t>(state.q.size()) != chain.dof() ||
      static_cast<std::size_t>(state.dq.size()) != chain.dof())
    return false;
  if (!state.q.allFinite() || !state.dq.allFinite()) return false;
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto& j = chain.joints()[i];
    if (state.q[i] < j.lower_limit || state.q[i] > j.upper_limit) return false;
  }
  return true;
}

std::vector<Pose> chain_frames(const KinematicChain& chain, const Eigen::VectorXd& q) {
  chain.require_dof(q, "joint position vector");
  if (!q.allFinite()) throw ConfigError("joint positions must be finite");
  std::vector<Pose> frames;
  frames.reserve(chain.dof() + 1);
  Pose current;
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto& joint = chain.joints()[i];
    current = current * joint.offset;
    current.rotation = current.rotation * axis_rotation(joint.axis, q[i]);
    frames.push_back(current);
  }
  frames.push_back(current * chain.tip());
  return frames;
}

Pose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q) {
  return chain_frames(chain, q).back();
}

Jacobian geometric_jacobian(const KinematicChain& chain, const Eigen::VectorXd& q) {
  const auto frames = chain_frames(chain, q);
  const Eigen::Vector3d& tip = frames.back().position;
  Jacobian jac(6, static_cast<Eigen::Index>(chain.dof()));
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    // The axis is invariant under its own rotation, so the post-rotation
    // frame gives the same world axis as the pre-rotation one.
    const Eigen::Vector3d z = frames[i].rotation * chain.joints()[i].axis;
    const auto col = static_cast<Eigen::Index>(i);
    jac.block<3, 1>(0, col) = z.cross(tip - frames[i].position);
    jac.block<3, 1>(3, col) = z;
  }
  return jac;
}

Jacobian jacobian_time_derivative(const KinematicChain& chain, const JointState& state, double h) {
  chain.require_dof(state.q, "joint position vector");
  chain.require_dof(state.dq, "joint velocity vector");
  if (state.dq.isZero(0.0))
    return Jacobian::Zero(6, static_cast<Eigen::Index>(chain.dof()));
  const Eigen::VectorXd step = state.dq * (0.5 * h);
  return (geometric_jacobian(chain, state.q + step) - geometric_jacobian(chain, state.q - step)) / h;
}

TaskState task_state(const KinematicChain& chain, const JointState& state) {
  chain.require_dof(state.dq, "joint velocity vector");
  TaskState ts;
  ts.pose = forward_kinematics(chain, state.q);
  ts.twist = geometric_jacobian(chain, state.q) * state.dq;
  return ts;
}

}  // namespace biopsim
