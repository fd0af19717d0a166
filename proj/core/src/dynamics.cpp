#include "biopsim/dynamics.hpp"

#include <vector>

#include <Eigen/Cholesky>

#include "biopsim/errors.hpp"

namespace biopsim {

Eigen::VectorXd inverse_dynamics(const KinematicChain& chain, const JointState& state,
                                 const Eigen::VectorXd& ddq, const Eigen::Vector3d& gravity) {
  chain.require_dof(state.dq, "joint velocity vector");
  chain.require_dof(ddq, "joint acceleration vector");
  if (!state.dq.allFinite() || !ddq.allFinite() || !gravity.allFinite())
    throw NumericalError("inverse dynamics inputs must be finite");

  const auto frames = chain_frames(chain, state.q);
  const std::size_t n = chain.dof();

  std::vector<Eigen::Vector3d> axis(n), origin(n), com(n), omega(n), alpha(n), acc_com(n);
  std::vector<Eigen::Matrix3d> inertia(n);

  Eigen::Vector3d prev_omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d prev_alpha = Eigen::Vector3d::Zero();
  Eigen::Vector3d prev_origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d prev_acc = -gravity;  // acceleration of the previous frame origin

  for (std::size_t i = 0; i < n; ++i) {
    const Pose& f = frames[i];
    const auto& link = chain.links()[i];
    axis[i] = f.rotation * chain.joints()[i].axis;
    origin[i] = f.position;
    com[i] = f.position + f.rotation * link.com;
    inertia[i] = f.rotation * link.inertia * f.rotation.transpose();

    const Eigen::Vector3d r = origin[i] - prev_origin;
    const Eigen::Vector3d acc_origin =
        prev_acc + prev_alpha.cross(r) + prev_omega.cross(prev_omega.cross(r));

    omega[i] = prev_omega + axis[i] * state.dq[i];
    alpha[i] = prev_alpha + axis[i] * ddq[i] + prev_omega.cross(axis[i] * state.dq[i]);

    const Eigen::Vector3d rc = com[i] - origin[i];
    acc_com[i] = acc_origin + alpha[i].cross(rc) + omega[i].cross(omega[i].cross(rc));

    prev_omega = omega[i];
    prev_alpha = alpha[i];
    prev_origin = origin[i];
    prev_acc = acc_origin;
  }

  Eigen::VectorXd tau(static_cast<Eigen::Index>(n));
  Eigen::Vector3d child_force = Eigen::Vector3d::Zero();
  Eigen::Vector3d child_moment = Eigen::Vector3d::Zero();  // about the child origin
  Eigen::Vector3d child_origin = Eigen::Vector3d::Zero();
  for (std::size_t k = n; k-- > 0;) {
    const double mass = chain.links()[k].mass;
    const Eigen::Vector3d f_com = mass * acc_com[k];
    const Eigen::Vector3d force = f_com + child_force;
    Eigen::Vector3d moment = inertia[k] * alpha[k] + omega[k].cross(inertia[k] * omega[k]) +
                             (com[k] - origin[k]).cross(f_com) + child_moment;
    if (k + 1 < n) moment += (child_origin - origin[k]).cross(child_force);
    tau[static_cast<Eigen::Index>(k)] = axis[k].dot(moment);

    child_force = force;
    child_moment = moment;
    child_origin = origin[k];
  }
  return tau;
}

DynamicsTerms dynamics_terms(const KinematicChain& chain, const JointState& state,
                             const Eigen::Vector3d& gravity) {
  chain.require_dof(state.dq, "joint velocity vector");
  const auto n = static_cast<Eigen::Index>(chain.dof());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const Eigen::Vector3d no_gravity = Eigen::Vector3d::Zero();

  DynamicsTerms terms;
  terms.mass_matrix.resize(n, n);
  const JointState at_rest{state.q, zero};
  for (Eigen::Index i = 0; i < n; ++i) {
    terms.mass_matrix.col(i) = inverse_dynamics(chain, at_rest, Eigen::VectorXd::Unit(n, i), no_gravity);
  }
  // The probes are symmetric analytically; average out rounding asymmetry.
  terms.mass_matrix = 0.5 * (terms.mass_matrix + terms.mass_matrix.transpose()).eval();

  if (state.dq.isZero(0.0)) {
    terms.bias = zero;
  } else {
    terms.bias = inverse_dynamics(chain, state, zero, no_gravity);
  }
  terms.gravity = inverse_dynamics(chain, at_rest, zero, gravity);
  return terms;
}

Eigen::VectorXd forward_dynamics(const KinematicChain& chain, const JointState& state,
                                 const Eigen::VectorXd& tau, const Vector6d& external_wrench,
                                 const Eigen::Vector3d& gravity) {
  chain.require_dof(tau, "torque vector");
  if (!external_wrench.allFinite()) throw ConfigError("external wrench must be finite");
  const DynamicsTerms terms = dynamics_terms(chain, state, gravity);
  Eigen::VectorXd rhs = tau - terms.bias - terms.gravity;
  if (!external_wrench.isZero(0.0))
    rhs += geometric_jacobian(chain, state.q).transpose() * external_wrench;

  const Eigen::LLT<Eigen::MatrixXd> llt(terms.mass_matrix);
  if (llt.info() != Eigen::Success)
    throw NumericalError("forward dynamics: inertia matrix is not positive definite");
  Eigen::VectorXd ddq = llt.solve(rhs);
  if (!ddq.allFinite())
    throw NumericalError("forward dynamics: non-finite joint acceleration (|rhs| = " +
                         std::to_string(rhs.norm()) + ")");
  return ddq;
}

double kinetic_energy(const KinematicChain& chain, const JointState& state) {
  const auto terms = dynamics_terms(chain, JointState{state.q, Eigen::VectorXd::Zero(state.dq.size())},
                                    Eigen::Vector3d::Zero());
  return 0.5 * state.dq.dot(terms.mass_matrix * state.dq);
}

}  // namespace biopsim
