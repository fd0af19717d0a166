#include "biopsim/control.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "biopsim/errors.hpp"

namespace biopsim {

void GainSet::validate(bool tracking) const {
  if (!kp.allFinite() || !kd.allFinite() || (kp.array() < 0.0).any() || (kd.array() < 0.0).any())
    throw ConfigError("task-space gains must be finite and >= 0");
  if (tracking && !(kp.array() > 0.0).any())
    throw ConfigError("tracking needs at least one positive proportional gain");
  if (!(insertion_kp >= 0.0) || !(insertion_kd >= 0.0) || !(insertion_ko >= 0.0))
    throw ConfigError("insertion gains must be >= 0");
  if (force_sign != 1.0 && force_sign != -1.0)
    throw ConfigError("force_sign must be +1 or -1");
  if (!(damping_lambda >= 0.0) || !(singular_threshold >= 0.0))
    throw ConfigError("damping parameters must be >= 0");
}

void VirtualImpedance::validate() const {
  if (!mass.allFinite() || !(mass.array() > 0.0).all())
    throw ConfigError("virtual mass must be strictly positive on every axis");
  if (!damping.allFinite() || (damping.array() < 0.0).any())
    throw ConfigError("virtual damping must be >= 0");
  if (!stiffness.allFinite() || (stiffness.array() < 0.0).any())
    throw ConfigError("virtual stiffness must be >= 0");
}

TaskError task_error(const TaskState& desired, const TaskState& measured) {
  TaskError e;
  e.position = desired.pose.position - measured.pose.position;
  if (desired.pose.rotation != measured.pose.rotation)
    e.orientation = so3_log(desired.pose.rotation * measured.pose.rotation.transpose());
  e.velocity = desired.twist - measured.twist;
  return e;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& jacobian) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(jacobian).singularValues();
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& jacobian, double lambda) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? s[0] * 1e-14 * static_cast<double>(std::max(jacobian.rows(), jacobian.cols())) : 0.0;
  Eigen::VectorXd s_inv(s.size());
  const double lambda2 = lambda * lambda;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (lambda2 > 0.0) {
      s_inv[i] = s[i] / (s[i] * s[i] + lambda2);
    } else {
      s_inv[i] = s[i] > cutoff ? 1.0 / s[i] : 0.0;
    }
  }
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

double effective_damping(const GainSet& gains, double sigma_min) {
  if (sigma_min >= gains.singular_threshold) return 0.0;
  if (gains.damping_lambda <= 0.0)
    throw SingularityError("Jacobian near singular (sigma_min = " + std::to_string(sigma_min) +
                               ") and damping is disabled",
                           sigma_min);
  return gains.damping_lambda;
}

ComputedTorque computed_torque(const KinematicChain& chain, const JointState& state,
                               const TaskReference& desired, const GainSet& gains,
                               const Eigen::Vector3d& gravity) {
  ComputedTorque out;
  const TaskState measured = task_state(chain, state);
  out.error = task_error(desired.pose, measured);

  const Jacobian jac = geometric_jacobian(chain, state.q);
  const Eigen::VectorXd sv = singular_values(jac);
  // min(6, n) values; a 6×5 arm has no sixth task direction to report.
  out.min_singular_value = sv.size() > 0 ? sv[sv.size() - 1] : 0.0;
  const double lambda = effective_damping(gains, out.min_singular_value);
  out.damped = lambda > 0.0;

  out.task_acceleration = desired.acceleration +
                          gains.kp.cwiseProduct(out.error.pose_error()) +
                          gains.kd.cwiseProduct(out.error.velocity);
  if (!state.dq.isZero(0.0))
    out.task_acceleration -= jacobian_time_derivative(chain, state) * state.dq;

  if (out.task_acceleration.isZero(0.0)) {
    out.joint_acceleration = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chain.dof()));
  } else {
    out.joint_acceleration = pseudo_inverse(jac, lambda) * out.task_acceleration;
  }
  out.tau = inverse_dynamics(chain, state, out.joint_acceleration, gravity);
  return out;
}

Eigen::VectorXd compensation_torque(const KinematicChain& chain, const JointState& state,
                                    const Eigen::Vector3d& gravity) {
  const auto n = static_cast<Eigen::Index>(chain.dof());
  Eigen::VectorXd tau = inverse_dynamics(chain, state, Eigen::VectorXd::Zero(n), gravity);
  for (Eigen::Index i = 0; i < n; ++i)
    tau[i] += chain.joints()[static_cast<std::size_t>(i)].viscous_friction * state.dq[i];
  return tau;
}

AdmittanceState make_admittance_state(const Pose& start) {
  AdmittanceState s;
  s.reference = start;
  s.anchor = start;
  return s;
}

Vector6d admittance_displacement(const AdmittanceState& state) {
  Vector6d d;
  d.head<3>() = state.reference.position - state.anchor.position;
  d.tail<3>() = state.reference.rotation == state.anchor.rotation
                    ? Eigen::Vector3d::Zero()
                    : so3_log(state.reference.rotation * state.anchor.rotation.transpose());
  return d;
}

AdmittanceState admittance_step(const AdmittanceState& state, const Vector6d& external_wrench,
                                const VirtualImpedance& impedance, AdmittanceMode mode, double dt) {
  if (!(dt > 0.0)) throw ConfigError("admittance step needs dt > 0");
  if (external_wrench.isZero(0.0) && state.velocity.isZero(0.0) &&
      (mode == AdmittanceMode::placement || state.reference.position == state.anchor.position) &&
      state.reference.rotation == state.anchor.rotation) {
    AdmittanceState same = state;
    same.acceleration.setZero();
    if (mode == AdmittanceMode::placement) same.anchor = same.reference;
    return same;
  }

  const Vector6d stiffness =
      mode == AdmittanceMode::placement ? Vector6d::Zero() : impedance.stiffness;
  const Vector6d displacement = admittance_displacement(state);

  // Damping is taken implicitly, the spring explicitly.
  AdmittanceState next = state;
  for (int i = 0; i < 6; ++i) {
    const double m = impedance.mass[i];
    const double drive = external_wrench[i] - stiffness[i] * displacement[i];
    next.velocity[i] = (state.velocity[i] + dt * drive / m) / (1.0 + dt * impedance.damping[i] / m);
    next.acceleration[i] = (next.velocity[i] - state.velocity[i]) / dt;
  }

  next.reference.position = state.reference.position + dt * next.velocity.head<3>();
  const Eigen::Vector3d rotation_increment = dt * next.velocity.tail<3>();
  if (!rotation_increment.isZero(0.0))
    next.reference.rotation =
        project_to_rotation(so3_exp(rotation_increment) * state.reference.rotation);

  if (mode == AdmittanceMode::placement) next.anchor = next.reference;
  return next;
}

double insertion_control(double haptic_target, double tool_depth, double tool_velocity,
                         double sensed_force, const GainSet& gains) {
  const double position_error = haptic_target - tool_depth;
  const double velocity_error = -tool_velocity;
  return gains.insertion_kp * position_error + gains.insertion_kd * velocity_error +
         gains.force_sign * gains.insertion_ko * sensed_force;
}

}  // namespace biopsim
