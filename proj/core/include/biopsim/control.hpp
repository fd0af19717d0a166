#pragma once

#include <Eigen/Core>

#include "biopsim/dynamics.hpp"
#include "biopsim/geometry.hpp"
#include "biopsim/kinematics.hpp"

namespace biopsim {

/// Controller gains. Task-space gains are the diagonals of K_P and K_D; the
/// insertion gains drive the scalar tool-axis law.
struct GainSet {
  Vector6d kp = Vector6d::Constant(400.0);
  Vector6d kd = Vector6d::Constant(40.0);
  double insertion_kp = 50.0;   // 1/s
  double insertion_kd = 0.0;    // dimensionless
  double insertion_ko = 1e-4;   // m/(s·N)
  /// +1 retards advance under resistance (F_t < 0), -1 assists.
  double force_sign = 1.0;
  /// Damped least-squares λ, engaged below `singular_threshold`.
  double damping_lambda = 1e-4;
  double singular_threshold = 1e-3;

  /// Throws ConfigError on negative gains. `tracking` additionally requires
  /// one positive proportional entry.
  void validate(bool tracking = true) const;
};

/// Per-axis virtual mass, damping and stiffness of the admittance model.
struct VirtualImpedance {
  Vector6d mass = Vector6d::Constant(1.0);
  Vector6d damping = Vector6d::Constant(80.0);
  Vector6d stiffness = Vector6d::Constant(1600.0);

  void validate() const;
};

struct TaskError {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d orientation = Eigen::Vector3d::Zero();  // rotation vector, ‖·‖ ≤ π
  Vector6d velocity = Vector6d::Zero();

  /// [p̃; φ̃]
  Vector6d pose_error() const {
    Vector6d e;
    e << position, orientation;
    return e;
  }
};

/// p̃ = p_d − p_m, φ̃ = log(R_d R_mᵀ), twist error = twist_d − twist_m.
TaskError task_error(const TaskState& desired, const TaskState& measured);

/// Damped least-squares pseudo-inverse V·diag(σ/(σ²+λ²))·Uᵀ, which equals
/// Jᵀ(JJᵀ + λ²I)⁻¹ for λ > 0 and the Moore-Penrose inverse for λ = 0 (zero
/// singular values are dropped).
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& jacobian, double lambda);

Eigen::VectorXd singular_values(const Eigen::MatrixXd& jacobian);

struct TaskReference {
  TaskState pose;                              // x_d, ẋ_d
  Vector6d acceleration = Vector6d::Zero();    // ẍ_d
};

/// Intermediate quantities of one computed-torque evaluation.
struct ComputedTorque {
  Eigen::VectorXd tau;
  Eigen::VectorXd joint_acceleration;  // q̈_c
  Vector6d task_acceleration;          // ẍ_d + K_P x̃ + K_D ẋ̃ − J̇ q̇
  TaskError error;
  double min_singular_value = 0.0;
  bool damped = false;
};

/// Damping λ actually applied for a Jacobian with smallest singular value
/// `sigma_min`. Throws SingularityError when damping is disabled and the
/// Jacobian is below the threshold.
double effective_damping(const GainSet& gains, double sigma_min);

/// q̈_c = J†[ẍ_d + K_P x̃ + K_D ẋ̃ − J̇ q̇], τ_c = RNEA(q, q̇, q̈_c).
ComputedTorque computed_torque(const KinematicChain& chain, const JointState& state,
                               const TaskReference& desired, const GainSet& gains,
                               const Eigen::Vector3d& gravity = kStandardGravity);

/// c(q, q̇) + g(q) + B_f·q̇, the torque that cancels everything except the
/// operator's wrench.
Eigen::VectorXd compensation_torque(const KinematicChain& chain, const JointState& state,
                                    const Eigen::Vector3d& gravity = kStandardGravity);

enum class AdmittanceMode { placement, holding };

struct AdmittanceState {
  Pose reference;                         // virtual reference x
  Vector6d velocity = Vector6d::Zero();   // ẋ
  Vector6d acceleration = Vector6d::Zero();  // ẍ from the last step
  Pose anchor;                            // holding set-point
};

AdmittanceState make_admittance_state(const Pose& start);

/// Displacement [p − p_a; log(R R_aᵀ)] of the reference from its anchor.
Vector6d admittance_displacement(const AdmittanceState& state);

/// One semi-implicit Euler step of M ẍ + B ẋ + K δx = F_ext per task axis.
/// Placement renders K = 0 and keeps the anchor on the reference; holding
/// pulls toward the anchor with the configured stiffness. Throws ConfigError
/// for dt ≤ 0.
AdmittanceState admittance_step(const AdmittanceState& state, const Vector6d& external_wrench,
                                const VirtualImpedance& impedance, AdmittanceMode mode, double dt);

/// Insertion law output: tool-axis velocity command (m/s).
/// x̃ = x_h − x_t, ẋ̃ = −v_t (haptic target held between samples).
double insertion_control(double haptic_target, double tool_depth, double tool_velocity,
                         double sensed_force, const GainSet& gains);

}  // namespace biopsim
