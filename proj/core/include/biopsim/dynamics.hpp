#pragma once

#include <Eigen/Core>

#include "biopsim/geometry.hpp"
#include "biopsim/kinematics.hpp"

namespace biopsim {

inline const Eigen::Vector3d kStandardGravity{0.0, 0.0, -9.81};

/// Terms of τ = M(q)·q̈ + c(q, q̇) + g(q). The bias c is kept as a vector.
struct DynamicsTerms {
  Eigen::MatrixXd mass_matrix;
  Eigen::VectorXd bias;
  Eigen::VectorXd gravity;
};

/// Recursive Newton-Euler. All link quantities are propagated in the base
/// frame; gravity enters as a fictitious base acceleration.
Eigen::VectorXd inverse_dynamics(const KinematicChain& chain, const JointState& state,
                                 const Eigen::VectorXd& ddq,
                                 const Eigen::Vector3d& gravity = kStandardGravity);

/// M from unit-acceleration probes, c at zero gravity, g at rest.
DynamicsTerms dynamics_terms(const KinematicChain& chain, const JointState& state,
                             const Eigen::Vector3d& gravity = kStandardGravity);

/// Solves M·q̈ = τ + Jᵀ·F_ext − c − g with a Cholesky factorization.
/// `external_wrench` is [force; moment] acting on the end-effector frame
/// origin, base frame. Throws NumericalError when the solve is non-finite.
Eigen::VectorXd forward_dynamics(const KinematicChain& chain, const JointState& state,
                                 const Eigen::VectorXd& tau, const Vector6d& external_wrench,
                                 const Eigen::Vector3d& gravity = kStandardGravity);

/// ½ q̇ᵀ M(q) q̇.
double kinetic_energy(const KinematicChain& chain, const JointState& state);

}  // namespace biopsim
