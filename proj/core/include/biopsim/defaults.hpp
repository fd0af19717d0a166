#pragma once

#include <Eigen/Core>

#include "biopsim/kinematics.hpp"

namespace biopsim {

/// Approximate 5-DOF youBot-style arm: base yaw, three parallel pitch joints,
/// wrist roll, with the insertion module's mass lumped into the last link.
/// Link lengths follow the public datasheet; masses and inertias are
/// datasheet-order approximations, not identified parameters.
KinematicChain approximate_youbot_arm();

/// Configuration with the tool pointing straight down and the elbow bent,
/// well away from singularities of the arm above.
Eigen::VectorXd youbot_working_configuration();

}  // namespace biopsim
