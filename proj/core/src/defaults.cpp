#include "biopsim/defaults.hpp"

#include <numbers>

namespace biopsim {

namespace {

RevoluteJoint joint(const char* name, const Eigen::Vector3d& axis, const Eigen::Vector3d& offset,
                    double lower, double upper) {
  RevoluteJoint j;
  j.name = name;
  j.axis = axis;
  j.offset.position = offset;
  j.lower_limit = lower;
  j.upper_limit = upper;
  return j;
}

LinkInertia link(double mass, const Eigen::Vector3d& com, double ixx, double iyy, double izz) {
  LinkInertia l;
  l.mass = mass;
  l.com = com;
  l.inertia = Eigen::Vector3d(ixx, iyy, izz).asDiagonal();
  return l;
}

}  // namespace

KinematicChain approximate_youbot_arm() {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d y = Eigen::Vector3d::UnitY();
  std::vector<RevoluteJoint> joints{
      joint("arm_joint_1", z, {0.0, 0.0, 0.072}, -2.95, 2.95),
      joint("arm_joint_2", y, {0.033, 0.0, 0.075}, -1.13, 1.57),
      joint("arm_joint_3", y, {0.0, 0.0, 0.155}, -2.63, 2.55),
      joint("arm_joint_4", y, {0.0, 0.0, 0.135}, -1.78, 1.78),
      joint("arm_joint_5", z, {0.0, 0.0, 0.081}, -2.92, 2.92),
  };
  std::vector<LinkInertia> links{
      link(1.390, {0.015, 0.0, 0.040}, 0.0029525, 0.0060091, 0.0058821),
      link(1.318, {0.0, 0.0, 0.0775}, 0.0031145, 0.0031631, 0.0005843),
      link(0.821, {0.0, 0.0, 0.0675}, 0.0017277, 0.0018468, 0.0004197),
      link(0.769, {0.0, 0.0, 0.040}, 0.0006764, 0.0010573, 0.0006610),
      link(1.037, {0.0, 0.0, 0.055}, 0.0011934, 0.0011602, 0.0003689),
  };
  Pose tip;
  tip.position = {0.0, 0.0, 0.137};
  return KinematicChain(std::move(joints), std::move(links), tip);
}

Eigen::VectorXd youbot_working_configuration() {
  Eigen::VectorXd q(5);
  q << 0.0, 0.5, 1.2, std::numbers::pi - 1.7, 0.0;
  return q;
}

}  // namespace biopsim
