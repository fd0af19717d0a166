#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "biopsim/defaults.hpp"
#include "biopsim/dynamics.hpp"
#include "biopsim/errors.hpp"
#include "biopsim/sim_engine.hpp"
#include "chains.hpp"
#include "oracles.hpp"

using namespace biopsim;
using namespace biopsim::testing;
using std::numbers::pi;

namespace {

const Eigen::Vector3d kPlanarGravity(0.0, -9.81, 0.0);
const PlanarLink kUpper{0.3, 1.2, 0.14, 0.012};
const PlanarLink kLower{0.25, 0.7, 0.11, 0.006};

}  // namespace

TEST(InverseDynamics, PendulumStaticTorque) {
  const KinematicChain chain = pendulum_about_y(1.0, 1.0, 0.5, 1.0 / 12.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd tau = inverse_dynamics(chain, {zero, zero}, zero);
  EXPECT_NEAR(std::abs(tau[0]), 1.0 * 9.81 * 0.5, 1e-12);
}

TEST(InverseDynamics, ZeroGravityAtRestIsZero) {
  std::mt19937_64 rng(1);
  const KinematicChain chain = random_chain(5, rng);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
  const Eigen::VectorXd tau = inverse_dynamics(chain, {uniform_vector(rng, 5, -pi, pi), zero}, zero,
                                               Eigen::Vector3d::Zero());
  EXPECT_EQ(tau.cwiseAbs().maxCoeff(), 0.0);
}

TEST(InverseDynamics, SinglePendulumMatchesLagrangian) {
  const SinglePendulum oracle{kUpper};
  const KinematicChain chain = planar_chain({kUpper}, 0.004);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const double q = uniform(rng, -pi, pi);
    const double dq = uniform(rng, -5, 5);
    const double ddq = uniform(rng, -10, 10);
    const Eigen::VectorXd tau = inverse_dynamics(chain, {Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Constant(1, dq)},
                                                 Eigen::VectorXd::Constant(1, ddq), kPlanarGravity);
    EXPECT_NEAR(tau[0], oracle.torque(q, ddq), 1e-9);
  }
}

TEST(InverseDynamics, DoublePendulumMatchesLagrangian) {
  const DoublePendulum oracle{kUpper, kLower};
  const KinematicChain chain = planar_chain({kUpper, kLower}, 0.004);
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector2d q = uniform_vector(rng, 2, -pi, pi);
    const Eigen::Vector2d dq = uniform_vector(rng, 2, -5, 5);
    const Eigen::Vector2d ddq = uniform_vector(rng, 2, -10, 10);
    const Eigen::VectorXd tau = inverse_dynamics(chain, {q, dq}, ddq, kPlanarGravity);
    EXPECT_LT((tau - oracle.torque(q, dq, ddq)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(InverseDynamics, DimensionMismatchIsConfigError) {
  const KinematicChain chain = planar_chain({kUpper, kLower});
  EXPECT_THROW(inverse_dynamics(chain, {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)}, Eigen::VectorXd::Zero(2)),
               ConfigError);
  EXPECT_THROW(inverse_dynamics(chain, {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)}, Eigen::VectorXd::Zero(1)),
               ConfigError);
}

TEST(DynamicsTerms, SinglePendulumInertiaIsConstant) {
  const KinematicChain chain = planar_chain({kUpper});
  const double expected = kUpper.izz + kUpper.mass * kUpper.com * kUpper.com;
  for (double q : {-2.0, 0.0, 0.7, 3.0}) {
    const auto terms = dynamics_terms(chain, {Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Constant(1, 1.3)});
    EXPECT_NEAR(terms.mass_matrix(0, 0), expected, 1e-14);
  }
}

TEST(DynamicsTerms, BiasVanishesAtRest) {
  std::mt19937_64 rng(2);
  const KinematicChain chain = random_chain(4, rng);
  const auto terms = dynamics_terms(chain, {uniform_vector(rng, 4, -pi, pi), Eigen::VectorXd::Zero(4)});
  EXPECT_EQ(terms.bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DynamicsTerms, GravityIndependentOfVelocity) {
  std::mt19937_64 rng(3);
  const KinematicChain chain = random_chain(4, rng);
  const Eigen::VectorXd q = uniform_vector(rng, 4, -pi, pi);
  const auto a = dynamics_terms(chain, {q, Eigen::VectorXd::Zero(4)});
  const auto b = dynamics_terms(chain, {q, uniform_vector(rng, 4, -3, 3)});
  EXPECT_EQ(a.gravity, b.gravity);
}

TEST(DynamicsTerms, DoublePendulumTermsMatchLagrangian) {
  const DoublePendulum oracle{kUpper, kLower};
  const KinematicChain chain = planar_chain({kUpper, kLower}, 0.004);
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector2d q = uniform_vector(rng, 2, -pi, pi);
    const Eigen::Vector2d dq = uniform_vector(rng, 2, -5, 5);
    const auto terms = dynamics_terms(chain, {q, dq}, kPlanarGravity);
    EXPECT_LT((terms.mass_matrix - oracle.mass_matrix(q)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((terms.bias - oracle.bias(q, dq)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((terms.gravity - oracle.gravity(q)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(DynamicsTerms, SelfConsistentWithInverseDynamics) {
  std::mt19937_64 rng(24);
  for (std::size_t dof = 1; dof <= 5; ++dof) {
    const KinematicChain chain = random_chain(dof, rng);
    const JointState s{uniform_vector(rng, dof, -pi, pi), uniform_vector(rng, dof, -2, 2)};
    const Eigen::VectorXd ddq = uniform_vector(rng, dof, -5, 5);
    const auto terms = dynamics_terms(chain, s);
    const Eigen::VectorXd tau = inverse_dynamics(chain, s, ddq);
    EXPECT_LT((tau - (terms.mass_matrix * ddq + terms.bias + terms.gravity)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(DynamicsTerms, MassMatrixSymmetricPositiveDefiniteOnDefaultArm) {
  const KinematicChain arm = approximate_youbot_arm();
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 1000; ++trial) {
    const JointState s{uniform_vector(rng, arm.dof(), -pi, pi), Eigen::VectorXd::Zero(arm.dof())};
    const Eigen::MatrixXd m = dynamics_terms(arm, s).mass_matrix;
    ASSERT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    ASSERT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(DynamicsTerms, GravityIsGradientOfPotential) {
  std::mt19937_64 rng(26);
  for (std::size_t dof = 1; dof <= 5; ++dof) {
    const KinematicChain chain = random_chain(dof, rng);
    const Eigen::VectorXd q = uniform_vector(rng, dof, -pi, pi);
    const auto terms = dynamics_terms(chain, {q, Eigen::VectorXd::Zero(dof)});
    const double h = 1e-6;
    for (std::size_t i = 0; i < dof; ++i) {
      Eigen::VectorXd qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      const double grad = (potential_energy(chain, qp, kStandardGravity) -
                           potential_energy(chain, qm, kStandardGravity)) / (2 * h);
      EXPECT_NEAR(terms.gravity[i], grad, 1e-6) << "dof " << dof << " joint " << i;
    }
  }
}

TEST(ForwardDynamics, ExactCompensationGivesZeroAcceleration) {
  std::mt19937_64 rng(27);
  const KinematicChain chain = random_chain(5, rng);
  const JointState s{uniform_vector(rng, 5, -pi, pi), uniform_vector(rng, 5, -1, 1)};
  const auto terms = dynamics_terms(chain, s);
  const Eigen::VectorXd ddq = forward_dynamics(chain, s, terms.bias + terms.gravity, Vector6d::Zero());
  EXPECT_LT(ddq.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ForwardDynamics, SinglePendulumScalarDivision) {
  const KinematicChain chain = planar_chain({kUpper});
  const double q = 0.3, tau = 1.7;
  const JointState s{Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Zero(1)};
  const Eigen::VectorXd ddq = forward_dynamics(chain, s, Eigen::VectorXd::Constant(1, tau), Vector6d::Zero(),
                                               kPlanarGravity);
  const double inertia = kUpper.izz + kUpper.mass * kUpper.com * kUpper.com;
  const double g = kUpper.mass * 9.81 * kUpper.com * std::cos(q);
  EXPECT_NEAR(ddq[0], (tau - g) / inertia, 1e-12);
}

TEST(ForwardDynamics, RoundTripsInverseDynamics) {
  std::mt19937_64 rng(28);
  for (std::size_t dof = 1; dof <= 5; ++dof) {
    for (int trial = 0; trial < 100; ++trial) {
      const KinematicChain chain = random_chain(dof, rng);
      const JointState s{uniform_vector(rng, dof, -pi, pi), uniform_vector(rng, dof, -2, 2)};
      const Eigen::VectorXd ddq = uniform_vector(rng, dof, -5, 5);
      const Eigen::VectorXd tau = inverse_dynamics(chain, s, ddq);
      const Eigen::VectorXd back = forward_dynamics(chain, s, tau, Vector6d::Zero());
      ASSERT_LT((back - ddq).cwiseAbs().maxCoeff(), 1e-9) << "dof " << dof;
    }
  }
}

TEST(ForwardDynamics, ExternalWrenchEntersThroughJacobianTranspose) {
  std::mt19937_64 rng(29);
  const KinematicChain chain = random_chain(3, rng);
  const JointState s{uniform_vector(rng, 3, -pi, pi), Eigen::VectorXd::Zero(3)};
  Vector6d wrench;
  wrench << 1.0, -2.0, 0.5, 0.1, 0.0, -0.2;
  const Eigen::VectorXd tau = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd with = forward_dynamics(chain, s, tau, wrench);
  const Eigen::VectorXd equivalent =
      forward_dynamics(chain, s, geometric_jacobian(chain, s.q).transpose() * wrench, Vector6d::Zero());
  EXPECT_LT((with - equivalent).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ForwardDynamics, NonFiniteTorqueIsNumericalError) {
  const KinematicChain chain = planar_chain({kUpper});
  const JointState s{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(forward_dynamics(chain, s, Eigen::VectorXd::Constant(1, NAN), Vector6d::Zero()), NumericalError);
}

TEST(StepPlant, AtRestWithoutForcesStaysPut) {
  std::mt19937_64 rng(30);
  const KinematicChain chain = random_chain(3, rng);
  const JointState s{uniform_vector(rng, 3, -1, 1), Eigen::VectorXd::Zero(3)};
  const JointState next = step_plant(chain, s, Eigen::VectorXd::Zero(3), Vector6d::Zero(), 1e-3, Eigen::Vector3d::Zero());
  EXPECT_EQ(next.q, s.q);
  EXPECT_EQ(next.dq, s.dq);
}

TEST(StepPlant, PendulumFreeFallMatchesRk4) {
  const KinematicChain chain = planar_chain({kUpper});
  const SinglePendulum oracle{kUpper};
  const double dt = 1e-4;
  JointState s{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  for (int k = 0; k < 10000; ++k)
    s = step_plant(chain, s, Eigen::VectorXd::Zero(1), Vector6d::Zero(), dt, kPlanarGravity);
  EXPECT_NEAR(s.q[0], pendulum_rk4(oracle, 0.0, 1.0, dt), 1e-3);
}

TEST(StepPlant, Rk4OptionAgreesWithReference) {
  const KinematicChain chain = planar_chain({kUpper});
  const SinglePendulum oracle{kUpper};
  const double dt = 1e-3;
  JointState s{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  for (int k = 0; k < 1000; ++k)
    s = step_plant(chain, s, Eigen::VectorXd::Zero(1), Vector6d::Zero(), dt, kPlanarGravity, Integrator::rk4);
  EXPECT_NEAR(s.q[0], pendulum_rk4(oracle, 0.0, 1.0, dt), 1e-9);
}

namespace {

double energy_drift(const KinematicChain& chain, JointState s, double dt, double duration,
                    Integrator integrator = Integrator::semi_implicit_euler) {
  const double e0 = kinetic_energy(chain, s);
  double worst = 0.0;
  const auto steps = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k < steps; ++k) {
    s = step_plant(chain, s, Eigen::VectorXd::Zero(chain.dof()), Vector6d::Zero(), dt, Eigen::Vector3d::Zero(),
                   integrator);
    worst = std::max(worst, std::abs(kinetic_energy(chain, s) - e0) / e0);
  }
  return worst;
}

KinematicChain three_link() { return planar_chain({kUpper, kLower, {0.2, 0.5, 0.1, 0.004}}); }

}  // namespace

TEST(StepPlant, TorqueFreeKineticEnergyIsConserved) {
  // Joint speeds up to 0.3 rad/s, the range the experiments move through.
  const JointState s{Eigen::Vector3d(0.2, -0.5, 0.9), Eigen::Vector3d(0.24, -0.18, 0.3)};
  EXPECT_LT(energy_drift(three_link(), s, 1e-3, 10.0), 1e-3);
}

TEST(StepPlant, EnergyErrorIsFirstOrderInTheStep) {
  const JointState s{Eigen::Vector3d(0.2, -0.5, 0.9), Eigen::Vector3d(0.8, -0.6, 1.0)};
  const double coarse = energy_drift(three_link(), s, 1e-3, 2.0);
  const double fine = energy_drift(three_link(), s, 5e-4, 2.0);
  EXPECT_NEAR(coarse / fine, 2.0, 0.3);
  EXPECT_LT(energy_drift(three_link(), s, 1e-3, 2.0, Integrator::rk4), 1e-6);
}

TEST(StepPlant, NonFiniteStateIsSimulationError) {
  const KinematicChain chain = planar_chain({kUpper});
  const JointState s{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(step_plant(chain, s, Eigen::VectorXd::Constant(1, INFINITY), Vector6d::Zero(), 1e-3), SimulationError);
}
