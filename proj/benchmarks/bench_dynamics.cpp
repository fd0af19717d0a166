#include <benchmark/benchmark.h>

#include "biopsim/control.hpp"
#include "biopsim/defaults.hpp"
#include "biopsim/dynamics.hpp"
#include "biopsim/kinematics.hpp"

using namespace biopsim;

namespace {

JointState moving_state(const KinematicChain& chain) {
  JointState s{youbot_working_configuration(), Eigen::VectorXd::Constant(chain.dof(), 0.3)};
  return s;
}

void BM_InverseDynamics(benchmark::State& state) {
  const auto chain = approximate_youbot_arm();
  const auto js = moving_state(chain);
  const Eigen::VectorXd ddq = Eigen::VectorXd::Constant(chain.dof(), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(inverse_dynamics(chain, js, ddq));
}
BENCHMARK(BM_InverseDynamics);

void BM_DynamicsTerms(benchmark::State& state) {
  const auto chain = approximate_youbot_arm();
  const auto js = moving_state(chain);
  for (auto _ : state) benchmark::DoNotOptimize(dynamics_terms(chain, js));
}
BENCHMARK(BM_DynamicsTerms);

void BM_ForwardDynamics(benchmark::State& state) {
  const auto chain = approximate_youbot_arm();
  const auto js = moving_state(chain);
  const Eigen::VectorXd tau = Eigen::VectorXd::Zero(chain.dof());
  for (auto _ : state) benchmark::DoNotOptimize(forward_dynamics(chain, js, tau, Vector6d::Zero()));
}
BENCHMARK(BM_ForwardDynamics);

void BM_JacobianAndDerivative(benchmark::State& state) {
  const auto chain = approximate_youbot_arm();
  const auto js = moving_state(chain);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometric_jacobian(chain, js.q));
    benchmark::DoNotOptimize(jacobian_time_derivative(chain, js));
  }
}
BENCHMARK(BM_JacobianAndDerivative);

void BM_ComputedTorque(benchmark::State& state) {
  const auto chain = approximate_youbot_arm();
  const auto js = moving_state(chain);
  TaskReference ref;
  ref.pose = task_state(chain, js);
  ref.pose.pose.position.x() += 1e-3;
  const GainSet gains;
  for (auto _ : state) benchmark::DoNotOptimize(computed_torque(chain, js, ref, gains));
}
BENCHMARK(BM_ComputedTorque);

}  // namespace
