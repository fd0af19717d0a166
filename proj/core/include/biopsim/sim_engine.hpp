#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "biopsim/control.hpp"
#include "biopsim/dynamics.hpp"
#include "biopsim/insertion_module.hpp"
#include "biopsim/kinematics.hpp"
#include "biopsim/tissue.hpp"
#include "biopsim/trajectory.hpp"

namespace biopsim {

enum class Mode { track, admittance, insert };
enum class Integrator { semi_implicit_euler, rk4 };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& text);

/// Operator wrench active on [start, end).
struct WrenchPulse {
  double start = 0.0;
  double end = 0.0;
  Vector6d wrench = Vector6d::Zero();
};

struct InsertionSetup {
  /// Haptic ramp replayed in insert mode. Without one the target is held at
  /// the last value set through `Simulation::set_haptic_target`.
  std::optional<InsertionProfile> profile;
  double haptic_scale = 1.0;
  /// Enables helical insertion when set (m per revolution).
  std::optional<double> helical_pitch;
  /// Constant spin command used when no helical pitch is configured.
  double spin = 0.0;
  /// Fixed rotation of the insertion axis about the end-effector y axis.
  double pitch_angle = 0.0;
  Transmission transmission;
  ClampRange clamp;
  NeedleSpec needle;
  double sensor_noise_std = 0.0;  // N, zero disables
  int sensor_latency_steps = 0;
};

struct AdmittanceSetup {
  /// Placement while an operator wrench is applied, holding otherwise.
  bool auto_hold = true;
  AdmittanceMode initial_mode = AdmittanceMode::holding;
};

struct Scenario {
  std::string name = "scenario";
  KinematicChain chain;
  Eigen::Vector3d gravity = kStandardGravity;
  Eigen::VectorXd initial_q;
  /// Defaults to J†·ẋ_d(0) in track mode and zero otherwise.
  std::optional<Eigen::VectorXd> initial_dq;
  GainSet gains;
  VirtualImpedance impedance;
  TrajectorySpec trajectory;
  /// Replace trajectory.start with the forward kinematics of initial_q.
  bool trajectory_starts_at_initial_pose = true;
  TissueSample tissue;
  ToolSpec tool;
  InsertionSetup insertion;
  AdmittanceSetup admittance;
  Mode mode = Mode::track;
  Integrator integrator = Integrator::semi_implicit_euler;
  double dt = 1e-3;
  double duration = 1.0;
  std::uint64_t seed = 1;
  std::vector<WrenchPulse> wrench_schedule;
  /// Feed the sensed end-effector wrench forward in the arm torque.
  bool compensate_sensed_wrench = true;

  /// Throws ConfigError for any violated invariant.
  void validate() const;
  /// Number of steps; the run produces steps() + 1 records.
  std::size_t steps() const;
};

namespace event {
inline constexpr std::uint32_t puncture = 1u << 0;
inline constexpr std::uint32_t force_limited = 1u << 1;
inline constexpr std::uint32_t speed_saturated = 1u << 2;
inline constexpr std::uint32_t spin_saturated = 1u << 3;
inline constexpr std::uint32_t damped_inverse = 1u << 4;
inline constexpr std::uint32_t joint_limit = 1u << 5;
inline constexpr std::uint32_t holding = 1u << 6;
}  // namespace event

/// State at t = index·dt together with the command computed from it.
struct LogRecord {
  std::size_t index = 0;
  double t = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd dq;
  Pose pose;
  Pose desired;
  Vector6d task_error = Vector6d::Zero();  // [p̃; φ̃]
  Eigen::VectorXd tau;
  double depth = 0.0;
  double theta = 0.0;
  double velocity = 0.0;
  double force = 0.0;  // sensed F_t
  std::uint32_t events = 0;
  // Not part of the CSV schema.
  double haptic_target = 0.0;
  double delivered_force = 0.0;
  int punctured_layer = -1;
};

/// Semi-implicit Euler (or RK4) step of the arm under joint torque, viscous
/// joint friction and an end-effector wrench. Throws SimulationError when the
/// result is non-finite.
JointState step_plant(const KinematicChain& chain, const JointState& state,
                      const Eigen::VectorXd& tau, const Vector6d& external_wrench, double dt,
                      const Eigen::Vector3d& gravity = kStandardGravity,
                      Integrator integrator = Integrator::semi_implicit_euler);

/// Fixed-step loop wiring trajectory, controllers and plant. Owns all mutable
/// simulation state; not thread-safe.
class Simulation {
 public:
  explicit Simulation(Scenario scenario);

  const Scenario& scenario() const noexcept { return scenario_; }
  const LogRecord& current() const noexcept { return record_; }
  std::size_t tick() const noexcept { return tick_; }
  double time() const noexcept { return static_cast<double>(tick_) * scenario_.dt; }
  Mode mode() const noexcept { return mode_; }
  const InsertionState& insertion_state() const noexcept { return insertion_; }
  const TissueSample& tissue() const noexcept { return tissue_; }
  const AdmittanceState& admittance_state() const noexcept { return admittance_; }
  const JointState& joint_state() const noexcept { return joints_; }

  /// Advance one step and return the new record.
  const LogRecord& step();

  // Commands. Each takes effect from the current tick onward.
  void set_mode(Mode mode);
  /// Moves the desired pose by `delta` on one task axis with a quintic blend.
  void jog(int axis, double delta, double blend_time = 0.5);
  void apply_wrench(const Vector6d& wrench, double duration);
  /// Raw haptic input; multiplied by the configured haptic scale.
  void set_haptic_target(double target);
  void set_gains(const GainSet& gains);
  /// Back to the initial state at t = 0.
  void reset();

 private:
  void evaluate();
  Vector6d operator_wrench(double t) const;
  Eigen::Vector3d insertion_axis(const Pose& ee) const;
  double sense(double true_force);

  Scenario scenario_;
  Mode mode_;
  std::size_t tick_ = 0;
  JointState joints_;
  TrajectorySpec trajectory_;
  double trajectory_origin_ = 0.0;
  AdmittanceState admittance_;
  AdmittanceState admittance_next_;
  AdmittanceMode admittance_mode_ = AdmittanceMode::holding;
  InsertionState insertion_;
  double insertion_origin_ = 0.0;
  std::optional<double> haptic_override_;
  double commanded_velocity_ = 0.0;
  double commanded_spin_ = 0.0;
  TissueSample tissue_;
  std::vector<WrenchPulse> live_wrenches_;
  std::deque<double> sensor_pipeline_;
  std::mt19937_64 rng_;
  Vector6d applied_wrench_ = Vector6d::Zero();
  LogRecord record_;
};

/// Runs the scenario to completion: steps() + 1 records at t = k·dt.
std::vector<LogRecord> run(const Scenario& scenario);

}  // namespace biopsim
