#include "biopsim/sim_engine.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "biopsim/errors.hpp"

namespace biopsim {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::track:
      return "track";
    case Mode::admittance:
      return "admittance";
    case Mode::insert:
      return "insert";
  }
  return "track";
}

Mode mode_from_string(const std::string& text) {
  if (text == "track") return Mode::track;
  if (text == "admittance") return Mode::admittance;
  if (text == "insert") return Mode::insert;
  throw ConfigError("unknown mode '" + text + "' (expected track|admittance|insert)");
}

void Scenario::validate() const {
  if (chain.dof() == 0) throw ConfigError("scenario has no kinematic chain");
  chain.require_dof(initial_q, "initial_q");
  if (!initial_q.allFinite()) throw ConfigError("initial_q must be finite");
  if (initial_dq) {
    chain.require_dof(*initial_dq, "initial_dq");
    if (!initial_dq->allFinite()) throw ConfigError("initial_dq must be finite");
  }
  if (!gravity.allFinite()) throw ConfigError("gravity must be finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
  if (!(duration >= dt) || !std::isfinite(duration))
    throw ConfigError("duration must be >= dt (got duration " + std::to_string(duration) + ")");
  gains.validate(mode != Mode::insert || !gains.kp.isZero(0.0));
  impedance.validate();
  TrajectorySpec probe = trajectory;
  if (trajectory_starts_at_initial_pose) probe.start = Pose{};
  probe.validate();
  tool.validate();
  insertion.transmission.validate();
  if (!(insertion.haptic_scale > 0.0)) throw ConfigError("haptic_scale must be > 0");
  if (insertion.helical_pitch && !(*insertion.helical_pitch > 0.0))
    throw ConfigError("helical_pitch must be > 0");
  if (!(insertion.sensor_noise_std >= 0.0)) throw ConfigError("sensor_noise_std must be >= 0");
  if (insertion.sensor_latency_steps < 0) throw ConfigError("sensor_latency_steps must be >= 0");
  if (mode == Mode::insert) {
    if (tissue.layers().empty()) throw ConfigError("insert mode needs a tissue sample");
    if (const auto r = clamp_check(tool, insertion.clamp); !accepted(r))
      throw ConfigError("tool rejected by clamp: " + std::get<ClampRejected>(r).message);
  }
  for (std::size_t i = 0; i < wrench_schedule.size(); ++i) {
    const auto& a = wrench_schedule[i];
    if (!(a.end > a.start) || !a.wrench.allFinite())
      throw ConfigError("wrench schedule entry " + std::to_string(i) + " is invalid");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& b = wrench_schedule[j];
      const bool overlap = a.start < b.end && b.start < a.end;
      if (!overlap) continue;
      for (int axis = 0; axis < 6; ++axis) {
        if (a.wrench[axis] != 0.0 && b.wrench[axis] != 0.0)
          throw ConfigError("wrench schedule entries " + std::to_string(j) + " and " +
                            std::to_string(i) + " overlap on axis " + std::to_string(axis));
      }
    }
  }
}

std::size_t Scenario::steps() const {
  return static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
}

namespace {

JointState semi_implicit_euler(const KinematicChain& chain, const JointState& s,
                               const Eigen::VectorXd& tau, const Vector6d& wrench, double dt,
                               const Eigen::Vector3d& gravity) {
  Eigen::VectorXd effective = tau;
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    effective[k] -= chain.joints()[i].viscous_friction * s.dq[k];
  }
  const Eigen::VectorXd ddq = forward_dynamics(chain, s, effective, wrench, gravity);
  JointState next;
  next.dq = s.dq + ddq * dt;
  next.q = s.q + next.dq * dt;
  return next;
}

JointState runge_kutta4(const KinematicChain& chain, const JointState& s,
                        const Eigen::VectorXd& tau, const Vector6d& wrench, double dt,
                        const Eigen::Vector3d& gravity) {
  auto accel = [&](const Eigen::VectorXd& q, const Eigen::VectorXd& dq) {
    Eigen::VectorXd effective = tau;
    for (std::size_t i = 0; i < chain.dof(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      effective[k] -= chain.joints()[i].viscous_friction * dq[k];
    }
    return forward_dynamics(chain, JointState{q, dq}, effective, wrench, gravity);
  };
  const Eigen::VectorXd k1q = s.dq;
  const Eigen::VectorXd k1v = accel(s.q, s.dq);
  const Eigen::VectorXd k2q = s.dq + 0.5 * dt * k1v;
  const Eigen::VectorXd k2v = accel(s.q + 0.5 * dt * k1q, k2q);
  const Eigen::VectorXd k3q = s.dq + 0.5 * dt * k2v;
  const Eigen::VectorXd k3v = accel(s.q + 0.5 * dt * k2q, k3q);
  const Eigen::VectorXd k4q = s.dq + dt * k3v;
  const Eigen::VectorXd k4v = accel(s.q + dt * k3q, k4q);
  JointState next;
  next.q = s.q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
  next.dq = s.dq + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  return next;
}

/// Uniform in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

JointState step_plant(const KinematicChain& chain, const JointState& state,
                      const Eigen::VectorXd& tau, const Vector6d& external_wrench, double dt,
                      const Eigen::Vector3d& gravity, Integrator integrator) {
  if (!(dt > 0.0)) throw ConfigError("plant step needs dt > 0");
  JointState next;
  try {
    next = integrator == Integrator::rk4
               ? runge_kutta4(chain, state, tau, external_wrench, dt, gravity)
               : semi_implicit_euler(chain, state, tau, external_wrench, dt, gravity);
  } catch (const NumericalError& e) {
    throw SimulationError(std::string("plant step failed: ") + e.what(), 0);
  }
  if (!next.q.allFinite() || !next.dq.allFinite())
    throw SimulationError("plant step produced a non-finite joint state", 0);
  return next;
}

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  reset();
}

void Simulation::reset() {
  const auto& sc = scenario_;
  mode_ = sc.mode;
  tick_ = 0;
  rng_.seed(sc.seed);
  joints_.q = sc.initial_q;
  joints_.dq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sc.chain.dof()));

  trajectory_ = sc.trajectory;
  const Pose initial_pose = forward_kinematics(sc.chain, joints_.q);
  if (sc.trajectory_starts_at_initial_pose) trajectory_.start = initial_pose;
  trajectory_.validate();
  trajectory_origin_ = 0.0;

  if (sc.initial_dq) {
    joints_.dq = *sc.initial_dq;
  } else if (mode_ == Mode::track) {
    const Vector6d twist = sample(trajectory_, 0.0).state.twist;
    if (!twist.isZero(0.0)) {
      const Jacobian jac = geometric_jacobian(sc.chain, joints_.q);
      const Eigen::VectorXd sv = singular_values(jac);
      const double lambda = effective_damping(sc.gains, sv[sv.size() - 1]);
      joints_.dq = pseudo_inverse(jac, lambda) * twist;
    }
  }

  admittance_ = make_admittance_state(initial_pose);
  admittance_mode_ = sc.admittance.initial_mode;
  admittance_next_ = admittance_;

  insertion_ = InsertionState{};
  insertion_origin_ = 0.0;
  haptic_override_.reset();
  tissue_ = biopsim::reset(sc.tissue);
  live_wrenches_.clear();
  sensor_pipeline_.assign(static_cast<std::size_t>(sc.insertion.sensor_latency_steps), 0.0);
  evaluate();
}

Vector6d Simulation::operator_wrench(double t) const {
  Vector6d w = Vector6d::Zero();
  for (const auto& p : scenario_.wrench_schedule)
    if (p.start <= t && t < p.end) w += p.wrench;
  for (const auto& p : live_wrenches_)
    if (p.start <= t && t < p.end) w += p.wrench;
  return w;
}

Eigen::Vector3d Simulation::insertion_axis(const Pose& ee) const {
  return ee.rotation * axis_rotation(Eigen::Vector3d::UnitY(), scenario_.insertion.pitch_angle) *
         Eigen::Vector3d::UnitZ();
}

double Simulation::sense(double true_force) {
  double reading = true_force;
  if (!sensor_pipeline_.empty()) {
    sensor_pipeline_.push_back(true_force);
    reading = sensor_pipeline_.front();
    sensor_pipeline_.pop_front();
  }
  if (scenario_.insertion.sensor_noise_std > 0.0)
    reading += scenario_.insertion.sensor_noise_std * standard_normal(rng_);
  return reading;
}

void Simulation::evaluate() {
  const auto& sc = scenario_;
  const double t = time();
  const std::uint32_t carried = record_.events & (event::puncture | event::force_limited |
                                                  event::speed_saturated | event::spin_saturated);
  const int carried_layer = record_.punctured_layer;
  const bool keep_step_events = record_.index == tick_ && tick_ > 0;

  LogRecord rec;
  rec.index = tick_;
  rec.t = t;
  rec.q = joints_.q;
  rec.dq = joints_.dq;

  TaskReference reference;
  Vector6d sensed_wrench = Vector6d::Zero();
  applied_wrench_ = operator_wrench(t);

  if (mode_ == Mode::admittance) {
    AdmittanceMode sub = admittance_mode_;
    if (sc.admittance.auto_hold)
      sub = applied_wrench_.isZero(0.0) ? AdmittanceMode::holding : AdmittanceMode::placement;
    if (sub == AdmittanceMode::holding) rec.events |= event::holding;
    admittance_next_ = admittance_step(admittance_, applied_wrench_, sc.impedance, sub, sc.dt);
    reference.pose.pose = admittance_.reference;
    reference.pose.twist = admittance_.velocity;
    reference.acceleration = admittance_next_.acceleration;
    sensed_wrench = applied_wrench_;
  } else {
    const auto s = sample(trajectory_, t - trajectory_origin_);
    reference.pose = s.state;
    reference.acceleration = s.acceleration;
  }

  ComputedTorque ct;
  try {
    ct = computed_torque(sc.chain, joints_, reference, sc.gains, sc.gravity);
  } catch (const NumericalError& e) {
    throw SimulationError(std::string("controller failed: ") + e.what(), tick_ == 0 ? 0 : tick_ - 1);
  }
  if (!ct.tau.allFinite())
    throw SimulationError("controller produced a non-finite torque", tick_ == 0 ? 0 : tick_ - 1);
  if (ct.damped) rec.events |= event::damped_inverse;
  rec.pose = forward_kinematics(sc.chain, joints_.q);
  rec.desired = reference.pose.pose;
  rec.task_error = ct.error.pose_error();
  rec.tau = ct.tau;
  for (std::size_t i = 0; i < sc.chain.dof(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    rec.tau[k] += sc.chain.joints()[i].viscous_friction * joints_.dq[k];
  }

  if (mode_ == Mode::insert) {
    const double raw = haptic_override_ ? *haptic_override_
                       : sc.insertion.profile ? (*sc.insertion.profile)(t - insertion_origin_)
                                              : 0.0;
    rec.haptic_target = sc.insertion.haptic_scale * raw;
    commanded_velocity_ = insertion_control(rec.haptic_target, insertion_.depth,
                                            insertion_.velocity, insertion_.sensed_force, sc.gains);
    if (sc.insertion.helical_pitch) {
      const auto cmd = helical_command(*sc.insertion.helical_pitch, std::abs(commanded_velocity_));
      commanded_spin_ = std::copysign(cmd.spin, commanded_velocity_);
    } else {
      commanded_spin_ = sc.insertion.spin;
    }
    sensed_wrench.head<3>() += insertion_.sensed_force * insertion_axis(rec.pose);
  } else {
    commanded_velocity_ = 0.0;
    commanded_spin_ = 0.0;
  }

  if (sc.compensate_sensed_wrench && !sensed_wrench.isZero(0.0))
    rec.tau -= geometric_jacobian(sc.chain, joints_.q).transpose() * sensed_wrench;

  rec.depth = insertion_.depth;
  rec.theta = insertion_.theta;
  rec.velocity = insertion_.velocity;
  rec.force = insertion_.sensed_force;
  rec.delivered_force = insertion_.delivered_force;
  if (!within_limits(sc.chain, joints_)) rec.events |= event::joint_limit;
  if (keep_step_events) {
    rec.events |= carried;
    rec.punctured_layer = carried_layer;
  }
  record_ = std::move(rec);
}

const LogRecord& Simulation::step() {
  const auto& sc = scenario_;
  Vector6d plant_wrench = applied_wrench_;
  std::uint32_t step_events = 0;
  int punctured_layer = -1;

  if (mode_ == Mode::insert) {
    double tissue_force = 0.0;
    if (insertion_.depth >= 0.0) {
      AxialForce af = axial_force(tissue_, insertion_.depth, commanded_velocity_);
      tissue_force = af.force;
      tissue_ = std::move(af.sample);
      if (af.punctured_layer) {
        step_events |= event::puncture;
        punctured_layer = static_cast<int>(*af.punctured_layer);
      }
    }
    insertion_ = actuate(insertion_, commanded_velocity_, commanded_spin_, tissue_force, sc.dt,
                         sc.tool, sc.insertion.transmission);
    insertion_.sensed_force = sense(tissue_force);
    if (insertion_.force_limited) step_events |= event::force_limited;
    if (insertion_.speed_saturated) step_events |= event::speed_saturated;
    if (insertion_.spin_saturated) step_events |= event::spin_saturated;
    plant_wrench.head<3>() += tissue_force * insertion_axis(record_.pose);
  }

  try {
    joints_ = step_plant(sc.chain, joints_, record_.tau, plant_wrench, sc.dt, sc.gravity,
                         sc.integrator);
  } catch (const SimulationError& e) {
    throw SimulationError(e.what(), tick_);
  }
  if (!std::isfinite(insertion_.depth) || !std::isfinite(insertion_.sensed_force))
    throw SimulationError("insertion state became non-finite", tick_);
  if (mode_ == Mode::admittance) admittance_ = admittance_next_;

  ++tick_;
  record_.events = step_events;
  record_.punctured_layer = punctured_layer;
  record_.index = tick_;
  evaluate();
  return record_;
}

void Simulation::set_mode(Mode mode) {
  const double t = time();
  const TaskState measured = task_state(scenario_.chain, joints_);
  mode_ = mode;
  switch (mode) {
    case Mode::track:
    case Mode::insert:
      trajectory_ = TrajectorySpec{};
      trajectory_.start = measured.pose;
      trajectory_origin_ = t;
      if (mode == Mode::insert) {
        insertion_origin_ = t;
        haptic_override_ = insertion_.depth / scenario_.insertion.haptic_scale;
      }
      break;
    case Mode::admittance:
      admittance_ = make_admittance_state(measured.pose);
      admittance_.velocity = measured.twist;
      admittance_mode_ = scenario_.admittance.initial_mode;
      break;
  }
  evaluate();
}

void Simulation::jog(int axis, double delta, double blend_time) {
  if (axis < 0 || axis > 5) throw ConfigError("jog axis must be in 0..5");
  if (!std::isfinite(delta)) throw ConfigError("jog delta must be finite");
  const double t = time();
  const Pose from = sample(trajectory_, t - trajectory_origin_).state.pose;
  TrajectorySpec move;
  move.kind = TrajectoryKind::point_to_point;
  move.start = from;
  move.goal = from;
  move.duration = blend_time;
  if (axis < 3) {
    move.goal.position[axis] += delta;
  } else {
    move.goal.rotation = axis_rotation(Eigen::Vector3d::Unit(axis - 3), delta) * from.rotation;
  }
  trajectory_ = move;
  trajectory_origin_ = t;
  evaluate();
}

void Simulation::apply_wrench(const Vector6d& wrench, double duration) {
  if (!wrench.allFinite() || !(duration >= 0.0))
    throw ConfigError("apply_wrench needs a finite wrench and duration >= 0");
  const double t = time();
  std::erase_if(live_wrenches_, [t](const WrenchPulse& p) { return p.end <= t; });
  // A new operator wrench replaces whatever the operator was applying.
  for (auto& p : live_wrenches_) p.end = std::min(p.end, t);
  if (duration > 0.0 && !wrench.isZero(0.0)) live_wrenches_.push_back({t, t + duration, wrench});
  evaluate();
}

void Simulation::set_haptic_target(double target) {
  if (!std::isfinite(target)) throw ConfigError("haptic target must be finite");
  haptic_override_ = target;
  evaluate();
}

void Simulation::set_gains(const GainSet& gains) {
  gains.validate(mode_ != Mode::insert || !gains.kp.isZero(0.0));
  scenario_.gains = gains;
  evaluate();
}

std::vector<LogRecord> run(const Scenario& scenario) {
  Simulation sim(scenario);
  const std::size_t n = sim.scenario().steps();
  std::vector<LogRecord> records;
  records.reserve(n + 1);
  records.push_back(sim.current());
  for (std::size_t k = 0; k < n; ++k) records.push_back(sim.step());
  return records;
}

}  // namespace biopsim
