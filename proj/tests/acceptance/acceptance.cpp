// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "biopsim/control.hpp"
#include "biopsim/defaults.hpp"
#include "biopsim/dynamics.hpp"
#include "biopsim/experiments.hpp"
#include "biopsim/log_csv.hpp"
#include "biopsim/metrics.hpp"
#include "biopsim/teleop/client.hpp"
#include "biopsim/teleop/protocol.hpp"
#include "biopsim/teleop/service.hpp"
#include "chains.hpp"
#include "oracles.hpp"

using namespace biopsim;
using namespace biopsim::testing;
using std::numbers::pi;

namespace {

// Tolerances.
constexpr double kTrackingRuntimeLimit = 60.0;   // s
constexpr double kInsertionRuntimeLimit = 30.0;  // s
constexpr double kForceLimit = 10.0;             // N
constexpr double kOracleTolerance = 1e-9;
constexpr double kRoundTripTolerance = 1e-9;
constexpr double kJacobianTolerance = 1e-6;
constexpr int kOracleStates = 200;
constexpr int kSpdConfigurations = 1000;
constexpr double kEnergyDriftLimit = 1e-3;  // relative, over 10 s
constexpr double kDecayEnvelope = 0.02;     // of the initial error
constexpr double kAdmittanceEnvelope = 0.01;  // of the peak response

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

double worst_metric(const MetricsReport& r, const std::vector<std::string>& names) {
  double worst = -INFINITY;
  for (const auto& m : r.metrics)
    if (std::find(names.begin(), names.end(), m.name) != names.end()) worst = std::max(worst, m.value);
  return worst;
}

std::string failing(const MetricsReport& r) {
  std::string out;
  for (const auto& m : r.metrics)
    if (!passes(m)) out += " " + m.scenario + "/" + m.name + "=" + format_double(m.value);
  return out;
}

Outcome tracking() {
  const auto t0 = Clock::now();
  const auto config = default_experiment_config();
  const MetricsReport report = experiment_tracking(config);
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = report.passed() && elapsed < kTrackingRuntimeLimit;
  for (const auto& s : tracking_scenarios(config))
    o.pass = o.pass && s.dt == 1e-3 && s.duration >= 3 * s.trajectory.period &&
             s.trajectory.amplitude == 0.05;
  o.detail = "max mean|e| " + fmt("%.3g", worst_metric(report, {"mean_abs_error_x", "mean_abs_error_y", "mean_abs_error_z"})) + " m (< 1e-3), max std " +
             fmt("%.3g", worst_metric(report, {"error_std_x", "error_std_y", "error_std_z"})) + " m (< 3e-3), runtime " + fmt("%.1f", elapsed) +
             " s (< 60)" + failing(report);
  return o;
}

Outcome insertion() {
  const auto t0 = Clock::now();
  const MetricsReport report = experiment_insertion(default_experiment_config());
  const double elapsed = seconds_since(t0);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& m : report.metrics)
    if (m.name == "skin_puncture_depth") {
      lo = std::min(lo, m.value);
      hi = std::max(hi, m.value);
    }
  Outcome o;
  o.pass = report.passed() && elapsed < kInsertionRuntimeLimit;
  o.detail = "8 runs, max tracking error " + fmt("%.3g", worst_metric(report, {"tracking_error_percent"})) +
             "% (< 2), skin puncture " + fmt("%.3g", lo * 1e3) + ".." + fmt("%.3g", hi * 1e3) +
             " mm (2 +/- 0.5), one drop per layer, runtime " + fmt("%.1f", elapsed) + " s (< 30)" + failing(report);
  return o;
}

Outcome force_limit() {
  const auto config = default_experiment_config();
  std::vector<Scenario> scenarios = tracking_scenarios(config);
  scenarios.push_back(admittance_scenario(config));
  for (auto& s : insertion_scenarios(config)) scenarios.push_back(s);
  // A wall that never punctures: the module has to stall at its limit.
  Scenario stress = insertion_scenarios(config).front();
  stress.name = "stress-stiff-wall";
  stress.tissue = TissueSample("wall", {TissueLayer{"wall", 0.02, 5000.0, 0.0, 50.0, 0.0, 0.0}});
  stress.gains.insertion_ko = 0.0;
  scenarios.push_back(stress);

  const auto logs = run_all(scenarios, true);
  std::size_t steps = 0, violations = 0;
  double peak = 0.0;
  bool stress_limited = false;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    for (const auto& r : logs[i]) {
      ++steps;
      peak = std::max(peak, r.delivered_force);
      if (!(r.delivered_force <= scenarios[i].tool.max_insertion_force)) ++violations;
      if (scenarios[i].tool.max_insertion_force != kForceLimit) ++violations;
      if (i + 1 == scenarios.size() && (r.events & event::force_limited)) stress_limited = true;
    }
  }
  Outcome o;
  o.pass = violations == 0 && stress_limited;
  o.detail = std::to_string(scenarios.size()) + " scenarios, " + std::to_string(steps) + " steps, peak delivered " +
             fmt("%.6g", peak) + " N (<= 10), violations " + std::to_string(violations) +
             (stress_limited ? ", stiff wall saturates" : ", stiff wall never saturated");
  return o;
}

/// Largest relative change of kinetic energy over 10 s of torque-free,
/// gravity-free motion at dt = 1e-3 with the simulator's plant step.
double energy_drift(const KinematicChain& chain, JointState s) {
  const double e0 = kinetic_energy(chain, s);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    s = step_plant(chain, s, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(chain.dof())), Vector6d::Zero(), 1e-3,
                   Eigen::Vector3d::Zero());
    worst = std::max(worst, std::abs(kinetic_energy(chain, s) - e0) / e0);
  }
  return worst;
}

Outcome dynamics_oracles() {
  const Eigen::Vector3d g(0.0, -9.81, 0.0);
  const PlanarLink upper{0.3, 1.2, 0.14, 0.012};
  const PlanarLink lower{0.25, 0.7, 0.11, 0.006};
  std::mt19937_64 rng(2024);

  double rnea = 0.0;
  const SinglePendulum single{upper};
  const DoublePendulum dbl{upper, lower};
  const KinematicChain one = planar_chain({upper}, 0.004);
  const KinematicChain two = planar_chain({upper, lower}, 0.004);
  for (int k = 0; k < kOracleStates; ++k) {
    const double q = uniform(rng, -pi, pi), dq = uniform(rng, -5, 5), ddq = uniform(rng, -10, 10);
    const auto tau = inverse_dynamics(one, {Eigen::VectorXd::Constant(1, q), Eigen::VectorXd::Constant(1, dq)},
                                      Eigen::VectorXd::Constant(1, ddq), g);
    rnea = std::max(rnea, std::abs(tau[0] - single.torque(q, ddq)));
    const Eigen::Vector2d q2 = uniform_vector(rng, 2, -pi, pi);
    const Eigen::Vector2d dq2 = uniform_vector(rng, 2, -5, 5);
    const Eigen::Vector2d ddq2 = uniform_vector(rng, 2, -10, 10);
    const Eigen::VectorXd tau2 = inverse_dynamics(two, {q2, dq2}, ddq2, g);
    rnea = std::max(rnea, (tau2 - dbl.torque(q2, dq2, ddq2)).cwiseAbs().maxCoeff());
  }

  double round_trip = 0.0, jacobian = 0.0;
  for (std::size_t dof = 1; dof <= 6; ++dof) {
    for (int k = 0; k < 50; ++k) {
      const KinematicChain chain = random_chain(dof, rng);
      const JointState s{uniform_vector(rng, dof, -pi, pi), uniform_vector(rng, dof, -2, 2)};
      const Eigen::VectorXd ddq = uniform_vector(rng, dof, -5, 5);
      const Eigen::VectorXd back =
          forward_dynamics(chain, s, inverse_dynamics(chain, s, ddq), Vector6d::Zero());
      round_trip = std::max(round_trip, (back - ddq).cwiseAbs().maxCoeff());
      jacobian = std::max(jacobian, (geometric_jacobian(chain, s.q) - finite_difference_jacobian(chain, s.q))
                                        .cwiseAbs()
                                        .maxCoeff());
    }
  }

  const KinematicChain arm = approximate_youbot_arm();
  double min_eig = INFINITY, asym = 0.0;
  for (int k = 0; k < kSpdConfigurations; ++k) {
    Eigen::VectorXd q(arm.dof());
    for (std::size_t j = 0; j < arm.dof(); ++j)
      q[static_cast<Eigen::Index>(j)] = uniform(rng, arm.joints()[j].lower_limit, arm.joints()[j].upper_limit);
    const auto m = dynamics_terms(arm, {q, Eigen::VectorXd::Zero(arm.dof())}).mass_matrix;
    asym = std::max(asym, (m - m.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff());
  }

  // Torque-free, gravity-free coast from the fastest state each arm
  // experiment reaches, so the check covers the speeds the simulator runs at.
  const auto config = default_experiment_config();
  std::vector<Scenario> envelope = tracking_scenarios(config);
  envelope.push_back(admittance_scenario(config));
  const auto logs = run_all(envelope, true);
  double drift = 0.0, fastest = 0.0;
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    const auto& log = logs[i];
    const auto peak = std::max_element(log.begin(), log.end(), [](const LogRecord& a, const LogRecord& b) {
      return a.dq.norm() < b.dq.norm();
    });
    fastest = std::max(fastest, peak->dq.norm());
    drift = std::max(drift, energy_drift(envelope[i].chain, {peak->q, peak->dq}));
  }
  // Reported only: a planar chain spinning at about 1 rad/s per joint.
  const KinematicChain three = planar_chain({upper, lower, {0.2, 0.5, 0.1, 0.004}});
  const double fast_drift =
      energy_drift(three, {Eigen::Vector3d(0.2, -0.5, 0.9), Eigen::Vector3d(0.8, -0.6, 1.0)});

  Outcome o;
  o.pass = rnea < kOracleTolerance && round_trip < kRoundTripTolerance && jacobian < kJacobianTolerance &&
           asym == 0.0 && min_eig > 0.0 && drift < kEnergyDriftLimit;
  o.detail = "RNEA vs Lagrangian " + fmt("%.2g", rnea) + " (< 1e-9, " + std::to_string(kOracleStates) +
             " states x 2 chains), FD/ID round trip " + fmt("%.2g", round_trip) + ", Jacobian vs FD " +
             fmt("%.2g", jacobian) + " (< 1e-6), M SPD at " + std::to_string(kSpdConfigurations) +
             " configs (min eig " + fmt("%.3g", min_eig) + "), energy drift " + fmt("%.2g", drift * 100) +
             "% over 10 s from experiment states up to |dq| " + fmt("%.2g", fastest) +
             " rad/s (< 0.1%; info: " + fmt("%.2g", fast_drift * 100) + "% at ~1 rad/s per joint)";
  return o;
}

Outcome controller() {
  const KinematicChain chain =
      planar_chain({{0.3, 1.0, 0.15, 0.01}, {0.25, 0.8, 0.12, 0.006}, {0.15, 0.4, 0.07, 0.002}});
  const Eigen::Vector3d g(0, -9.81, 0);
  const double dt = 1e-3, e0 = 0.01;
  double decay = 0.0;
  for (const auto& [kp, kd] : {std::pair{400.0, 40.0}, std::pair{100.0, 8.0}, std::pair{225.0, 45.0}}) {
    GainSet gains;
    gains.kp.setConstant(kp);
    gains.kd.setConstant(kd);
    JointState s{Eigen::Vector3d(0.4, 0.9, -0.6), Eigen::Vector3d::Zero()};
    TaskReference ref;
    ref.pose = task_state(chain, s);
    ref.pose.pose.position.x() += e0;
    const SecondOrder oracle{1.0, kd, kp};
    for (int k = 0; k <= 3000; ++k) {
      const ComputedTorque ct = computed_torque(chain, s, ref, gains, g);
      decay = std::max(decay, std::abs(ct.error.position.x() - oracle.position(e0, 0.0, 0.0, k * dt)) / e0);
      s = step_plant(chain, s, ct.tau, Vector6d::Zero(), dt, g);
    }
  }

  double admittance = 0.0;
  for (const double b : {16.0, 40.0, 120.0}) {  // under-, critically, over-damped with m = 1, k = 400
    for (int axis = 0; axis < 6; ++axis) {
      VirtualImpedance imp;
      imp.mass.setConstant(1.0);
      imp.damping.setConstant(b);
      imp.stiffness.setConstant(400.0);
      const double force = axis < 3 ? 2.0 : 0.2;
      Vector6d f = Vector6d::Zero();
      f[axis] = force;
      const SecondOrder oracle{1.0, b, 400.0};
      AdmittanceState st = make_admittance_state(Pose{});
      double worst = 0.0, peak = 0.0;
      for (int k = 1; k <= 2000; ++k) {
        st = admittance_step(st, f, imp, AdmittanceMode::holding, dt);
        const double expected = oracle.position(0.0, 0.0, force, k * dt);
        worst = std::max(worst, std::abs(admittance_displacement(st)[axis] - expected));
        peak = std::max(peak, std::abs(expected));
      }
      admittance = std::max(admittance, worst / peak);
    }
  }

  GainSet lg;
  lg.insertion_kp = 32.0;
  lg.insertion_kd = 0.5;
  lg.insertion_ko = 0x1p-13;
  bool linear = true;
  std::mt19937_64 rng(6);
  for (int k = 0; k < 1000; ++k) {
    // Dyadic inputs on a coarse grid keep every product and sum exact.
    auto dyadic = [&] { return std::ldexp(std::round(uniform(rng, -64, 64)), -12); };
    const double a[4] = {dyadic(), dyadic(), dyadic(), dyadic()};
    const double c[4] = {dyadic(), dyadic(), dyadic(), dyadic()};
    const double ua = insertion_control(a[0], a[1], a[2], a[3], lg);
    const double uc = insertion_control(c[0], c[1], c[2], c[3], lg);
    linear = linear && insertion_control(a[0] + c[0], a[1] + c[1], a[2] + c[2], a[3] + c[3], lg) == ua + uc &&
             insertion_control(2 * a[0], 2 * a[1], 2 * a[2], 2 * a[3], lg) == 2 * ua;
  }

  bool equilibrium = true;
  for (std::size_t dof = 1; dof <= 6; ++dof) {
    for (int k = 0; k < 20; ++k) {
      const KinematicChain c = random_chain(dof, rng);
      const JointState s{uniform_vector(rng, dof, -pi, pi), Eigen::VectorXd::Zero(dof)};
      TaskReference ref;
      ref.pose = task_state(c, s);
      equilibrium = equilibrium && computed_torque(c, s, ref, GainSet{}).tau == dynamics_terms(c, s).gravity;
    }
  }

  Outcome o;
  o.pass = decay < kDecayEnvelope && admittance < kAdmittanceEnvelope && linear && equilibrium;
  o.detail = "decay envelope " + fmt("%.3g", decay * 100) + "% (< 2, 3 gain sets), admittance " +
             fmt("%.3g", admittance * 100) + "% (< 1, 3 damping regimes x 6 axes), linearity " +
             (linear ? "exact" : "BROKEN") + ", equilibrium tau == g " + (equilibrium ? "exact" : "BROKEN");
  return o;
}

Outcome determinism() {
  const auto config = default_experiment_config();
  std::vector<Scenario> scenarios = tracking_scenarios(config);
  scenarios.push_back(admittance_scenario(config));
  for (auto& s : insertion_scenarios(config)) scenarios.push_back(s);
  Scenario noisy = insertion_scenarios(config).back();
  noisy.name = "noisy";
  noisy.insertion.sensor_noise_std = 0.05;
  noisy.seed = 77;
  scenarios.push_back(noisy);

  const auto first = run_all(scenarios, true);
  const auto second = run_all(scenarios, true);
  std::size_t identical = 0;
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const std::string a = log_csv(first[i]);
    bytes += a.size();
    if (a == log_csv(second[i])) ++identical;
  }
  Outcome o;
  o.pass = identical == scenarios.size();
  o.detail = std::to_string(identical) + "/" + std::to_string(scenarios.size()) +
             " scenarios byte-identical across two runs (" + std::to_string(bytes / 1024) + " KiB of CSV)";
  return o;
}

Outcome teleop_round_trip() {
  using namespace biopsim::teleop;
  std::mt19937_64 rng(11);
  auto u = [&](double lo, double hi) { return uniform(rng, lo, hi); };
  std::size_t checked = 0, lossless = 0;
  for (int k = 0; k < 200; ++k) {
    Vector6d w = uniform_vector(rng, 6, -5, 5);
    SetGains gains;
    gains.kp = uniform_vector(rng, 6, 0, 500);
    gains.kd = uniform_vector(rng, 6, 0, 50);
    gains.insertion_kp = u(0, 100);
    gains.insertion_kd = u(0, 1);
    gains.insertion_ko = u(0, 1e-3);
    gains.force_sign = k % 2 ? 1.0 : -1.0;
    const std::vector<Command> commands{Hello{k % 2 ? Role::driver : Role::viewer},
                                        SetMode{static_cast<Mode>(k % 3)},
                                        Jog{k % 6, u(-0.01, 0.01)},
                                        ApplyWrench{w, u(0, 2)},
                                        HapticTarget{u(0, 0.01)},
                                        gains,
                                        SetGains{},
                                        Pause{},
                                        Resume{},
                                        Reset{},
                                        Step{static_cast<std::uint64_t>(k)}};
    for (const auto& c : commands) {
      const ClientMessage m{c, k, k % 2 ? std::optional<std::string>("t0k") : std::nullopt};
      ++checked;
      if (decode_client(encode(m)) == m) ++lossless;
    }
    SessionState st;
    st.t = u(0, 100);
    st.tick = static_cast<std::uint64_t>(k) * 997;
    st.mode = static_cast<Mode>(k % 3);
    st.paused = k % 2;
    st.position = uniform_vector(rng, 3, -1, 1);
    st.orientation = uniform_vector(rng, 3, -3, 3);
    st.task_error = uniform_vector(rng, 6, -1e-3, 1e-3);
    st.depth = u(0, 0.01);
    st.theta = u(-10, 10);
    st.velocity = u(-0.01, 0.01);
    st.force = u(-10, 0);
    st.delivered_force = u(0, 10);
    st.haptic_target = u(0, 0.01);
    st.punctured = {k % 2 == 0, k % 3 == 0};
    st.events = static_cast<std::uint32_t>(k) & 0x7f;
    if (k % 2) st.last_command = CommandEcho{"jog", k};
    const std::vector<ServerMessage> messages{
        Welcome{static_cast<std::uint64_t>(k), Role::driver, std::string("abc"), "s", 1e-3},
        StateMessage{st, k % 2 ? std::optional<std::int64_t>(k) : std::nullopt, k % 3 == 0},
        Heartbeat{u(0, 100), 1700000000000 + k, static_cast<std::uint64_t>(k)},
        Ack{"jog", k},
        ErrorReply{"wrong_mode", "nope", std::nullopt}};
    for (const auto& m : messages) {
      ++checked;
      if (decode_server(encode(m)) == m) ++lossless;
    }
  }

  // Every insertion scenario through the live service, driven tick by tick.
  const auto config = default_experiment_config();
  const auto scenarios = insertion_scenarios(config);
  std::vector<std::vector<LogRecord>> remote;
  std::size_t identical = 0;
  for (const auto& s : scenarios) {
    ServiceOptions options;
    options.port = 0;
    options.timescale = 0.0;
    options.start_paused = true;
    TeleopService service(s, options);
    service.start();
    TeleopClient client("127.0.0.1", service.port());
    client.hello(Role::driver);
    remote.push_back(scripted_insertion(client, *s.insertion.profile, s.steps(), s.dt));
    service.stop();
    service.wait();
  }
  const auto local = run_all(scenarios, true);
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    bool same = remote[i].size() == local[i].size();
    for (std::size_t k = 0; same && k < local[i].size(); ++k)
      same = remote[i][k].depth == local[i][k].depth && remote[i][k].force == local[i][k].force &&
             remote[i][k].delivered_force == local[i][k].delivered_force &&
             remote[i][k].events == local[i][k].events;
    if (same) ++identical;
  }
  const MetricsReport report = insertion_report(scenarios, remote, config);

  Outcome o;
  o.pass = lossless == checked && report.passed() && identical == scenarios.size();
  o.detail = std::to_string(lossless) + "/" + std::to_string(checked) +
             " messages lossless; scripted client: insertion gates " + (report.passed() ? "pass" : "FAIL") +
             " on " + std::to_string(scenarios.size()) + " scenarios, " + std::to_string(identical) +
             " identical to the offline run, max tracking error " +
             fmt("%.3g", worst_metric(report, {"tracking_error_percent"})) + "%" + failing(report);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"tracking experiment", tracking},
      {"insertion experiment", insertion},
      {"insertion force limit", force_limit},
      {"dynamics oracle suite", dynamics_oracles},
      {"controller property suite", controller},
      {"determinism", determinism},
      {"teleop protocol and scripted client", teleop_round_trip},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
