#include "biopsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <random>
#include <string>

#include "biopsim/config.hpp"
#include "biopsim/defaults.hpp"
#include "biopsim/errors.hpp"
#include "biopsim/log_csv.hpp"

namespace biopsim {

namespace {

constexpr const char* kAxisNames[] = {"x", "y", "z"};

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Time rounded to the nearest multiple of dt.
double on_grid(double t, double dt) {
  return static_cast<double>(std::llround(t / dt)) * dt;
}

std::size_t index_of(double t, double dt) {
  return static_cast<std::size_t>(std::llround(t / dt));
}

std::string speed_label(double speed) {
  const double mm = speed * 1e3;
  std::string s = format_double(mm);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s + "mmps";
}

void write_artifacts(const ExperimentConfig& config, const Scenario& scenario,
                     const std::vector<LogRecord>& log) {
  if (!config.out_dir) return;
  std::filesystem::create_directories(*config.out_dir);
  const auto base = *config.out_dir / scenario.name;
  {
    std::ofstream out(base.string() + ".csv", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + base.string() + ".csv");
    write_log_csv(out, log);
    if (!out) throw IoError("failed writing " + base.string() + ".csv");
  }
  std::ofstream out(base.string() + ".scenario.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + base.string() + ".scenario.json");
  out << scenario_to_json(scenario).dump(2) << '\n';
}

std::vector<int> axes_from_json(const nlohmann::json& j, const char* key) {
  std::vector<int> axes;
  for (const auto& a : j.at(key)) {
    const int axis = a.get<int>();
    if (axis < 0 || axis > 2) throw ConfigError(std::string(key) + " entries must be 0..2");
    axes.push_back(axis);
  }
  if (axes.empty()) throw ConfigError(std::string(key) + " must not be empty");
  return axes;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.base.name = "base";
  c.base.chain = approximate_youbot_arm();
  c.base.initial_q = youbot_working_configuration();
  return c;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir,
                                             ExperimentConfig c) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  try {
    auto num = [](const nlohmann::json& o, const char* key, double fallback) {
      if (!o.contains(key)) return fallback;
      if (!o.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
      return o.at(key).get<double>();
    };
    auto& b = c.base;
    if (j.contains("chain")) {
      const auto& cj = j.at("chain");
      b.chain = cj.is_string() ? load_chain(base_dir / cj.get<std::string>()) : chain_from_json(cj);
      if (!j.contains("initial_q"))
        b.initial_q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.chain.dof()));
    }
    if (j.contains("initial_q")) {
      const auto v = j.at("initial_q").get<std::vector<double>>();
      b.initial_q = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (j.contains("gravity")) {
      const auto v = j.at("gravity").get<std::vector<double>>();
      if (v.size() != 3) throw ConfigError("'gravity' must have 3 entries");
      b.gravity = {v[0], v[1], v[2]};
    }
    if (j.contains("gains")) b.gains = gains_from_json(j.at("gains"), b.gains);
    if (j.contains("impedance")) b.impedance = impedance_from_json(j.at("impedance"), b.impedance);
    if (j.contains("tool")) b.tool = tool_from_json(j.at("tool"), b.tool);
    b.dt = num(j, "dt", b.dt);
    c.seed = j.value("seed", c.seed);
    c.parallel = j.value("parallel", c.parallel);

    if (j.contains("tracking")) {
      const auto& t = j.at("tracking");
      c.tracking.amplitude = num(t, "amplitude", c.tracking.amplitude);
      c.tracking.period = num(t, "period", c.tracking.period);
      c.tracking.periods = num(t, "periods", c.tracking.periods);
      if (t.contains("axes")) c.tracking.axes = axes_from_json(t, "axes");
      c.tracking.mean_gate = num(t, "mean_gate", c.tracking.mean_gate);
      c.tracking.std_gate_fraction = num(t, "std_gate_fraction", c.tracking.std_gate_fraction);
    }
    if (j.contains("admittance")) {
      const auto& a = j.at("admittance");
      auto& e = c.admittance;
      e.push_force = num(a, "push_force", e.push_force);
      e.force_jitter = num(a, "force_jitter", e.force_jitter);
      e.push_min = num(a, "push_min", e.push_min);
      e.push_max = num(a, "push_max", e.push_max);
      e.hold = num(a, "hold", e.hold);
      e.lead_in = num(a, "lead_in", e.lead_in);
      if (a.contains("axes")) e.axes = axes_from_json(a, "axes");
      e.drift_gate = num(a, "drift_gate", e.drift_gate);
      e.retain_gate = num(a, "retain_gate", e.retain_gate);
    }
    if (j.contains("insertion")) {
      const auto& i = j.at("insertion");
      auto& e = c.insertion;
      if (i.contains("speeds")) e.speeds = i.at("speeds").get<std::vector<double>>();
      e.depth = num(i, "depth", e.depth);
      e.settle = num(i, "settle", e.settle);
      e.error_gate_percent = num(i, "error_gate_percent", e.error_gate_percent);
      e.puncture_depth = num(i, "puncture_depth", e.puncture_depth);
      e.puncture_tolerance = num(i, "puncture_tolerance", e.puncture_tolerance);
      e.drop.absolute = num(i, "drop_absolute", e.drop.absolute);
      e.drop.relative = num(i, "drop_relative", e.drop.relative);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }

  const auto& t = c.tracking;
  if (!(t.amplitude > 0.0) || !(t.period > 0.0) || !(t.periods > 0.0))
    throw ConfigError("tracking amplitude, period and periods must be > 0");
  const auto& a = c.admittance;
  if (!(a.push_min > 0.0) || a.push_max < a.push_min || !(a.hold > 0.0) || a.lead_in < 0.0 ||
      a.force_jitter < 0.0 || !(a.push_force > a.force_jitter))
    throw ConfigError("admittance experiment timing or force is invalid");
  const auto& i = c.insertion;
  if (i.speeds.empty() || !(i.depth > 0.0) || i.settle < 0.0)
    throw ConfigError("insertion experiment needs speeds, depth > 0 and settle >= 0");
  for (double s : i.speeds)
    if (!(s > 0.0)) throw ConfigError("insertion speeds must be > 0");
  return c;
}

std::vector<std::vector<LogRecord>> run_all(const std::vector<Scenario>& scenarios, bool parallel) {
  std::vector<std::vector<LogRecord>> logs(scenarios.size());
  if (!parallel || scenarios.size() < 2) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) logs[i] = run(scenarios[i]);
    return logs;
  }
  std::vector<std::future<std::vector<LogRecord>>> jobs;
  jobs.reserve(scenarios.size());
  for (const auto& s : scenarios)
    jobs.push_back(std::async(std::launch::async, [&s] { return run(s); }));
  for (std::size_t i = 0; i < jobs.size(); ++i) logs[i] = jobs[i].get();
  return logs;
}

std::vector<Scenario> tracking_scenarios(const ExperimentConfig& config) {
  const auto& e = config.tracking;
  std::vector<Scenario> out;
  for (int axis : e.axes) {
    Scenario s = config.base;
    s.name = std::string("tracking-") + kAxisNames[axis];
    s.mode = Mode::track;
    s.trajectory = TrajectorySpec{};
    s.trajectory.kind = TrajectoryKind::sine;
    s.trajectory.axis = axis;
    s.trajectory.amplitude = e.amplitude;
    s.trajectory.period = e.period;
    s.trajectory_starts_at_initial_pose = true;
    s.initial_dq.reset();
    s.duration = on_grid(e.periods * e.period, s.dt);
    s.seed = config.seed;
    s.wrench_schedule.clear();
    out.push_back(std::move(s));
  }
  return out;
}

MetricsReport tracking_report(const std::vector<Scenario>& scenarios,
                              const std::vector<std::vector<LogRecord>>& logs,
                              const ExperimentConfig& config) {
  const auto& e = config.tracking;
  MetricsReport report;
  report.experiment = "tracking";
  const double std_gate = e.std_gate_fraction * e.amplitude;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto stats = tracking_stats(logs[i]);
    const auto& name = scenarios[i].name;
    for (int a = 0; a < 3; ++a) {
      const std::string ax = kAxisNames[a];
      report.add(name, "mean_abs_error_" + ax, stats.mean_abs[a], "m", GateOp::less, e.mean_gate);
      report.add(name, "error_std_" + ax, stats.std_dev[a], "m", GateOp::less, std_gate);
      report.add(name, "error_std_percent_" + ax, 100.0 * stats.std_dev[a] / e.amplitude, "%");
      report.add(name, "error_sem_" + ax, stats.std_error[a], "m");
      report.add(name, "max_abs_error_" + ax, stats.max_abs[a], "m");
    }
    report.add(name, "samples", static_cast<double>(stats.samples), "count");
  }
  return report;
}

MetricsReport experiment_tracking(const ExperimentConfig& config) {
  const auto scenarios = tracking_scenarios(config);
  const auto logs = run_all(scenarios, config.parallel);
  for (std::size_t i = 0; i < scenarios.size(); ++i) write_artifacts(config, scenarios[i], logs[i]);
  return tracking_report(scenarios, logs, config);
}

Scenario admittance_scenario(const ExperimentConfig& config) {
  const auto& e = config.admittance;
  Scenario s = config.base;
  s.name = "admittance";
  s.mode = Mode::admittance;
  s.trajectory = TrajectorySpec{};
  s.initial_dq.reset();
  s.seed = config.seed;
  s.admittance.auto_hold = true;
  s.admittance.initial_mode = AdmittanceMode::holding;
  s.wrench_schedule.clear();

  std::mt19937_64 rng(config.seed);
  std::vector<int> axes = e.axes;
  for (std::size_t i = axes.size(); i > 1; --i) {
    const auto k = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(i));
    std::swap(axes[i - 1], axes[k]);
  }
  double t = on_grid(e.lead_in, s.dt);
  for (int axis : axes) {
    const double sign = unit_uniform(rng) < 0.5 ? 1.0 : -1.0;
    const double magnitude = e.push_force + e.force_jitter * (2.0 * unit_uniform(rng) - 1.0);
    // Out and back along the same axis keeps the arm near its working pose.
    for (double direction : {sign, -sign}) {
      const double length =
          std::max(s.dt, on_grid(e.push_min + (e.push_max - e.push_min) * unit_uniform(rng), s.dt));
      WrenchPulse p;
      p.start = t;
      p.end = t + length;
      p.wrench[axis] = direction * magnitude;
      s.wrench_schedule.push_back(p);
      t = on_grid(p.end + e.hold, s.dt);
    }
  }
  s.duration = t;
  return s;
}

MetricsReport admittance_report(const Scenario& scenario, const std::vector<LogRecord>& log,
                                const ExperimentConfig& config) {
  const auto& e = config.admittance;
  MetricsReport report;
  report.experiment = "admittance";
  const auto& pulses = scenario.wrench_schedule;
  const std::size_t last = log.size() - 1;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const auto& p = pulses[i];
    int axis = 0;
    for (int a = 0; a < 3; ++a)
      if (p.wrench[a] != 0.0) axis = a;
    const double sign = p.wrench[axis] > 0.0 ? 1.0 : -1.0;
    const std::size_t start = std::min(index_of(p.start, scenario.dt), last);
    const std::size_t release = std::min(index_of(p.end, scenario.dt), last);
    const std::size_t hold_end =
        i + 1 < pulses.size() ? std::min(index_of(pulses[i + 1].start, scenario.dt), last) : last;
    const std::string seg = "push" + std::to_string(i + 1) + "-" + kAxisNames[axis] +
                            (sign > 0.0 ? "+" : "-");
    report.add(seg, "push_force", std::abs(p.wrench[axis]), "N");
    report.add(seg, "push_displacement", sign * displacement(log, {start, release}, axis), "m",
               GateOp::greater, 0.0);
    report.add(seg, "hold_drift", max_drift(log, {release, hold_end}), "m", GateOp::less,
               e.drift_gate);
    report.add(seg, "hold_return_offset",
               (log[hold_end].pose.position - log[release].pose.position).norm(), "m",
               GateOp::less, e.retain_gate);
  }
  const double net = (log.back().pose.position - log.front().pose.position).norm();
  report.add("admittance", "net_displacement", net, "m");
  return report;
}

MetricsReport experiment_admittance(const ExperimentConfig& config) {
  const Scenario s = admittance_scenario(config);
  const auto log = run(s);
  write_artifacts(config, s, log);
  return admittance_report(s, log, config);
}

std::vector<Scenario> insertion_scenarios(const ExperimentConfig& config) {
  const auto& e = config.insertion;
  std::vector<Scenario> out;
  for (const auto& tissue : standard_samples()) {
    for (double speed : e.speeds) {
      Scenario s = config.base;
      s.name = "insertion-" + tissue.name() + "-" + speed_label(speed);
      s.mode = Mode::insert;
      s.trajectory = TrajectorySpec{};
      s.trajectory_starts_at_initial_pose = true;
      s.initial_dq.reset();
      s.tissue = tissue;
      s.insertion.profile = InsertionProfile(speed, e.depth);
      s.duration = on_grid(e.depth / speed + e.settle, s.dt);
      s.seed = config.seed;
      s.wrench_schedule.clear();
      out.push_back(std::move(s));
    }
  }
  return out;
}

MetricsReport insertion_report(const std::vector<Scenario>& scenarios,
                               const std::vector<std::vector<LogRecord>>& logs,
                               const ExperimentConfig& config) {
  const auto& e = config.insertion;
  MetricsReport report;
  report.experiment = "insertion";
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& s = scenarios[i];
    const auto& log = logs[i];
    const auto stats = insertion_stats(log, e.drop);
    const double commanded = s.insertion.profile ? s.insertion.profile->depth() * s.insertion.haptic_scale
                                                 : e.depth;
    const auto layers = static_cast<double>(s.tissue.layers().size());
    std::size_t over_limit = 0;
    for (const auto& r : log)
      if (r.delivered_force > s.tool.max_insertion_force) ++over_limit;
    std::size_t unflagged = 0;
    for (const auto& d : stats.drops)
      if (!d.flagged) ++unflagged;

    report.add(s.name, "tracking_error_percent", 100.0 * stats.max_tracking_error / commanded, "%",
               GateOp::less, e.error_gate_percent);
    report.add(s.name, "max_tracking_error", stats.max_tracking_error, "m");
    // -1 marks a run in which no drop was found; it fails the window gate.
    report.add(s.name, "skin_puncture_depth", stats.drops.empty() ? -1.0 : stats.drops.front().depth,
               "m", GateOp::between, e.puncture_depth - e.puncture_tolerance,
               e.puncture_depth + e.puncture_tolerance);
    for (std::size_t d = 1; d < stats.drops.size(); ++d)
      report.add(s.name, "puncture_depth_" + std::to_string(d + 1), stats.drops[d].depth, "m");
    report.add(s.name, "force_drops", static_cast<double>(stats.drops.size()), "count", GateOp::equal,
               layers);
    report.add(s.name, "puncture_events", static_cast<double>(stats.puncture_events), "count",
               GateOp::equal, layers);
    report.add(s.name, "unflagged_drops", static_cast<double>(unflagged), "count", GateOp::equal, 0.0);
    report.add(s.name, "peak_force", stats.peak_force, "N");
    report.add(s.name, "peak_delivered_force", stats.peak_delivered_force, "N", GateOp::less_equal,
               s.tool.max_insertion_force);
    report.add(s.name, "force_limit_violations", static_cast<double>(over_limit), "count",
               GateOp::equal, 0.0);
    report.add(s.name, "final_depth", stats.final_depth, "m");
  }
  return report;
}

MetricsReport experiment_insertion(const ExperimentConfig& config) {
  const auto scenarios = insertion_scenarios(config);
  const auto logs = run_all(scenarios, config.parallel);
  for (std::size_t i = 0; i < scenarios.size(); ++i) write_artifacts(config, scenarios[i], logs[i]);
  return insertion_report(scenarios, logs, config);
}

}  // namespace biopsim
