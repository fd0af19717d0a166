#include "biopsim/config.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "biopsim/errors.hpp"

namespace biopsim {

using nlohmann::json;

namespace {

template <int N>
Eigen::Matrix<double, N, 1> fixed_vector(const json& j, const char* key) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N))
    throw ConfigError(std::string("'") + key + "' must be an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number())
      throw ConfigError(std::string("'") + key + "' must contain numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Eigen::VectorXd dynamic_vector(const json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string("'") + key + "' must contain numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json to_array(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

/// Scalar or 6-vector.
Vector6d six(const json& j, const char* key, const Vector6d& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return Vector6d::Constant(v.get<double>());
  return fixed_vector<6>(v, key);
}

Eigen::Matrix3d rotation_from_json(const json& j) {
  if (j.is_null()) return Eigen::Matrix3d::Identity();
  if (j.is_array()) return so3_exp(fixed_vector<3>(j, "rotation"));
  if (!j.is_object() || !j.contains("axis"))
    throw ConfigError("'rotation' must be a rotation vector or {axis, angle}");
  const Eigen::Vector3d axis = fixed_vector<3>(j.at("axis"), "axis");
  if (!(axis.norm() > 0.0)) throw ConfigError("rotation axis must be non-zero");
  return axis_rotation(axis.normalized(), number(j, "angle", 0.0));
}

Eigen::Matrix3d inertia_from_json(const json& j) {
  if (j.is_array() && j.size() == 3 && j[0].is_array()) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) m.row(r) = fixed_vector<3>(j[static_cast<std::size_t>(r)], "inertia").transpose();
    return m;
  }
  const auto v = fixed_vector<6>(j, "inertia");  // ixx iyy izz ixy ixz iyz
  Eigen::Matrix3d m;
  m << v[0], v[3], v[4],
       v[3], v[1], v[5],
       v[4], v[5], v[2];
  return m;
}

TissueLayer layer_from_json(const json& j) {
  TissueLayer l;
  l.name = j.value("name", std::string("layer"));
  l.thickness = number(j, "thickness", 0.0);
  l.stiffness_k = number(j, "stiffness_k", 0.0);
  l.stiffness_a = number(j, "stiffness_a", 0.0);
  l.friction_mu = number(j, "friction_mu", 0.0);
  l.cutting_f = number(j, "cutting_f", 0.0);
  if (j.contains("puncture_force")) {
    l.puncture_force = number(j, "puncture_force", 0.0);
  } else if (j.contains("puncture_depth")) {
    l.puncture_force = l.elastic(number(j, "puncture_depth", 0.0));
  }
  return l;
}

json layer_to_json(const TissueLayer& l) {
  return {{"name", l.name},           {"thickness", l.thickness},
          {"stiffness_k", l.stiffness_k}, {"stiffness_a", l.stiffness_a},
          {"puncture_force", l.puncture_force}, {"friction_mu", l.friction_mu},
          {"cutting_f", l.cutting_f}};
}

const char* kind_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::sine:
      return "sine";
    case TrajectoryKind::point_to_point:
      return "point_to_point";
    case TrajectoryKind::hold:
      break;
  }
  return "hold";
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

Pose pose_from_json(const json& j) {
  Pose p;
  if (j.contains("translation")) p.position = fixed_vector<3>(j.at("translation"), "translation");
  if (j.contains("position")) p.position = fixed_vector<3>(j.at("position"), "position");
  if (j.contains("rotation")) p.rotation = rotation_from_json(j.at("rotation"));
  return p;
}

json pose_to_json(const Pose& pose) {
  return {{"position", to_array(pose.position)}, {"rotation", to_array(so3_log(pose.rotation))}};
}

KinematicChain chain_from_json(const json& j) {
  if (!j.is_object() || !j.contains("joints") || !j.at("joints").is_array())
    throw ConfigError("chain config needs a 'joints' array");
  std::vector<RevoluteJoint> joints;
  std::vector<LinkInertia> links;
  for (const auto& jj : j.at("joints")) {
    RevoluteJoint joint;
    joint.name = jj.value("name", "joint" + std::to_string(joints.size() + 1));
    const Eigen::Vector3d axis = fixed_vector<3>(jj.at("axis"), "axis");
    if (!(axis.norm() > 0.0)) throw ConfigError("joint axis must be non-zero");
    joint.axis = axis.normalized();
    if (jj.contains("offset")) joint.offset = pose_from_json(jj.at("offset"));
    if (jj.contains("limits")) {
      const auto lim = fixed_vector<2>(jj.at("limits"), "limits");
      joint.lower_limit = lim[0];
      joint.upper_limit = lim[1];
    }
    joint.viscous_friction = number(jj, "viscous_friction", 0.0);

    if (!jj.contains("link")) throw ConfigError("joint '" + joint.name + "' has no 'link'");
    const auto& lj = jj.at("link");
    LinkInertia link;
    link.mass = number(lj, "mass", 0.0);
    if (lj.contains("com")) link.com = fixed_vector<3>(lj.at("com"), "com");
    if (lj.contains("inertia")) link.inertia = inertia_from_json(lj.at("inertia"));
    joints.push_back(std::move(joint));
    links.push_back(link);
  }
  Pose tip;
  if (j.contains("tip")) tip = pose_from_json(j.at("tip"));
  return KinematicChain(std::move(joints), std::move(links), tip);
}

json chain_to_json(const KinematicChain& chain) {
  json joints = json::array();
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto& jt = chain.joints()[i];
    const auto& l = chain.links()[i];
    json inertia = json::array();
    for (int r = 0; r < 3; ++r) inertia.push_back(to_array(l.inertia.row(r).transpose()));
    joints.push_back({{"name", jt.name},
                      {"axis", to_array(jt.axis)},
                      {"offset", {{"translation", to_array(jt.offset.position)},
                                  {"rotation", to_array(so3_log(jt.offset.rotation))}}},
                      {"limits", {jt.lower_limit, jt.upper_limit}},
                      {"viscous_friction", jt.viscous_friction},
                      {"link", {{"mass", l.mass}, {"com", to_array(l.com)}, {"inertia", inertia}}}});
  }
  return {{"joints", joints},
          {"tip", {{"translation", to_array(chain.tip().position)},
                   {"rotation", to_array(so3_log(chain.tip().rotation))}}}};
}

KinematicChain load_chain(const std::filesystem::path& path) {
  return chain_from_json(read_json_file(path));
}

GainSet gains_from_json(const json& j, GainSet base) {
  if (!j.is_object()) throw ConfigError("'gains' must be an object");
  base.kp = six(j, "kp", base.kp);
  base.kd = six(j, "kd", base.kd);
  base.insertion_kp = number(j, "insertion_kp", base.insertion_kp);
  base.insertion_kd = number(j, "insertion_kd", base.insertion_kd);
  base.insertion_ko = number(j, "insertion_ko", base.insertion_ko);
  base.force_sign = number(j, "force_sign", base.force_sign);
  base.damping_lambda = number(j, "damping_lambda", base.damping_lambda);
  base.singular_threshold = number(j, "singular_threshold", base.singular_threshold);
  base.validate(false);
  return base;
}

json gains_to_json(const GainSet& g) {
  return {{"kp", to_array(g.kp)},
          {"kd", to_array(g.kd)},
          {"insertion_kp", g.insertion_kp},
          {"insertion_kd", g.insertion_kd},
          {"insertion_ko", g.insertion_ko},
          {"force_sign", g.force_sign},
          {"damping_lambda", g.damping_lambda},
          {"singular_threshold", g.singular_threshold}};
}

VirtualImpedance impedance_from_json(const json& j, VirtualImpedance base) {
  base.mass = six(j, "mass", base.mass);
  base.damping = six(j, "damping", base.damping);
  base.stiffness = six(j, "stiffness", base.stiffness);
  base.validate();
  return base;
}

TissueSample tissue_from_json(const json& j) {
  if (j.contains("setup")) {
    const int setup = j.at("setup").get<int>();
    if (setup < 1 || setup > 4) throw ConfigError("tissue setup must be 1..4");
    return standard_samples()[static_cast<std::size_t>(setup - 1)];
  }
  if (!j.contains("layers") || !j.at("layers").is_array())
    throw ConfigError("tissue needs 'setup' or a 'layers' array");
  std::vector<TissueLayer> layers;
  for (const auto& lj : j.at("layers")) layers.push_back(layer_from_json(lj));
  return TissueSample(j.value("name", std::string("custom")), std::move(layers));
}

ToolSpec tool_from_json(const json& j, ToolSpec base) {
  base.diameter = number(j, "diameter", base.diameter);
  base.min_clamp = number(j, "min_clamp", base.min_clamp);
  base.max_clamp = number(j, "max_clamp", base.max_clamp);
  base.max_insertion_force = number(j, "max_insertion_force", base.max_insertion_force);
  base.max_speed = number(j, "max_speed", base.max_speed);
  base.max_spin = number(j, "max_spin", base.max_spin);
  base.validate();
  return base;
}

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  try {
    Scenario s;
    s.name = j.value("name", std::string("scenario"));
    if (!j.contains("chain")) throw ConfigError("scenario needs a 'chain'");
    const auto& cj = j.at("chain");
    s.chain = cj.is_string() ? load_chain(base_dir / cj.get<std::string>()) : chain_from_json(cj);

    if (j.contains("gravity")) s.gravity = fixed_vector<3>(j.at("gravity"), "gravity");
    s.initial_q = j.contains("initial_q")
                      ? dynamic_vector(j.at("initial_q"), "initial_q")
                      : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.chain.dof()));
    if (j.contains("initial_dq")) s.initial_dq = dynamic_vector(j.at("initial_dq"), "initial_dq");
    if (j.contains("gains")) s.gains = gains_from_json(j.at("gains"));
    if (j.contains("impedance")) s.impedance = impedance_from_json(j.at("impedance"));

    if (j.contains("trajectory")) {
      const auto& tj = j.at("trajectory");
      const std::string kind = tj.value("kind", std::string("hold"));
      if (kind == "sine") {
        s.trajectory.kind = TrajectoryKind::sine;
      } else if (kind == "point_to_point") {
        s.trajectory.kind = TrajectoryKind::point_to_point;
      } else if (kind == "hold") {
        s.trajectory.kind = TrajectoryKind::hold;
      } else {
        throw ConfigError("unknown trajectory kind '" + kind + "'");
      }
      s.trajectory.axis = tj.value("axis", 0);
      s.trajectory.amplitude = number(tj, "amplitude", s.trajectory.amplitude);
      s.trajectory.period = number(tj, "period", s.trajectory.period);
      s.trajectory.duration = number(tj, "duration", s.trajectory.duration);
      if (tj.contains("start")) {
        s.trajectory.start = pose_from_json(tj.at("start"));
        s.trajectory_starts_at_initial_pose = false;
      }
      if (tj.contains("goal")) s.trajectory.goal = pose_from_json(tj.at("goal"));
    }

    if (j.contains("tissue")) s.tissue = tissue_from_json(j.at("tissue"));
    if (j.contains("tool")) s.tool = tool_from_json(j.at("tool"));

    if (j.contains("insertion")) {
      const auto& ij = j.at("insertion");
      auto& ins = s.insertion;
      if (ij.contains("profile")) {
        const auto& pj = ij.at("profile");
        ins.profile = InsertionProfile(number(pj, "speed", 0.0), number(pj, "depth", 0.0));
      }
      ins.haptic_scale = number(ij, "haptic_scale", ins.haptic_scale);
      if (ij.contains("helical_pitch") && !ij.at("helical_pitch").is_null())
        ins.helical_pitch = number(ij, "helical_pitch", 0.0);
      ins.spin = number(ij, "spin", ins.spin);
      ins.pitch_angle = number(ij, "pitch_angle", ins.pitch_angle);
      if (ij.contains("transmission")) {
        const auto& tj = ij.at("transmission");
        ins.transmission.roller_radius = number(tj, "roller_radius", ins.transmission.roller_radius);
        ins.transmission.m2_ratio = number(tj, "m2_ratio", ins.transmission.m2_ratio);
        ins.transmission.m1_ratio = number(tj, "m1_ratio", ins.transmission.m1_ratio);
        ins.transmission.slip_per_newton = number(tj, "slip_per_newton", ins.transmission.slip_per_newton);
      }
      if (ij.contains("clamp_range")) {
        const auto r = fixed_vector<2>(ij.at("clamp_range"), "clamp_range");
        ins.clamp = {r[0], r[1]};
      }
      ins.sensor_noise_std = number(ij, "sensor_noise_std", ins.sensor_noise_std);
      ins.sensor_latency_steps = ij.value("sensor_latency_steps", ins.sensor_latency_steps);
    }

    if (j.contains("admittance")) {
      const auto& aj = j.at("admittance");
      s.admittance.auto_hold = aj.value("auto_hold", s.admittance.auto_hold);
      const std::string m = aj.value("initial_mode", std::string("holding"));
      if (m != "holding" && m != "placement") throw ConfigError("admittance initial_mode must be holding|placement");
      s.admittance.initial_mode = m == "holding" ? AdmittanceMode::holding : AdmittanceMode::placement;
    }

    s.mode = mode_from_string(j.value("mode", std::string("track")));
    const std::string integ = j.value("integrator", std::string("semi_implicit_euler"));
    if (integ == "rk4") {
      s.integrator = Integrator::rk4;
    } else if (integ == "semi_implicit_euler") {
      s.integrator = Integrator::semi_implicit_euler;
    } else {
      throw ConfigError("unknown integrator '" + integ + "'");
    }
    s.dt = number(j, "dt", s.dt);
    s.duration = number(j, "duration", s.duration);
    s.seed = j.value("seed", s.seed);
    s.compensate_sensed_wrench = j.value("compensate_sensed_wrench", s.compensate_sensed_wrench);

    if (j.contains("wrench_schedule")) {
      for (const auto& wj : j.at("wrench_schedule")) {
        WrenchPulse p;
        p.start = number(wj, "start", 0.0);
        p.end = number(wj, "end", 0.0);
        p.wrench = fixed_vector<6>(wj.at("wrench"), "wrench");
        s.wrench_schedule.push_back(p);
      }
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["chain"] = chain_to_json(s.chain);
  j["gravity"] = to_array(s.gravity);
  j["initial_q"] = to_array(s.initial_q);
  if (s.initial_dq) j["initial_dq"] = to_array(*s.initial_dq);
  j["gains"] = gains_to_json(s.gains);
  j["impedance"] = {{"mass", to_array(s.impedance.mass)},
                    {"damping", to_array(s.impedance.damping)},
                    {"stiffness", to_array(s.impedance.stiffness)}};
  json tj = {{"kind", kind_name(s.trajectory.kind)},
             {"axis", s.trajectory.axis},
             {"amplitude", s.trajectory.amplitude},
             {"period", s.trajectory.period},
             {"duration", s.trajectory.duration},
             {"goal", pose_to_json(s.trajectory.goal)}};
  if (!s.trajectory_starts_at_initial_pose) tj["start"] = pose_to_json(s.trajectory.start);
  j["trajectory"] = tj;
  if (!s.tissue.layers().empty()) {
    json layers = json::array();
    for (const auto& l : s.tissue.layers()) layers.push_back(layer_to_json(l));
    j["tissue"] = {{"name", s.tissue.name()}, {"layers", layers}};
  }
  j["tool"] = {{"diameter", s.tool.diameter},
               {"min_clamp", s.tool.min_clamp},
               {"max_clamp", s.tool.max_clamp},
               {"max_insertion_force", s.tool.max_insertion_force},
               {"max_speed", s.tool.max_speed},
               {"max_spin", s.tool.max_spin}};
  const auto& ins = s.insertion;
  json ij = {{"haptic_scale", ins.haptic_scale},
             {"spin", ins.spin},
             {"pitch_angle", ins.pitch_angle},
             {"transmission", {{"roller_radius", ins.transmission.roller_radius},
                               {"m2_ratio", ins.transmission.m2_ratio},
                               {"m1_ratio", ins.transmission.m1_ratio},
                               {"slip_per_newton", ins.transmission.slip_per_newton}}},
             {"clamp_range", {ins.clamp.min, ins.clamp.max}},
             {"sensor_noise_std", ins.sensor_noise_std},
             {"sensor_latency_steps", ins.sensor_latency_steps}};
  if (ins.profile) ij["profile"] = {{"speed", ins.profile->speed()}, {"depth", ins.profile->depth()}};
  if (ins.helical_pitch) ij["helical_pitch"] = *ins.helical_pitch;
  j["insertion"] = ij;
  j["admittance"] = {{"auto_hold", s.admittance.auto_hold},
                     {"initial_mode", s.admittance.initial_mode == AdmittanceMode::holding ? "holding" : "placement"}};
  j["mode"] = to_string(s.mode);
  j["integrator"] = s.integrator == Integrator::rk4 ? "rk4" : "semi_implicit_euler";
  j["dt"] = s.dt;
  j["duration"] = s.duration;
  j["seed"] = s.seed;
  j["compensate_sensed_wrench"] = s.compensate_sensed_wrench;
  json sched = json::array();
  for (const auto& p : s.wrench_schedule)
    sched.push_back({{"start", p.start}, {"end", p.end}, {"wrench", to_array(p.wrench)}});
  j["wrench_schedule"] = sched;
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path), path.parent_path());
}

}  // namespace biopsim
