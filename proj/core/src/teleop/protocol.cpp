#include "biopsim/teleop/protocol.hpp"

#include <nlohmann/json.hpp>

#include "biopsim/errors.hpp"

namespace biopsim::teleop {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const char* role_name(Role r) { return r == Role::driver ? "driver" : "viewer"; }

Role role_from(const std::string& s) {
  if (s == "driver") return Role::driver;
  if (s == "viewer") return Role::viewer;
  throw ProtocolError("bad_field", "role must be driver|viewer, got '" + s + "'");
}

template <class V>
json array_of(const V& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> fixed(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != N)
    throw ProtocolError("bad_field", std::string("'") + key + "' must be an array of " +
                                         std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!a[static_cast<std::size_t>(i)].is_number())
      throw ProtocolError("bad_field", std::string("'") + key + "' must hold numbers");
    v[i] = a[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

double num(const json& j, const char* key) {
  if (!j.contains(key)) throw ProtocolError("missing_field", std::string("missing field '") + key + "'");
  if (!j.at(key).is_number())
    throw ProtocolError("bad_field", std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::optional<std::int64_t> opt_id(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number_integer())
    throw ProtocolError("bad_field", std::string("'") + key + "' must be an integer");
  return j.at(key).get<std::int64_t>();
}

json header(const char* type) { return json{{"v", kProtocolVersion}, {"type", type}}; }

/// Parses the line and checks the version tag; returns the object and its type.
std::pair<json, std::string> open(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError("malformed", std::string("message is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("malformed", "message must be a JSON object");
  if (!j.contains("v")) throw ProtocolError("missing_version", "missing version tag 'v'");
  if (!j.at("v").is_string() || j.at("v").get<std::string>() != kProtocolVersion)
    throw ProtocolError("unsupported_version",
                        "unsupported protocol version " + j.at("v").dump() + " (expected \"v1\")");
  if (!j.contains("type") || !j.at("type").is_string())
    throw ProtocolError("missing_type", "missing message type");
  std::string type = j.at("type").get<std::string>();
  return {std::move(j), std::move(type)};
}

json state_to_json(const SessionState& s) {
  json j{{"t", s.t},
         {"tick", s.tick},
         {"mode", to_string(s.mode)},
         {"paused", s.paused},
         {"position", array_of(s.position)},
         {"orientation", array_of(s.orientation)},
         {"task_error", array_of(s.task_error)},
         {"depth", s.depth},
         {"theta", s.theta},
         {"velocity", s.velocity},
         {"F_t", s.force},
         {"delivered_force", s.delivered_force},
         {"x_h", s.haptic_target},
         {"punctured", s.punctured},
         {"events", s.events},
         {"speed_saturated", (s.events & event::speed_saturated) != 0},
         {"spin_saturated", (s.events & event::spin_saturated) != 0},
         {"force_limited", (s.events & event::force_limited) != 0}};
  if (s.last_command) {
    json echo{{"type", s.last_command->type}};
    if (s.last_command->id) echo["id"] = *s.last_command->id;
    j["last_command"] = echo;
  }
  return j;
}

SessionState state_from_json(const json& j) {
  SessionState s;
  s.t = num(j, "t");
  s.tick = j.at("tick").get<std::uint64_t>();
  try {
    s.mode = mode_from_string(j.at("mode").get<std::string>());
  } catch (const ConfigError& e) {
    throw ProtocolError("bad_field", e.what());
  }
  s.paused = j.value("paused", false);
  s.position = fixed<3>(j, "position");
  s.orientation = fixed<3>(j, "orientation");
  s.task_error = fixed<6>(j, "task_error");
  s.depth = num(j, "depth");
  s.theta = num(j, "theta");
  s.velocity = num(j, "velocity");
  s.force = num(j, "F_t");
  s.delivered_force = num(j, "delivered_force");
  s.haptic_target = num(j, "x_h");
  s.punctured = j.at("punctured").get<std::vector<bool>>();
  s.events = j.at("events").get<std::uint32_t>();
  if (j.contains("last_command")) {
    const auto& e = j.at("last_command");
    s.last_command = CommandEcho{e.at("type").get<std::string>(), opt_id(e, "id")};
  }
  return s;
}

}  // namespace

std::string command_type(const Command& command) {
  return std::visit(overloaded{[](const Hello&) { return "hello"; },
                               [](const SetMode&) { return "set_mode"; },
                               [](const Jog&) { return "jog"; },
                               [](const ApplyWrench&) { return "apply_wrench"; },
                               [](const HapticTarget&) { return "haptic_target"; },
                               [](const SetGains&) { return "set_gains"; },
                               [](const Pause&) { return "pause"; },
                               [](const Resume&) { return "resume"; },
                               [](const Reset&) { return "reset"; },
                               [](const Step&) { return "step"; }},
                    command);
}

std::string encode(const ClientMessage& message) {
  json j = header(command_type(message.command).c_str());
  std::visit(overloaded{[&](const Hello& c) { j["role"] = role_name(c.role); },
                        [&](const SetMode& c) { j["mode"] = to_string(c.mode); },
                        [&](const Jog& c) {
                          j["axis"] = c.axis;
                          j["delta"] = c.delta;
                        },
                        [&](const ApplyWrench& c) {
                          j["wrench"] = array_of(c.wrench);
                          j["duration"] = c.duration;
                        },
                        [&](const HapticTarget& c) { j["x_h"] = c.x_h; },
                        [&](const SetGains& c) {
                          if (c.kp) j["kp"] = array_of(*c.kp);
                          if (c.kd) j["kd"] = array_of(*c.kd);
                          if (c.insertion_kp) j["insertion_kp"] = *c.insertion_kp;
                          if (c.insertion_kd) j["insertion_kd"] = *c.insertion_kd;
                          if (c.insertion_ko) j["insertion_ko"] = *c.insertion_ko;
                          if (c.force_sign) j["force_sign"] = *c.force_sign;
                        },
                        [](const Pause&) {}, [](const Resume&) {}, [](const Reset&) {},
                        [&](const Step& c) { j["count"] = c.count; }},
             message.command);
  if (message.id) j["id"] = *message.id;
  if (message.token) j["token"] = *message.token;
  return j.dump();
}

ClientMessage decode_client(const std::string& line) {
  auto [j, type] = open(line);
  ClientMessage m;
  try {
    if (type == "hello") {
      m.command = Hello{role_from(j.value("role", std::string("viewer")))};
    } else if (type == "set_mode") {
      if (!j.contains("mode") || !j.at("mode").is_string())
        throw ProtocolError("missing_field", "set_mode needs a 'mode' string");
      try {
        m.command = SetMode{mode_from_string(j.at("mode").get<std::string>())};
      } catch (const ConfigError& e) {
        throw ProtocolError("bad_field", e.what());
      }
    } else if (type == "jog") {
      if (!j.contains("axis") || !j.at("axis").is_number_integer())
        throw ProtocolError("missing_field", "jog needs an integer 'axis'");
      m.command = Jog{j.at("axis").get<int>(), num(j, "delta")};
    } else if (type == "apply_wrench") {
      if (!j.contains("wrench")) throw ProtocolError("missing_field", "apply_wrench needs 'wrench'");
      m.command = ApplyWrench{fixed<6>(j, "wrench"), num(j, "duration")};
    } else if (type == "haptic_target") {
      m.command = HapticTarget{num(j, "x_h")};
    } else if (type == "set_gains") {
      SetGains g;
      if (j.contains("kp")) g.kp = fixed<6>(j, "kp");
      if (j.contains("kd")) g.kd = fixed<6>(j, "kd");
      if (j.contains("insertion_kp")) g.insertion_kp = num(j, "insertion_kp");
      if (j.contains("insertion_kd")) g.insertion_kd = num(j, "insertion_kd");
      if (j.contains("insertion_ko")) g.insertion_ko = num(j, "insertion_ko");
      if (j.contains("force_sign")) g.force_sign = num(j, "force_sign");
      m.command = g;
    } else if (type == "pause") {
      m.command = Pause{};
    } else if (type == "resume") {
      m.command = Resume{};
    } else if (type == "reset") {
      m.command = Reset{};
    } else if (type == "step") {
      Step s;
      if (j.contains("count")) {
        if (!j.at("count").is_number_unsigned())
          throw ProtocolError("bad_field", "'count' must be a non-negative integer");
        s.count = j.at("count").get<std::uint64_t>();
      }
      m.command = s;
    } else {
      throw ProtocolError("unknown_type", "unknown message type '" + type + "'");
    }
    m.id = opt_id(j, "id");
    if (j.contains("token")) {
      if (!j.at("token").is_string()) throw ProtocolError("bad_field", "'token' must be a string");
      m.token = j.at("token").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ProtocolError("bad_field", type + ": " + e.what());
  }
  return m;
}

std::string encode(const ServerMessage& message) {
  json j;
  std::visit(overloaded{[&](const Welcome& w) {
                          j = header("welcome");
                          j["session"] = w.session;
                          j["role"] = role_name(w.role);
                          if (w.token) j["token"] = *w.token;
                          j["scenario"] = w.scenario;
                          j["dt"] = w.dt;
                        },
                        [&](const StateMessage& s) {
                          j = header("state");
                          j.update(state_to_json(s.state));
                          if (s.reply_to) j["reply_to"] = *s.reply_to;
                          j["gap"] = s.gap;
                        },
                        [&](const Heartbeat& h) {
                          j = header("heartbeat");
                          j["t"] = h.t;
                          j["wall_ms"] = h.wall_ms;
                          j["seq"] = h.seq;
                        },
                        [&](const Ack& a) {
                          j = header("ack");
                          j["command"] = a.command;
                          if (a.id) j["id"] = *a.id;
                        },
                        [&](const ErrorReply& e) {
                          j = header("error");
                          j["code"] = e.code;
                          j["message"] = e.message;
                          if (e.id) j["id"] = *e.id;
                        }},
             message);
  return j.dump();
}

ServerMessage decode_server(const std::string& line) {
  auto [j, type] = open(line);
  try {
    if (type == "welcome") {
      Welcome w;
      w.session = j.at("session").get<std::uint64_t>();
      w.role = role_from(j.at("role").get<std::string>());
      if (j.contains("token")) w.token = j.at("token").get<std::string>();
      w.scenario = j.at("scenario").get<std::string>();
      w.dt = num(j, "dt");
      return w;
    }
    if (type == "state") {
      StateMessage s;
      s.state = state_from_json(j);
      s.reply_to = opt_id(j, "reply_to");
      s.gap = j.value("gap", false);
      return s;
    }
    if (type == "heartbeat") {
      return Heartbeat{num(j, "t"), j.at("wall_ms").get<std::int64_t>(), j.at("seq").get<std::uint64_t>()};
    }
    if (type == "ack") return Ack{j.at("command").get<std::string>(), opt_id(j, "id")};
    if (type == "error")
      return ErrorReply{j.at("code").get<std::string>(), j.at("message").get<std::string>(),
                        opt_id(j, "id")};
  } catch (const json::exception& e) {
    throw ProtocolError("bad_field", type + ": " + e.what());
  }
  throw ProtocolError("unknown_type", "unknown message type '" + type + "'");
}

SessionState snapshot(const Simulation& sim, bool paused, std::optional<CommandEcho> last_command) {
  const LogRecord& r = sim.current();
  SessionState s;
  s.t = r.t;
  s.tick = sim.tick();
  s.mode = sim.mode();
  s.paused = paused;
  s.position = r.pose.position;
  s.orientation = so3_log(r.pose.rotation);
  s.task_error = r.task_error;
  s.depth = r.depth;
  s.theta = r.theta;
  s.velocity = r.velocity;
  s.force = r.force;
  s.delivered_force = r.delivered_force;
  s.haptic_target = r.haptic_target;
  s.punctured = sim.tissue().punctured();
  s.events = r.events;
  s.last_command = std::move(last_command);
  return s;
}

LogRecord to_record(const SessionState& s) {
  LogRecord r;
  r.index = s.tick;
  r.t = s.t;
  r.pose.position = s.position;
  r.pose.rotation = so3_exp(s.orientation);
  r.task_error = s.task_error;
  r.depth = s.depth;
  r.theta = s.theta;
  r.velocity = s.velocity;
  r.force = s.force;
  r.delivered_force = s.delivered_force;
  r.haptic_target = s.haptic_target;
  r.events = s.events;
  return r;
}

}  // namespace biopsim::teleop
