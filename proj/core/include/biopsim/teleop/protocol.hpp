#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "biopsim/geometry.hpp"
#include "biopsim/sim_engine.hpp"

namespace biopsim::teleop {

// Protocol v1: one JSON object per line, with "v": "v1" and a "type" tag.
// Unknown fields are ignored. See docs/protocol.md.

inline constexpr const char* kProtocolVersion = "v1";

/// Malformed or unsupported message. `code` is a stable machine-readable tag.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

enum class Role { driver, viewer };

struct Hello {
  Role role = Role::viewer;
  bool operator==(const Hello&) const = default;
};
struct SetMode {
  Mode mode = Mode::track;
  bool operator==(const SetMode&) const = default;
};
struct Jog {
  int axis = 0;
  double delta = 0.0;  // m or rad
  bool operator==(const Jog&) const = default;
};
struct ApplyWrench {
  Vector6d wrench = Vector6d::Zero();
  double duration = 0.0;
  bool operator==(const ApplyWrench&) const = default;
};
struct HapticTarget {
  double x_h = 0.0;
  bool operator==(const HapticTarget&) const = default;
};
/// Partial gain update; absent fields keep their current value.
struct SetGains {
  std::optional<Vector6d> kp;
  std::optional<Vector6d> kd;
  std::optional<double> insertion_kp;
  std::optional<double> insertion_kd;
  std::optional<double> insertion_ko;
  std::optional<double> force_sign;
  bool operator==(const SetGains&) const = default;
};
struct Pause {
  bool operator==(const Pause&) const = default;
};
struct Resume {
  bool operator==(const Resume&) const = default;
};
struct Reset {
  bool operator==(const Reset&) const = default;
};
/// Advance `count` ticks while paused and reply with the resulting state.
/// count = 0 returns the current state.
struct Step {
  std::uint64_t count = 1;
  bool operator==(const Step&) const = default;
};

using Command = std::variant<Hello, SetMode, Jog, ApplyWrench, HapticTarget, SetGains, Pause,
                             Resume, Reset, Step>;

struct ClientMessage {
  Command command;
  std::optional<std::int64_t> id;
  std::optional<std::string> token;
  bool operator==(const ClientMessage&) const = default;
};

struct CommandEcho {
  std::string type;
  std::optional<std::int64_t> id;
  bool operator==(const CommandEcho&) const = default;
};

struct SessionState {
  double t = 0.0;
  std::uint64_t tick = 0;
  Mode mode = Mode::track;
  bool paused = false;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d orientation = Eigen::Vector3d::Zero();  // rotation vector
  Vector6d task_error = Vector6d::Zero();
  double depth = 0.0;
  double theta = 0.0;
  double velocity = 0.0;
  double force = 0.0;  // sensed F_t
  double delivered_force = 0.0;
  double haptic_target = 0.0;
  std::vector<bool> punctured;
  std::uint32_t events = 0;
  std::optional<CommandEcho> last_command;
  bool operator==(const SessionState&) const = default;
};

struct Welcome {
  std::uint64_t session = 0;
  Role role = Role::viewer;
  std::optional<std::string> token;
  std::string scenario;
  double dt = 0.0;
  bool operator==(const Welcome&) const = default;
};
struct StateMessage {
  SessionState state;
  /// Id of the step command this state answers, if any.
  std::optional<std::int64_t> reply_to;
  /// Set when older messages to this client were dropped.
  bool gap = false;
  bool operator==(const StateMessage&) const = default;
};
struct Heartbeat {
  double t = 0.0;
  std::int64_t wall_ms = 0;
  std::uint64_t seq = 0;
  bool operator==(const Heartbeat&) const = default;
};
struct Ack {
  std::string command;
  std::optional<std::int64_t> id;
  bool operator==(const Ack&) const = default;
};
struct ErrorReply {
  std::string code;
  std::string message;
  std::optional<std::int64_t> id;
  bool operator==(const ErrorReply&) const = default;
};

using ServerMessage = std::variant<Welcome, StateMessage, Heartbeat, Ack, ErrorReply>;

/// Wire name of a command ("set_mode", "jog", ...).
std::string command_type(const Command& command);

/// Single-line JSON text without a trailing newline.
std::string encode(const ClientMessage& message);
std::string encode(const ServerMessage& message);

/// Throw ProtocolError on malformed input, a missing or unsupported version
/// tag, or an unknown type (the message names the type).
ClientMessage decode_client(const std::string& line);
ServerMessage decode_server(const std::string& line);

/// Snapshot of a running simulation.
SessionState snapshot(const Simulation& sim, bool paused, std::optional<CommandEcho> last_command);

/// Log-record view of a state message, for reusing the run metrics.
LogRecord to_record(const SessionState& state);

}  // namespace biopsim::teleop
