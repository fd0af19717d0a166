#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "biopsim/teleop/protocol.hpp"
#include "biopsim/teleop/websocket.hpp"
#include "biopsim/trajectory.hpp"

namespace biopsim::teleop {

enum class ClientTransport { line, websocket };

/// Blocking headless client. Not thread-safe.
class TeleopClient {
 public:
  /// Connects (and upgrades for WebSocket). Throws IoError.
  TeleopClient(const std::string& host, std::uint16_t port,
               ClientTransport transport = ClientTransport::line);
  ~TeleopClient();
  TeleopClient(const TeleopClient&) = delete;
  TeleopClient& operator=(const TeleopClient&) = delete;

  /// Attaches the driver token once one is held. Returns the message id.
  std::int64_t send(Command command);
  void send_raw(const std::string& line);

  /// Next server message, or nullopt on timeout. Throws IoError when the
  /// connection closes or a message does not decode.
  std::optional<ServerMessage> receive(std::chrono::milliseconds timeout);
  /// Receives until `match` accepts a message; others are discarded.
  ServerMessage wait_for(const std::function<bool(const ServerMessage&)>& match,
                         std::chrono::milliseconds timeout = std::chrono::seconds(10));

  /// Sends hello and waits for the welcome; keeps the token for a driver.
  Welcome hello(Role role);
  /// Sends a command and waits for its ack or error.
  std::variant<Ack, ErrorReply> request(Command command,
                                        std::chrono::milliseconds timeout = std::chrono::seconds(10));
  /// Steps a paused session and returns the resulting state. Throws IoError
  /// on an error reply.
  StateMessage step(std::uint64_t count = 1);

  const std::optional<std::string>& token() const noexcept { return token_; }
  /// Count of messages received with the gap flag set.
  std::uint64_t gaps() const noexcept { return gaps_; }

 private:
  bool fill(std::chrono::milliseconds timeout);
  std::optional<std::string> take_line();
  void write_all(const std::string& bytes);

  int fd_ = -1;
  ClientTransport transport_;
  std::string in_;
  std::optional<ws::FrameDecoder> decoder_;
  std::int64_t next_id_ = 1;
  std::optional<std::string> token_;
  std::uint64_t gaps_ = 0;
};

/// Pauses and resets an insert-mode session held as driver, then replays
/// the haptic ramp one tick at a time. Returns one record per tick
/// (t = 0 .. steps·dt). Up to `window` ticks of commands are in flight.
std::vector<LogRecord> scripted_insertion(TeleopClient& client, const InsertionProfile& profile,
                                          std::size_t steps, double dt, std::size_t window = 32);

}  // namespace biopsim::teleop
