#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "biopsim/sim_engine.hpp"
#include "biopsim/teleop/protocol.hpp"

namespace biopsim::teleop {

/// The service could not start (bad address, port in use).
class StartupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  /// Simulated seconds per wall-clock second; 0 runs unpaced.
  double timescale = 1.0;
  double broadcast_period = 0.02;  // simulated s
  double heartbeat_period = 1.0;   // wall s
  std::size_t outbound_capacity = 1024;
  std::size_t inbound_capacity = 4096;
  double jog_linear_limit = 0.01;  // m
  double jog_angular_limit = 0.1;  // rad
  std::uint64_t max_step_count = 1000000;
  bool start_paused = false;
};

/// "host:port" → (host, port). Throws StartupError.
std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& address);

/// Bounded FIFO of server messages. When full the oldest entry is dropped and
/// the next message handed out carries the gap flag.
class OutboundQueue {
 public:
  explicit OutboundQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(ServerMessage message);
  /// Encoded next message, or an empty string when the queue is empty.
  std::string pop();
  std::size_t size() const noexcept { return items_.size(); }
  std::uint64_t dropped() const noexcept { return dropped_; }

 private:
  std::size_t capacity_;
  std::deque<ServerMessage> items_;
  bool gap_ = false;
  std::uint64_t dropped_ = 0;
};

/// Live simulation session served over TCP. Each connection speaks either
/// line-delimited protocol messages or, when it opens with an HTTP upgrade
/// request, the same messages as WebSocket text frames.
///
/// One thread owns the simulation; a second one does all socket I/O. They
/// exchange commands and outbound messages only through bounded queues.
class TeleopService {
 public:
  TeleopService(Scenario scenario, ServiceOptions options = {});
  ~TeleopService();
  TeleopService(const TeleopService&) = delete;
  TeleopService& operator=(const TeleopService&) = delete;

  /// Binds and starts both threads. Throws StartupError.
  void start();
  /// Bound port, valid after start().
  std::uint16_t port() const noexcept { return port_; }
  /// Asks both threads to finish; safe to call from a signal-driven thread.
  void stop();
  /// Blocks until both threads have finished.
  void wait();
  bool running() const noexcept { return running_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
};

}  // namespace biopsim::teleop
