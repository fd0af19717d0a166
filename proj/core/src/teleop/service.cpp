#include "biopsim/teleop/service.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "biopsim/errors.hpp"
#include "biopsim/teleop/websocket.hpp"

namespace biopsim::teleop {

using Clock = std::chrono::steady_clock;

std::pair<std::string, std::uint16_t> parse_bind_address(const std::string& address) {
  const std::size_t colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw StartupError("bind address must look like host:port, got '" + address + "'");
  const std::string host = address.substr(0, colon);
  const std::string port_text = address.substr(colon + 1);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw StartupError("bad port '" + port_text + "'");
  }
  if (port > 65535) throw StartupError("port out of range: " + port_text);
  return {host, static_cast<std::uint16_t>(port)};
}

void OutboundQueue::push(ServerMessage message) {
  if (items_.size() >= capacity_) {
    items_.pop_front();
    ++dropped_;
    gap_ = true;
  }
  items_.push_back(std::move(message));
}

std::string OutboundQueue::pop() {
  if (items_.empty()) return {};
  ServerMessage m = std::move(items_.front());
  items_.pop_front();
  if (!gap_) return encode(m);
  gap_ = false;
  if (auto* s = std::get_if<StateMessage>(&m)) {
    s->gap = true;
    return encode(m);
  }
  std::string line = encode(m);
  line.insert(line.size() - 1, ",\"gap\":true");
  return line;
}

namespace {

enum class Transport { unknown, line, websocket };

struct Connection {
  int fd = -1;
  std::uint64_t session = 0;
  Transport transport = Transport::unknown;
  std::string in;
  std::string out;
  std::optional<ws::FrameDecoder> decoder;
  bool closing = false;
};

struct Inbound {
  std::uint64_t session = 0;
  std::optional<ClientMessage> message;  // empty: the session disconnected
};

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::string random_token() {
  std::random_device rd;
  std::uint64_t v = (std::uint64_t(rd()) << 32) ^ rd();
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (int i = 0; i < 16; ++i, v >>= 4) s += kHex[v & 15];
  return s;
}

constexpr std::size_t kMaxPendingBytes = 1 << 20;
constexpr std::size_t kMaxLineBytes = 1 << 16;
constexpr std::size_t kStepsPerSlice = 50;

}  // namespace

struct TeleopService::Impl {
  Scenario scenario;
  ServiceOptions options;
  int listen_fd = -1;
  int wake_read = -1;
  int wake_write = -1;
  std::atomic<bool> stop{false};
  std::atomic<bool> wake_pending{false};
  std::thread sim_thread;
  std::thread io_thread;

  // Shared between the two threads.
  std::mutex hub_mutex;
  std::map<std::uint64_t, OutboundQueue> outbound;
  std::mutex in_mutex;
  std::condition_variable in_cv;
  std::deque<Inbound> inbound;

  // Owned by the simulation thread.
  std::optional<std::uint64_t> driver;
  std::string driver_token;
  std::optional<CommandEcho> last_command;
  bool paused = false;
  std::uint64_t heartbeat_seq = 0;

  Impl(Scenario s, ServiceOptions o) : scenario(std::move(s)), options(std::move(o)) {}

  void wake() {
    if (!wake_pending.exchange(true)) {
      const char b = 1;
      [[maybe_unused]] const auto n = ::write(wake_write, &b, 1);
    }
  }

  void send_to(std::uint64_t session, ServerMessage m) {
    {
      std::lock_guard lock(hub_mutex);
      const auto it = outbound.find(session);
      if (it == outbound.end()) return;
      it->second.push(std::move(m));
    }
    wake();
  }

  void broadcast(const ServerMessage& m) {
    {
      std::lock_guard lock(hub_mutex);
      for (auto& [id, q] : outbound) q.push(m);
    }
    wake();
  }

  void bind_socket() {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(options.port);
    if (const int rc = getaddrinfo(options.host.c_str(), port.c_str(), &hints, &res); rc != 0)
      throw StartupError("cannot resolve '" + options.host + "': " + gai_strerror(rc));
    listen_fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (listen_fd < 0) {
      freeaddrinfo(res);
      throw StartupError(std::string("socket: ") + std::strerror(errno));
    }
    const int one = 1;
    setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(listen_fd, res->ai_addr, res->ai_addrlen) != 0) {
      const int err = errno;
      freeaddrinfo(res);
      ::close(listen_fd);
      listen_fd = -1;
      if (err == EADDRINUSE)
        throw StartupError("address " + options.host + ":" + port + " is already in use");
      throw StartupError("bind " + options.host + ":" + port + ": " + std::strerror(err));
    }
    freeaddrinfo(res);
    if (::listen(listen_fd, 16) != 0) throw StartupError(std::string("listen: ") + std::strerror(errno));
    set_nonblocking(listen_fd);
    int fds[2];
    if (::pipe(fds) != 0) throw StartupError(std::string("pipe: ") + std::strerror(errno));
    wake_read = fds[0];
    wake_write = fds[1];
    set_nonblocking(wake_read);
    set_nonblocking(wake_write);
  }

  std::uint16_t bound_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  // ---- simulation thread ----

  void reply_error(std::uint64_t session, std::string code, std::string message,
                   std::optional<std::int64_t> id) {
    send_to(session, ErrorReply{std::move(code), std::move(message), id});
  }

  StateMessage state(const Simulation& sim, std::optional<std::int64_t> reply_to = std::nullopt) const {
    return StateMessage{snapshot(sim, paused, last_command), reply_to, false};
  }

  /// Advances one tick and broadcasts on the configured cadence.
  void advance(Simulation& sim, std::size_t broadcast_every) {
    sim.step();
    if (sim.tick() % broadcast_every == 0) broadcast(state(sim));
  }

  void apply(Simulation& sim, std::uint64_t session, const ClientMessage& msg,
             std::size_t broadcast_every, Clock::time_point& anchor_wall, std::size_t& anchor_tick) {
    const auto& cmd = msg.command;
    if (const auto* hello = std::get_if<Hello>(&cmd)) {
      Welcome w;
      w.session = session;
      w.scenario = scenario.name;
      w.dt = scenario.dt;
      if (hello->role == Role::driver) {
        if (driver && *driver != session) {
          reply_error(session, "driver_taken", "another client holds the driver token", msg.id);
        } else {
          driver = session;
          driver_token = random_token();
          w.role = Role::driver;
          w.token = driver_token;
        }
      }
      send_to(session, w);
      send_to(session, state(sim));
      return;
    }
    if (!driver || *driver != session || !msg.token || *msg.token != driver_token) {
      reply_error(session, "not_driver", "commands need the driver token", msg.id);
      return;
    }
    const std::string type = command_type(cmd);
    const Mode mode = sim.mode();
    auto wrong_mode = [&](Mode needed) {
      reply_error(session, "wrong_mode",
                  type + " is only allowed in " + to_string(needed) + " mode (current: " + to_string(mode) + ")",
                  msg.id);
    };
    try {
      if (const auto* c = std::get_if<SetMode>(&cmd)) {
        sim.set_mode(c->mode);
      } else if (const auto* c = std::get_if<Jog>(&cmd)) {
        if (mode != Mode::track) return wrong_mode(Mode::track);
        if (c->axis < 0 || c->axis > 5) return reply_error(session, "invalid", "jog axis must be 0..5", msg.id);
        const double limit = c->axis < 3 ? options.jog_linear_limit : options.jog_angular_limit;
        if (!(std::abs(c->delta) <= limit))
          return reply_error(session, "limit_exceeded",
                             "jog delta exceeds the per-command limit of " + std::to_string(limit), msg.id);
        sim.jog(c->axis, c->delta);
      } else if (const auto* c = std::get_if<ApplyWrench>(&cmd)) {
        if (mode != Mode::admittance) return wrong_mode(Mode::admittance);
        sim.apply_wrench(c->wrench, c->duration);
      } else if (const auto* c = std::get_if<HapticTarget>(&cmd)) {
        if (mode != Mode::insert) return wrong_mode(Mode::insert);
        sim.set_haptic_target(c->x_h);
      } else if (const auto* c = std::get_if<SetGains>(&cmd)) {
        GainSet g = sim.scenario().gains;
        if (c->kp) g.kp = *c->kp;
        if (c->kd) g.kd = *c->kd;
        if (c->insertion_kp) g.insertion_kp = *c->insertion_kp;
        if (c->insertion_kd) g.insertion_kd = *c->insertion_kd;
        if (c->insertion_ko) g.insertion_ko = *c->insertion_ko;
        if (c->force_sign) g.force_sign = *c->force_sign;
        sim.set_gains(g);
      } else if (std::holds_alternative<Pause>(cmd)) {
        paused = true;
      } else if (std::holds_alternative<Resume>(cmd)) {
        paused = false;
        anchor_wall = Clock::now();
        anchor_tick = sim.tick();
      } else if (std::holds_alternative<Reset>(cmd)) {
        sim.reset();
        anchor_wall = Clock::now();
        anchor_tick = 0;
      } else if (const auto* c = std::get_if<Step>(&cmd)) {
        if (!paused) return reply_error(session, "not_paused", "step needs a paused session", msg.id);
        if (c->count > options.max_step_count)
          return reply_error(session, "limit_exceeded", "step count too large", msg.id);
        last_command = CommandEcho{type, msg.id};
        for (std::uint64_t k = 0; k < c->count; ++k) advance(sim, broadcast_every);
        send_to(session, state(sim, msg.id.value_or(0)));
        return;
      }
    } catch (const SimulationError& e) {
      paused = true;
      broadcast(ErrorReply{"simulation_error", e.what(), msg.id});
      return;
    } catch (const std::exception& e) {
      return reply_error(session, "invalid", type + ": " + e.what(), msg.id);
    }
    last_command = CommandEcho{type, msg.id};
    send_to(session, Ack{type, msg.id});
  }

  void sim_loop() {
    Simulation sim(scenario);
    paused = options.start_paused;
    const auto broadcast_every = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(options.broadcast_period / scenario.dt)));
    const auto heartbeat_every = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(options.heartbeat_period));
    auto anchor_wall = Clock::now();
    std::size_t anchor_tick = 0;
    auto next_heartbeat = anchor_wall + heartbeat_every;

    while (!stop.load()) {
      std::deque<Inbound> batch;
      {
        std::lock_guard lock(in_mutex);
        batch.swap(inbound);
      }
      for (const auto& in : batch) {
        if (!in.message) {
          if (driver && *driver == in.session) driver.reset();
          continue;
        }
        apply(sim, in.session, *in.message, broadcast_every, anchor_wall, anchor_tick);
      }

      auto now = Clock::now();
      if (now >= next_heartbeat) {
        broadcast(Heartbeat{sim.time(),
                            std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::system_clock::now().time_since_epoch())
                                .count(),
                            heartbeat_seq++});
        next_heartbeat = now + heartbeat_every;
      }

      Clock::time_point wake_at = next_heartbeat;
      if (!paused) {
        try {
          if (options.timescale <= 0.0) {
            for (std::size_t k = 0; k < kStepsPerSlice; ++k) advance(sim, broadcast_every);
            continue;
          }
          const double elapsed = std::chrono::duration<double>(now - anchor_wall).count();
          const auto due = anchor_tick + static_cast<std::size_t>(elapsed * options.timescale / scenario.dt);
          for (std::size_t k = 0; k < kStepsPerSlice && sim.tick() < due; ++k) advance(sim, broadcast_every);
          if (sim.tick() < due) continue;
          const double next_tick_wall = static_cast<double>(sim.tick() + 1 - anchor_tick) * scenario.dt /
                                        options.timescale;
          wake_at = std::min(wake_at, anchor_wall + std::chrono::duration_cast<Clock::duration>(
                                                        std::chrono::duration<double>(next_tick_wall)));
        } catch (const SimulationError& e) {
          paused = true;
          broadcast(ErrorReply{"simulation_error", e.what(), std::nullopt});
        }
      }
      std::unique_lock lock(in_mutex);
      in_cv.wait_until(lock, wake_at, [&] { return stop.load() || !inbound.empty(); });
    }
  }

  // ---- I/O thread ----

  void enqueue_inbound(std::uint64_t session, std::optional<ClientMessage> m) {
    {
      std::lock_guard lock(in_mutex);
      if (m && inbound.size() >= options.inbound_capacity) {
        send_to(session, ErrorReply{"overloaded", "inbound command queue is full", m->id});
        return;
      }
      inbound.push_back({session, std::move(m)});
    }
    in_cv.notify_one();
  }

  void handle_line(Connection& c, const std::string& raw) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) return;
    try {
      enqueue_inbound(c.session, decode_client(line));
    } catch (const ProtocolError& e) {
      send_to(c.session, ErrorReply{e.code(), e.what(), std::nullopt});
    }
  }

  void handle_text(Connection& c, const std::string& text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t nl = std::min(text.find('\n', pos), text.size());
      handle_line(c, text.substr(pos, nl - pos));
      pos = nl + 1;
    }
  }

  /// Consumes buffered input; returns false when the connection must close.
  bool process_input(Connection& c) {
    if (c.transport == Transport::unknown) {
      if (c.in.empty()) return true;
      c.transport = c.in[0] == 'G' ? Transport::websocket : Transport::line;
    }
    if (c.transport == Transport::line) {
      std::size_t pos = 0, nl;
      while ((nl = c.in.find('\n', pos)) != std::string::npos) {
        handle_line(c, c.in.substr(pos, nl - pos));
        pos = nl + 1;
      }
      c.in.erase(0, pos);
      if (c.in.size() > kMaxLineBytes) {
        send_to(c.session, ErrorReply{"malformed", "line too long", std::nullopt});
        return false;
      }
      return true;
    }
    try {
      if (!c.decoder) {
        const auto parsed = ws::parse_request(c.in);
        if (!parsed) return true;
        c.out += ws::handshake_response(parsed->first);
        c.in.erase(0, parsed->second);
        c.decoder.emplace(true);
      }
      c.decoder->feed(c.in);
      c.in.clear();
      while (auto frame = c.decoder->next()) {
        switch (frame->opcode) {
          case ws::Opcode::text:
          case ws::Opcode::binary:
            handle_text(c, frame->payload);
            break;
          case ws::Opcode::ping:
            c.out += ws::encode_frame(ws::Opcode::pong, frame->payload);
            break;
          case ws::Opcode::close:
            c.out += ws::encode_frame(ws::Opcode::close, frame->payload.substr(0, 2));
            c.closing = true;
            return true;
          default:
            break;
        }
      }
    } catch (const std::exception& e) {
      if (!c.decoder) c.out += "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n";
      c.closing = true;
    }
    return true;
  }

  void fill_output(Connection& c) {
    if (c.transport == Transport::unknown || (c.transport == Transport::websocket && !c.decoder)) return;
    std::lock_guard lock(hub_mutex);
    auto it = outbound.find(c.session);
    if (it == outbound.end()) return;
    while (c.out.size() < kMaxPendingBytes) {
      std::string line = it->second.pop();
      if (line.empty()) break;
      if (c.transport == Transport::websocket) {
        c.out += ws::encode_frame(ws::Opcode::text, line);
      } else {
        c.out += line;
        c.out += '\n';
      }
    }
  }

  /// Returns false when the peer is gone.
  bool flush(Connection& c) {
    while (!c.out.empty()) {
      const ssize_t n = ::send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
      if (n > 0) {
        c.out.erase(0, static_cast<std::size_t>(n));
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return true;
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    return true;
  }

  void io_loop() {
    std::map<std::uint64_t, Connection> conns;
    std::uint64_t next_session = 1;
    std::vector<pollfd> fds;
    std::vector<std::uint64_t> owners;

    auto drop = [&](std::uint64_t id) {
      ::close(conns.at(id).fd);
      conns.erase(id);
      {
        std::lock_guard lock(hub_mutex);
        outbound.erase(id);
      }
      enqueue_inbound(id, std::nullopt);
    };

    while (!stop.load()) {
      for (auto& [id, c] : conns) fill_output(c);
      fds.clear();
      owners.clear();
      fds.push_back({listen_fd, POLLIN, 0});
      fds.push_back({wake_read, POLLIN, 0});
      for (auto& [id, c] : conns) {
        short events = POLLIN;
        if (!c.out.empty()) events |= POLLOUT;
        fds.push_back({c.fd, events, 0});
        owners.push_back(id);
      }
      const int ready = ::poll(fds.data(), fds.size(), 200);
      if (ready < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (fds[1].revents & POLLIN) {
        char buf[256];
        while (::read(wake_read, buf, sizeof(buf)) > 0) {
        }
        wake_pending.store(false);
      }
      if (fds[0].revents & POLLIN) {
        while (true) {
          const int fd = ::accept(listen_fd, nullptr, nullptr);
          if (fd < 0) break;
          set_nonblocking(fd);
          const int one = 1;
          setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
          const std::uint64_t id = next_session++;
          conns[id] = Connection{fd, id, Transport::unknown, {}, {}, std::nullopt, false};
          std::lock_guard lock(hub_mutex);
          outbound.emplace(id, OutboundQueue(options.outbound_capacity));
        }
      }
      std::vector<std::uint64_t> closed;
      for (std::size_t i = 0; i < owners.size(); ++i) {
        auto& c = conns.at(owners[i]);
        const short re = fds[i + 2].revents;
        bool alive = true;
        if (re & POLLIN) {
          char buf[65536];
          const ssize_t n = ::recv(c.fd, buf, sizeof(buf), 0);
          if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            alive = process_input(c);
          } else if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) {
            alive = false;
          }
        } else if (re & (POLLERR | POLLHUP | POLLNVAL)) {
          alive = false;
        }
        if (alive) {
          fill_output(c);
          alive = flush(c);
        }
        if (!alive || (c.closing && c.out.empty())) closed.push_back(owners[i]);
      }
      for (auto id : closed) drop(id);
    }
    for (auto& [id, c] : conns) {
      fill_output(c);
      flush(c);
      ::close(c.fd);
    }
  }
};

TeleopService::TeleopService(Scenario scenario, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(options))) {
  impl_->scenario.validate();
  if (!(impl_->options.timescale >= 0.0)) throw ConfigError("timescale must be >= 0");
  if (!(impl_->options.broadcast_period > 0.0) || !(impl_->options.heartbeat_period > 0.0))
    throw ConfigError("broadcast and heartbeat periods must be > 0");
}

TeleopService::~TeleopService() {
  stop();
  wait();
  if (impl_->listen_fd >= 0) ::close(impl_->listen_fd);
  if (impl_->wake_read >= 0) ::close(impl_->wake_read);
  if (impl_->wake_write >= 0) ::close(impl_->wake_write);
}

void TeleopService::start() {
  if (running_.load()) return;
  impl_->bind_socket();
  port_ = impl_->bound_port();
  running_ = true;
  impl_->sim_thread = std::thread([this] { impl_->sim_loop(); });
  impl_->io_thread = std::thread([this] { impl_->io_loop(); });
}

void TeleopService::stop() {
  impl_->stop = true;
  impl_->in_cv.notify_all();
  if (impl_->wake_write >= 0) impl_->wake();
}

void TeleopService::wait() {
  if (impl_->sim_thread.joinable()) impl_->sim_thread.join();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
  running_ = false;
}

}  // namespace biopsim::teleop
