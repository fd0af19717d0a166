#include "biopsim/teleop/client.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <deque>
#include <random>

#include "biopsim/errors.hpp"

namespace biopsim::teleop {

namespace {

using Ms = std::chrono::milliseconds;

std::uint32_t random_word() {
  static thread_local std::mt19937 rng(std::random_device{}());
  return rng();
}

}  // namespace

TeleopClient::TeleopClient(const std::string& host, std::uint16_t port, ClientTransport transport)
    : transport_(transport) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw IoError("cannot resolve '" + host + "': " + gai_strerror(rc));
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) != 0) {
    const int err = errno;
    freeaddrinfo(res);
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " + std::strerror(err));
  }
  freeaddrinfo(res);
  const int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  if (transport_ == ClientTransport::websocket) {
    std::string nonce;
    for (int i = 0; i < 4; ++i) {
      const std::uint32_t w = random_word();
      nonce.append(reinterpret_cast<const char*>(&w), 4);
    }
    const std::string key = ws::base64_encode(nonce);
    write_all(ws::handshake_request(host + ":" + std::to_string(port), key));
    std::size_t end;
    while ((end = in_.find("\r\n\r\n")) == std::string::npos)
      if (!fill(Ms(5000))) throw IoError("WebSocket handshake timed out");
    const std::string head = in_.substr(0, end);
    in_.erase(0, end + 4);
    if (head.rfind("HTTP/1.1 101", 0) != 0) throw IoError("WebSocket upgrade refused: " + head);
    if (head.find("Sec-WebSocket-Accept: " + ws::accept_key(key)) == std::string::npos)
      throw IoError("WebSocket accept key mismatch");
    decoder_.emplace(false);
    decoder_->feed(in_);
    in_.clear();
  }
}

TeleopClient::~TeleopClient() {
  if (fd_ >= 0) ::close(fd_);
}

void TeleopClient::write_all(const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

void TeleopClient::send_raw(const std::string& line) {
  if (transport_ == ClientTransport::websocket) {
    write_all(ws::encode_frame(ws::Opcode::text, line, random_word()));
  } else {
    write_all(line + "\n");
  }
}

std::int64_t TeleopClient::send(Command command) {
  ClientMessage m;
  m.command = std::move(command);
  m.id = next_id_++;
  if (!std::holds_alternative<Hello>(m.command)) m.token = token_;
  send_raw(encode(m));
  return *m.id;
}

bool TeleopClient::fill(Ms timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (ready == 0) return false;
  if (ready < 0) {
    if (errno == EINTR) return false;
    throw IoError(std::string("poll failed: ") + std::strerror(errno));
  }
  char buf[65536];
  const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
  if (n == 0) throw IoError("connection closed by server");
  if (n < 0) {
    if (errno == EAGAIN || errno == EINTR) return false;
    throw IoError(std::string("recv failed: ") + std::strerror(errno));
  }
  if (decoder_) {
    decoder_->feed(std::string_view(buf, static_cast<std::size_t>(n)));
  } else {
    in_.append(buf, static_cast<std::size_t>(n));
  }
  return true;
}

std::optional<std::string> TeleopClient::take_line() {
  if (decoder_) {
    try {
      while (auto frame = decoder_->next()) {
        if (frame->opcode == ws::Opcode::text) return frame->payload;
        if (frame->opcode == ws::Opcode::close) throw IoError("server closed the WebSocket");
      }
    } catch (const std::runtime_error& e) {
      if (dynamic_cast<const IoError*>(&e)) throw;
      throw IoError(std::string("bad WebSocket frame: ") + e.what());
    }
    return std::nullopt;
  }
  const std::size_t nl = in_.find('\n');
  if (nl == std::string::npos) return std::nullopt;
  std::string line = in_.substr(0, nl);
  in_.erase(0, nl + 1);
  return line;
}

std::optional<ServerMessage> TeleopClient::receive(Ms timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (auto line = take_line()) {
      try {
        ServerMessage m = decode_server(*line);
        if (const auto* s = std::get_if<StateMessage>(&m); s && s->gap) ++gaps_;
        else if (line->find("\"gap\":true") != std::string::npos) ++gaps_;
        return m;
      } catch (const ProtocolError& e) {
        throw IoError(std::string("undecodable server message: ") + e.what());
      }
    }
    const auto left = std::chrono::duration_cast<Ms>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    fill(left);
  }
}

ServerMessage TeleopClient::wait_for(const std::function<bool(const ServerMessage&)>& match, Ms timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto left = std::chrono::duration_cast<Ms>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw IoError("timed out waiting for a server message");
    auto m = receive(left);
    if (m && match(*m)) return std::move(*m);
  }
}

Welcome TeleopClient::hello(Role role) {
  send(Hello{role});
  auto m = wait_for([](const ServerMessage& m) { return std::holds_alternative<Welcome>(m); });
  Welcome w = std::get<Welcome>(std::move(m));
  if (w.token) token_ = w.token;
  return w;
}

std::variant<Ack, ErrorReply> TeleopClient::request(Command command, Ms timeout) {
  const std::int64_t id = send(std::move(command));
  auto m = wait_for(
      [id](const ServerMessage& m) {
        if (const auto* a = std::get_if<Ack>(&m)) return a->id == id;
        if (const auto* e = std::get_if<ErrorReply>(&m)) return e->id == id;
        return false;
      },
      timeout);
  if (auto* a = std::get_if<Ack>(&m)) return std::move(*a);
  return std::get<ErrorReply>(std::move(m));
}

StateMessage TeleopClient::step(std::uint64_t count) {
  const std::int64_t id = send(Step{count});
  auto m = wait_for([id](const ServerMessage& m) {
    if (const auto* s = std::get_if<StateMessage>(&m)) return s->reply_to == id;
    if (const auto* e = std::get_if<ErrorReply>(&m)) return e->id == id;
    return false;
  });
  if (auto* e = std::get_if<ErrorReply>(&m)) throw IoError("step rejected: " + e->message);
  return std::get<StateMessage>(std::move(m));
}

std::vector<LogRecord> scripted_insertion(TeleopClient& client, const InsertionProfile& profile,
                                          std::size_t steps, double dt, std::size_t window) {
  auto require_ack = [](const std::variant<Ack, ErrorReply>& r) {
    if (const auto* e = std::get_if<ErrorReply>(&r)) throw IoError("command rejected: " + e->message);
  };
  require_ack(client.request(Pause{}));
  require_ack(client.request(Reset{}));

  std::vector<LogRecord> records;
  records.reserve(steps + 1);
  std::deque<std::int64_t> in_flight;  // ids of the snapshot requests, in tick order
  std::size_t sent = 0;
  if (window == 0) window = 1;

  auto send_tick = [&](std::size_t k) {
    if (k > 0) client.send(Step{1});
    client.send(HapticTarget{profile(static_cast<double>(k) * dt)});
    in_flight.push_back(client.send(Step{0}));
  };

  while (records.size() <= steps) {
    while (sent <= steps && in_flight.size() < window) send_tick(sent++);
    const std::int64_t want = in_flight.front();
    auto m = client.wait_for([want](const ServerMessage& m) {
      if (const auto* s = std::get_if<StateMessage>(&m)) return s->reply_to == want;
      return std::holds_alternative<ErrorReply>(m);
    });
    if (const auto* e = std::get_if<ErrorReply>(&m))
      throw IoError("scripted insertion failed: " + e->code + ": " + e->message);
    in_flight.pop_front();
    records.push_back(to_record(std::get<StateMessage>(m).state));
  }
  if (client.gaps() > 0) throw IoError("server dropped messages during the scripted run");
  return records;
}

}  // namespace biopsim::teleop
