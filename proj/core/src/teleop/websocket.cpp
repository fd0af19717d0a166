#include "biopsim/teleop/websocket.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <openssl/sha.h>

namespace biopsim::teleop::ws {

namespace {

constexpr const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

bool header_has_token(const HttpRequest& r, const std::string& name, const std::string& token) {
  const auto it = r.headers.find(name);
  if (it == r.headers.end()) return false;
  const std::string value = lower(it->second);
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const std::size_t comma = std::min(value.find(',', pos), value.size());
    if (trim(std::string_view(value).substr(pos, comma - pos)) == token) return true;
    pos = comma + 1;
  }
  return false;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t n = (std::uint32_t(std::uint8_t(bytes[i])) << 16) |
                            (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) |
                            std::uint32_t(std::uint8_t(bytes[i + 2]));
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t n = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (rest == 2) n |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string accept_key(std::string_view client_key) {
  const std::string material = std::string(client_key) + kGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(material.data()), material.size(), digest);
  return base64_encode(std::string_view(reinterpret_cast<const char*>(digest), sizeof(digest)));
}

std::optional<std::pair<HttpRequest, std::size_t>> parse_request(std::string_view buffer) {
  const std::size_t end = buffer.find("\r\n\r\n");
  if (end == std::string_view::npos) {
    if (buffer.size() > 16384) throw std::runtime_error("HTTP request head too large");
    return std::nullopt;
  }
  HttpRequest req;
  std::string_view head = buffer.substr(0, end);
  std::size_t line_end = head.find("\r\n");
  const std::string_view request_line = head.substr(0, line_end);
  const std::size_t sp1 = request_line.find(' ');
  const std::size_t sp2 = request_line.rfind(' ');
  if (sp1 == std::string_view::npos || sp2 == sp1) throw std::runtime_error("malformed request line");
  req.method = std::string(request_line.substr(0, sp1));
  req.target = std::string(request_line.substr(sp1 + 1, sp2 - sp1 - 1));
  if (request_line.substr(sp2 + 1) != "HTTP/1.1") throw std::runtime_error("expected HTTP/1.1");
  while (line_end != std::string_view::npos) {
    const std::size_t start = line_end + 2;
    line_end = head.find("\r\n", start);
    const std::string_view line = head.substr(start, line_end == std::string_view::npos ? head.size() - start
                                                                                        : line_end - start);
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) throw std::runtime_error("malformed header line");
    req.headers[lower(std::string(line.substr(0, colon)))] = trim(line.substr(colon + 1));
  }
  return std::make_pair(std::move(req), end + 4);
}

std::string handshake_response(const HttpRequest& r) {
  if (r.method != "GET") throw std::runtime_error("WebSocket upgrade must use GET");
  if (!header_has_token(r, "upgrade", "websocket") || !header_has_token(r, "connection", "upgrade"))
    throw std::runtime_error("missing WebSocket upgrade headers");
  const auto version = r.headers.find("sec-websocket-version");
  if (version == r.headers.end() || version->second != "13")
    throw std::runtime_error("unsupported WebSocket version");
  const auto key = r.headers.find("sec-websocket-key");
  if (key == r.headers.end() || key->second.empty()) throw std::runtime_error("missing Sec-WebSocket-Key");
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " +
         accept_key(key->second) + "\r\n\r\n";
}

std::string handshake_request(const std::string& host, const std::string& key, const std::string& target) {
  return "GET " + target + " HTTP/1.1\r\nHost: " + host +
         "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
         "\r\nSec-WebSocket-Version: 13\r\n\r\n";
}

std::string encode_frame(Opcode opcode, std::string_view payload, std::optional<std::uint32_t> mask) {
  std::string out;
  out += static_cast<char>(0x80 | static_cast<std::uint8_t>(opcode));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::uint64_t n = payload.size();
  if (n < 126) {
    out += static_cast<char>(mask_bit | n);
  } else if (n <= 0xFFFF) {
    out += static_cast<char>(mask_bit | 126);
    out += static_cast<char>((n >> 8) & 0xFF);
    out += static_cast<char>(n & 0xFF);
  } else {
    out += static_cast<char>(mask_bit | 127);
    for (int shift = 56; shift >= 0; shift -= 8) out += static_cast<char>((n >> shift) & 0xFF);
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  const std::uint8_t key[4] = {static_cast<std::uint8_t>(*mask >> 24), static_cast<std::uint8_t>(*mask >> 16),
                               static_cast<std::uint8_t>(*mask >> 8), static_cast<std::uint8_t>(*mask)};
  for (std::uint8_t k : key) out += static_cast<char>(k);
  for (std::size_t i = 0; i < payload.size(); ++i)
    out += static_cast<char>(static_cast<std::uint8_t>(payload[i]) ^ key[i % 4]);
  return out;
}

std::optional<Frame> FrameDecoder::next() {
  while (true) {
    if (buffer_.size() < 2) return std::nullopt;
    const auto b0 = static_cast<std::uint8_t>(buffer_[0]);
    const auto b1 = static_cast<std::uint8_t>(buffer_[1]);
    const bool fin = b0 & 0x80;
    if (b0 & 0x70) throw std::runtime_error("WebSocket frame uses reserved bits");
    const auto opcode = static_cast<Opcode>(b0 & 0x0F);
    const bool masked = b1 & 0x80;
    if (require_mask_ && !masked) throw std::runtime_error("client frames must be masked");
    std::size_t pos = 2;
    std::uint64_t len = b1 & 0x7F;
    if (len == 126) {
      if (buffer_.size() < 4) return std::nullopt;
      len = (std::uint64_t(std::uint8_t(buffer_[2])) << 8) | std::uint8_t(buffer_[3]);
      pos = 4;
    } else if (len == 127) {
      if (buffer_.size() < 10) return std::nullopt;
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | std::uint8_t(buffer_[2 + static_cast<std::size_t>(i)]);
      pos = 10;
    }
    if (len > max_message_) throw std::runtime_error("WebSocket frame too large");
    std::uint8_t key[4] = {0, 0, 0, 0};
    if (masked) {
      if (buffer_.size() < pos + 4) return std::nullopt;
      for (int i = 0; i < 4; ++i) key[i] = static_cast<std::uint8_t>(buffer_[pos + static_cast<std::size_t>(i)]);
      pos += 4;
    }
    if (buffer_.size() < pos + len) return std::nullopt;
    std::string payload = buffer_.substr(pos, len);
    if (masked)
      for (std::size_t i = 0; i < payload.size(); ++i)
        payload[i] = static_cast<char>(static_cast<std::uint8_t>(payload[i]) ^ key[i % 4]);
    buffer_.erase(0, pos + len);

    const bool control = static_cast<std::uint8_t>(opcode) & 0x08;
    if (control) {
      if (!fin || len > 125) throw std::runtime_error("malformed WebSocket control frame");
      return Frame{opcode, std::move(payload)};
    }
    if (opcode == Opcode::continuation) {
      if (!partial_) throw std::runtime_error("unexpected continuation frame");
      partial_->payload += payload;
      if (partial_->payload.size() > max_message_) throw std::runtime_error("WebSocket message too large");
    } else {
      if (opcode != Opcode::text && opcode != Opcode::binary)
        throw std::runtime_error("unknown WebSocket opcode");
      if (partial_) throw std::runtime_error("new message before previous one finished");
      partial_ = Frame{opcode, std::move(payload)};
    }
    if (fin) {
      Frame done = std::move(*partial_);
      partial_.reset();
      return done;
    }
  }
}

}  // namespace biopsim::teleop::ws
