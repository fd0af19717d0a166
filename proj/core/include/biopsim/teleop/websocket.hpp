#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace biopsim::teleop::ws {

// Minimal RFC 6455 support: the opening handshake plus unfragmented and
// fragmented data frames, ping/pong and close. No extensions.

std::string base64_encode(std::string_view bytes);

/// Sec-WebSocket-Accept value for a client's Sec-WebSocket-Key.
std::string accept_key(std::string_view client_key);

struct HttpRequest {
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;  // lower-cased names
};

/// Parses a complete request head (terminated by an empty line). Returns
/// nullopt while the head is incomplete; throws std::runtime_error when it
/// is malformed.
std::optional<std::pair<HttpRequest, std::size_t>> parse_request(std::string_view buffer);

/// 101 response for a valid upgrade request, or throws std::runtime_error.
std::string handshake_response(const HttpRequest& request);

/// Client side opening request.
std::string handshake_request(const std::string& host, const std::string& key,
                              const std::string& target = "/");

enum class Opcode : std::uint8_t { continuation = 0, text = 1, binary = 2, close = 8, ping = 9, pong = 10 };

struct Frame {
  Opcode opcode = Opcode::text;
  std::string payload;
};

/// Serialized frame with FIN set. Client frames must pass a masking key.
std::string encode_frame(Opcode opcode, std::string_view payload,
                         std::optional<std::uint32_t> mask = std::nullopt);

/// Incremental decoder; reassembles fragmented messages. Control frames
/// are returned as soon as they arrive.
class FrameDecoder {
 public:
  explicit FrameDecoder(bool require_mask, std::size_t max_message = 1 << 20)
      : require_mask_(require_mask), max_message_(max_message) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }
  /// Next complete message, or nullopt. Throws std::runtime_error on
  /// protocol violations.
  std::optional<Frame> next();

 private:
  bool require_mask_;
  std::size_t max_message_;
  std::string buffer_;
  std::optional<Frame> partial_;
};

}  // namespace biopsim::teleop::ws
