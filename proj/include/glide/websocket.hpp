#pragma once

// Minimal RFC 6455 pieces used by the browser bridge: the opening-handshake
// key transform and text/control framing.  No extensions, no compression.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace glide::ws {

enum class Opcode : std::uint8_t { Continuation = 0x0, Text = 0x1, Binary = 0x2, Close = 0x8, Ping = 0x9, Pong = 0xA };

/// Sec-WebSocket-Accept value for a client's Sec-WebSocket-Key.
std::string accept_key(std::string_view client_key);

/// Value of an HTTP header (case-insensitive name) in a raw request head.
std::optional<std::string> header_value(std::string_view request, std::string_view name);

/// HTTP 101 response completing the handshake.
std::string handshake_response(std::string_view client_key);

/// Client-side upgrade request; `key` must be a base64 16-byte nonce.
std::string handshake_request(std::string_view host, std::string_view key);

/// One final frame.  Clients must mask, servers must not.
std::string encode_frame(std::string_view payload, Opcode op, std::optional<std::uint32_t> mask = std::nullopt);

struct Frame {
  bool fin{true};
  Opcode op{Opcode::Text};
  std::string payload;
};

/// Incremental decoder over a byte stream.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_payload = 1 << 16) : max_payload_(max_payload) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }

  /// Next complete frame, or nullopt when more bytes are needed.  Sets
  /// error() on an oversized frame.
  std::optional<Frame> next();
  bool error() const { return error_; }

 private:
  std::string buffer_;
  std::size_t max_payload_;
  bool error_{false};
};

}  // namespace glide::ws
