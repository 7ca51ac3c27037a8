#include "glide/websocket.hpp"

#include <openssl/evp.h>

#include <cctype>

#include "glide/text.hpp"

namespace glide::ws {

std::string accept_key(std::string_view client_key) {
  static constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  std::string material(client_key);
  material += kGuid;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_Digest(material.data(), material.size(), digest, &digest_len, EVP_sha1(), nullptr);
  unsigned char encoded[4 * ((EVP_MAX_MD_SIZE + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(encoded, digest, static_cast<int>(digest_len));
  return std::string(reinterpret_cast<const char*>(encoded), static_cast<std::size_t>(n));
}

std::optional<std::string> header_value(std::string_view request, std::string_view name) {
  const std::string wanted = text::upper(name);
  std::size_t pos = 0;
  while (pos < request.size()) {
    std::size_t end = request.find("\r\n", pos);
    if (end == std::string_view::npos) end = request.size();
    const std::string_view line = request.substr(pos, end - pos);
    const auto colon = line.find(':');
    if (colon != std::string_view::npos && text::upper(text::trim(line.substr(0, colon))) == wanted) {
      return std::string(text::trim(line.substr(colon + 1)));
    }
    pos = end + 2;
  }
  return std::nullopt;
}

std::string handshake_response(std::string_view client_key) {
  return "HTTP/1.1 101 Switching Protocols\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Accept: " +
         accept_key(client_key) + "\r\n\r\n";
}

std::string handshake_request(std::string_view host, std::string_view key) {
  return "GET / HTTP/1.1\r\n"
         "Host: " + std::string(host) + "\r\n"
         "Upgrade: websocket\r\n"
         "Connection: Upgrade\r\n"
         "Sec-WebSocket-Key: " + std::string(key) + "\r\n"
         "Sec-WebSocket-Version: 13\r\n\r\n";
}

std::string encode_frame(std::string_view payload, Opcode op, std::optional<std::uint32_t> mask) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::uint64_t len = payload.size();
  if (len < 126) {
    out.push_back(static_cast<char>(mask_bit | len));
  } else if (len <= 0xFFFF) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((len >> 8) & 0xFF));
    out.push_back(static_cast<char>(len & 0xFF));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((len >> shift) & 0xFF));
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  unsigned char key[4];
  for (int i = 0; i < 4; ++i) key[i] = static_cast<unsigned char>((*mask >> (24 - 8 * i)) & 0xFF);
  out.append(reinterpret_cast<const char*>(key), 4);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(payload[i]) ^ key[i % 4]));
  }
  return out;
}

std::optional<Frame> FrameDecoder::next() {
  if (error_ || buffer_.size() < 2) return std::nullopt;
  const auto byte = [&](std::size_t i) { return static_cast<std::uint8_t>(buffer_[i]); };
  Frame f;
  f.fin = (byte(0) & 0x80) != 0;
  f.op = static_cast<Opcode>(byte(0) & 0x0F);
  const bool masked = (byte(1) & 0x80) != 0;
  std::uint64_t len = byte(1) & 0x7F;
  std::size_t pos = 2;
  if (len == 126) {
    if (buffer_.size() < 4) return std::nullopt;
    len = (std::uint64_t(byte(2)) << 8) | byte(3);
    pos = 4;
  } else if (len == 127) {
    if (buffer_.size() < 10) return std::nullopt;
    len = 0;
    for (std::size_t i = 2; i < 10; ++i) len = (len << 8) | byte(i);
    pos = 10;
  }
  if (len > max_payload_) {
    error_ = true;
    return std::nullopt;
  }
  const std::size_t key_pos = pos;
  if (masked) pos += 4;
  if (buffer_.size() < pos + len) return std::nullopt;
  f.payload = buffer_.substr(pos, static_cast<std::size_t>(len));
  if (masked) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] = static_cast<char>(f.payload[i] ^ buffer_[key_pos + i % 4]);
  }
  buffer_.erase(0, pos + static_cast<std::size_t>(len));
  return f;
}

}  // namespace glide::ws
