#include "doctest.h"

#include <string>

#include "glide/websocket.hpp"

using namespace glide::ws;

TEST_CASE("accept key from RFC 6455 section 1.3") {
  CHECK(accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
}

TEST_CASE("handshake headers") {
  const std::string req = handshake_request("localhost:9761", "dGhlIHNhbXBsZSBub25jZQ==");
  CHECK(header_value(req, "sec-websocket-key") == "dGhlIHNhbXBsZSBub25jZQ==");
  CHECK(header_value(req, "UPGRADE") == "websocket");
  CHECK_FALSE(header_value(req, "Origin"));
  const std::string resp = handshake_response("dGhlIHNhbXBsZSBub25jZQ==");
  CHECK(resp.starts_with("HTTP/1.1 101 "));
  CHECK(header_value(resp, "Sec-WebSocket-Accept") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
}

TEST_CASE("frames round-trip through the decoder") {
  for (std::size_t len : {0u, 1u, 125u, 126u, 1000u, 65535u, 65536u}) {
    std::string payload(len, 'x');
    for (std::size_t i = 0; i < len; ++i) payload[i] = static_cast<char>('a' + i % 26);
    for (bool masked : {false, true}) {
      FrameDecoder dec(1 << 17);
      const std::string wire = masked ? encode_frame(payload, Opcode::Text, 0x37FA213Du) : encode_frame(payload, Opcode::Text);
      // Feed byte-wise at the start to exercise partial headers.
      dec.feed(wire.substr(0, 1));
      CHECK_FALSE(dec.next());
      dec.feed(wire.substr(1));
      const auto f = dec.next();
      REQUIRE(f);
      CHECK(f->fin);
      CHECK(f->op == Opcode::Text);
      CHECK(f->payload == payload);
      CHECK_FALSE(dec.next());
    }
  }
}

TEST_CASE("masked example from RFC 6455 section 5.7") {
  const std::string wire("\x81\x85\x37\xfa\x21\x3d\x7f\x9f\x4d\x51\x58", 11);
  CHECK(encode_frame("Hello", Opcode::Text, 0x37fa213du) == wire);
  FrameDecoder dec;
  dec.feed(wire);
  const auto f = dec.next();
  REQUIRE(f);
  CHECK(f->payload == "Hello");
}

TEST_CASE("oversized frames set the error flag") {
  FrameDecoder dec(16);
  dec.feed(encode_frame(std::string(17, 'z'), Opcode::Binary));
  CHECK_FALSE(dec.next());
  CHECK(dec.error());
}

TEST_CASE("several frames in one feed") {
  FrameDecoder dec;
  dec.feed(encode_frame("PING", Opcode::Text, 1u) + encode_frame("", Opcode::Ping, 2u) + encode_frame("STOP", Opcode::Text, 3u));
  CHECK(dec.next()->payload == "PING");
  CHECK(dec.next()->op == Opcode::Ping);
  CHECK(dec.next()->payload == "STOP");
  CHECK_FALSE(dec.next());
}
