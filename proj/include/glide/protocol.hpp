#pragma once

// ASCII line protocol between a controller and the device:
//
//   CMD  = VERB *(SP ARG) LF
//   VERB = PING | STATUS | SET | GOTO | PATTERN | VIB | STOP | SUBSCRIBE | UNSUBSCRIBE
//   NUM  = 1*DIGIT ["." 1*DIGIT]
//
// Every command gets exactly one reply, "OK [payload]" or "ERR <code> <message>".
// Subscribed connections additionally receive one TELEM line per device tick.

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "glide/kinematics.hpp"
#include "glide/stimulus.hpp"

namespace glide::protocol {

inline constexpr std::size_t kMaxLineBytes = 256;

namespace errc {
inline constexpr int kSyntax = 400;
inline constexpr int kUnknownPattern = 404;
inline constexpr int kConflict = 409;
inline constexpr int kOutOfRange = 422;
inline constexpr int kDevice = 500;
}  // namespace errc

struct Ping {};
struct Status {};
struct Set {
  ContactStated target;
};
struct Goto {
  ContactStated target;
};
struct PlayPattern {
  PatternId id{PatternId::SD};
};
struct Vib {
  VibrationCommand vib;
};
struct Stop {};
struct Subscribe {};
struct Unsubscribe {};

using Command = std::variant<Ping, Status, Set, Goto, PlayPattern, Vib, Stop, Subscribe, Unsubscribe>;

/// Bounds every numeric argument is checked against before anything is queued.
struct Limits {
  double travel_len_mm{100.0};
  double max_force_n{2.0};
  double f_max_hz{500.0};
};

struct ProtocolError {
  int code{errc::kSyntax};
  std::string message;
};

using ParseResult = std::variant<Command, ProtocolError>;

/// Accepts the line with or without its trailing LF (a CR before the LF is
/// tolerated).  Verbs and pattern ids are case-insensitive.
ParseResult parse_command(std::string_view line, const Limits& limits);

/// Canonical form: upper-case verb, single spaces, shortest decimals, LF.
std::string serialize(const Command& cmd);

struct Reply {
  bool ok{true};
  int code{0};
  std::string text;  // payload for OK, message for ERR

  static Reply success(std::string payload = {}) { return {true, 0, std::move(payload)}; }
  static Reply failure(int code, std::string message) { return {false, code, std::move(message)}; }
  static Reply failure(const ProtocolError& e) { return {false, e.code, e.message}; }
};

/// "OK", "OK <payload>" or "ERR <code> <message>", LF-terminated.
std::string serialize(const Reply& reply);

std::optional<Reply> parse_reply(std::string_view line);

/// Extracts the value of `key=` from a space-separated key=value payload.
std::optional<double> field(std::string_view payload, std::string_view key);

}  // namespace glide::protocol
