#include "glide/protocol.hpp"

#include <array>
#include <vector>

#include "glide/text.hpp"

namespace glide::protocol {
namespace {

ProtocolError syntax(std::string message) { return {errc::kSyntax, std::move(message)}; }

bool printable(std::string_view s) {
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u > 0x7e) {
      if (c != ' ' && c != '\t') return false;
    }
  }
  return true;
}

std::string_view strip_terminator(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Parses exactly `count` strict decimals following the verb.
std::optional<ProtocolError> numbers(const std::vector<std::string_view>& tokens, std::size_t count,
                                     std::array<double, 2>& out) {
  if (tokens.size() != count + 1) {
    return syntax(std::string(tokens[0]) + " expects " + std::to_string(count) + " arguments");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!text::parse_decimal(tokens[i + 1], out[i])) {
      return syntax("malformed number '" + std::string(tokens[i + 1]) + "'");
    }
  }
  return std::nullopt;
}

ParseResult contact_command(const std::vector<std::string_view>& tokens, const Limits& limits, bool immediate) {
  std::array<double, 2> v{};
  if (auto err = numbers(tokens, 2, v)) return *err;
  if (v[0] > limits.travel_len_mm) {
    return ProtocolError{errc::kOutOfRange, "position exceeds travel " + text::shortest(limits.travel_len_mm) + " mm"};
  }
  if (v[1] > limits.max_force_n) {
    return ProtocolError{errc::kOutOfRange, "force exceeds " + text::shortest(limits.max_force_n) + " N"};
  }
  const ContactStated target{v[0], v[1]};
  if (immediate) return Command{Set{target}};
  return Command{Goto{target}};
}

template <typename T>
ParseResult bare(const std::vector<std::string_view>& tokens) {
  if (tokens.size() != 1) return syntax(std::string(tokens[0]) + " takes no arguments");
  return Command{T{}};
}

}  // namespace

ParseResult parse_command(std::string_view line, const Limits& limits) {
  if (line.size() > kMaxLineBytes) return syntax("line too long");
  line = strip_terminator(line);
  if (!printable(line)) return syntax("non-printable bytes");
  const auto tokens = text::split_ws(line);
  if (tokens.empty()) return syntax("empty line");

  const std::string verb = text::upper(tokens[0]);
  if (verb == "PING") return bare<Ping>(tokens);
  if (verb == "STATUS") return bare<Status>(tokens);
  if (verb == "STOP") return bare<Stop>(tokens);
  if (verb == "SUBSCRIBE") return bare<Subscribe>(tokens);
  if (verb == "UNSUBSCRIBE") return bare<Unsubscribe>(tokens);
  if (verb == "SET") return contact_command(tokens, limits, true);
  if (verb == "GOTO") return contact_command(tokens, limits, false);
  if (verb == "PATTERN") {
    if (tokens.size() != 2) return syntax("PATTERN expects 1 argument");
    const auto id = parse_pattern_id(tokens[1]);
    if (!id) return ProtocolError{errc::kUnknownPattern, "unknown pattern '" + std::string(tokens[1]) + "'"};
    return Command{PlayPattern{*id}};
  }
  if (verb == "VIB") {
    std::array<double, 2> v{};
    if (auto err = numbers(tokens, 2, v)) return *err;
    if (v[0] > limits.f_max_hz || v[1] > limits.f_max_hz) {
      return ProtocolError{errc::kOutOfRange, "frequency exceeds " + text::shortest(limits.f_max_hz) + " Hz"};
    }
    return Command{Vib{{v[0], v[1]}}};
  }
  return syntax("unknown verb '" + std::string(tokens[0]) + "'");
}

std::string serialize(const Command& cmd) {
  struct Visitor {
    std::string operator()(const Ping&) const { return "PING"; }
    std::string operator()(const Status&) const { return "STATUS"; }
    std::string operator()(const Stop&) const { return "STOP"; }
    std::string operator()(const Subscribe&) const { return "SUBSCRIBE"; }
    std::string operator()(const Unsubscribe&) const { return "UNSUBSCRIBE"; }
    std::string operator()(const Set& c) const {
      return "SET " + text::shortest(c.target.position_mm) + " " + text::shortest(c.target.force_n);
    }
    std::string operator()(const Goto& c) const {
      return "GOTO " + text::shortest(c.target.position_mm) + " " + text::shortest(c.target.force_n);
    }
    std::string operator()(const PlayPattern& c) const { return "PATTERN " + std::string(to_string(c.id)); }
    std::string operator()(const Vib& c) const {
      return "VIB " + text::shortest(c.vib.f_proximal_hz) + " " + text::shortest(c.vib.f_distal_hz);
    }
  };
  return std::visit(Visitor{}, cmd) + "\n";
}

std::string serialize(const Reply& reply) {
  if (reply.ok) return reply.text.empty() ? "OK\n" : "OK " + reply.text + "\n";
  return "ERR " + std::to_string(reply.code) + " " + reply.text + "\n";
}

std::optional<Reply> parse_reply(std::string_view line) {
  line = strip_terminator(line);
  if (line == "OK") return Reply::success();
  if (line.starts_with("OK ")) return Reply::success(std::string(line.substr(3)));
  if (line.starts_with("ERR ")) {
    std::string_view rest = line.substr(4);
    const auto space = rest.find(' ');
    const std::string_view code_text = rest.substr(0, space);
    double code = 0;
    if (!text::parse_decimal(code_text, code)) return std::nullopt;
    const std::string message = space == std::string_view::npos ? "" : std::string(rest.substr(space + 1));
    return Reply::failure(static_cast<int>(code), message);
  }
  return std::nullopt;
}

std::optional<double> field(std::string_view payload, std::string_view key) {
  for (std::string_view token : text::split_ws(payload)) {
    if (token.size() > key.size() && token.starts_with(key) && token[key.size()] == '=') {
      double v = 0;
      if (text::parse_double(token.substr(key.size() + 1), v)) return v;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace glide::protocol
