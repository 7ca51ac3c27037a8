#include "glide/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <system_error>

#include "glide/simulator.hpp"
#include "glide/websocket.hpp"

namespace glide {
namespace {

bool send_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Splits a byte stream into LF-terminated lines.  A line that outgrows the
// protocol limit is emitted once (so it can be rejected) and the rest of it
// is discarded up to the next LF.
class LineAssembler {
 public:
  std::vector<std::string> feed(std::string_view bytes) {
    std::vector<std::string> lines;
    for (char c : bytes) {
      if (discarding_) {
        if (c == '\n') discarding_ = false;
        continue;
      }
      current_.push_back(c);
      if (c == '\n') {
        lines.push_back(std::move(current_));
        current_.clear();
      } else if (current_.size() > protocol::kMaxLineBytes) {
        lines.push_back(std::move(current_));
        current_.clear();
        discarding_ = true;
      }
    }
    return lines;
  }

 private:
  std::string current_;
  bool discarding_{false};
};

// Byte-level framing for one connection: plain lines, or WebSocket messages
// carrying lines.
class Transport {
 public:
  Transport(int fd, bool websocket) : fd_(fd), websocket_(websocket) {}

  bool handshake() {
    if (!websocket_) return true;
    std::string head;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (head.find("\r\n\r\n") == std::string::npos) {
      if (head.size() > 8192 || std::chrono::steady_clock::now() > deadline) return false;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      char buf[1024];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) return false;
      head.append(buf, static_cast<std::size_t>(n));
    }
    const auto split = head.find("\r\n\r\n");
    const auto key = ws::header_value(std::string_view(head).substr(0, split), "Sec-WebSocket-Key");
    if (!key) {
      send_all(fd_, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
      return false;
    }
    if (!send_all(fd_, ws::handshake_response(*key))) return false;
    // Anything after the head already belongs to the frame stream.
    decoder_.feed(std::string_view(head).substr(split + 4));
    return true;
  }

  /// False once the peer has gone away.
  bool receive(std::vector<std::string>& lines) {
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) return false;
    const std::string_view bytes(buf, static_cast<std::size_t>(n));
    if (!websocket_) {
      for (auto& l : lines_.feed(bytes)) lines.push_back(std::move(l));
      return true;
    }
    decoder_.feed(bytes);
    return drain_frames(lines);
  }

  bool drain_frames(std::vector<std::string>& lines) {
    while (auto frame = decoder_.next()) {
      switch (frame->op) {
        case ws::Opcode::Close:
          send_all(fd_, ws::encode_frame(frame->payload.substr(0, 2), ws::Opcode::Close));
          return false;
        case ws::Opcode::Ping:
          if (!send_all(fd_, ws::encode_frame(frame->payload, ws::Opcode::Pong))) return false;
          break;
        case ws::Opcode::Pong:
          break;
        case ws::Opcode::Text:
        case ws::Opcode::Binary:
        case ws::Opcode::Continuation:
          message_ += frame->payload;
          if (frame->fin) {
            split_message(lines);
            message_.clear();
          }
          break;
      }
    }
    return !decoder_.error();
  }

  bool write(std::string_view line) {
    if (!websocket_) return send_all(fd_, line);
    return send_all(fd_, ws::encode_frame(line, ws::Opcode::Text));
  }

 private:
  void split_message(std::vector<std::string>& lines) {
    std::string_view rest = message_;
    while (!rest.empty()) {
      const auto lf = rest.find('\n');
      if (lf == std::string_view::npos) {
        lines.emplace_back(rest);
        break;
      }
      lines.emplace_back(rest.substr(0, lf + 1));
      rest.remove_prefix(lf + 1);
    }
  }

  int fd_;
  bool websocket_;
  LineAssembler lines_;
  ws::FrameDecoder decoder_;
  std::string message_;
};

}  // namespace

Server::Server(DeviceHost& device, ServerOptions options, protocol::Limits limits)
    : device_(device), options_(std::move(options)), limits_(limits) {
  ws_.websocket = true;
}

Server::~Server() { stop(); }

void Server::open_listener(Listener& l, int port) {
  l.fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (l.fd < 0) throw std::system_error(errno, std::generic_category(), "socket");
  const int yes = 1;
  ::setsockopt(l.fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(l.fd);
    l.fd = -1;
    throw std::system_error(EINVAL, std::generic_category(), "bad listen address " + options_.host);
  }
  if (::bind(l.fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(l.fd, 16) < 0) {
    const int err = errno;
    ::close(l.fd);
    l.fd = -1;
    throw std::system_error(err, std::generic_category(), "bind " + options_.host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(l.fd, reinterpret_cast<sockaddr*>(&addr), &len);
  l.port = ntohs(addr.sin_port);
}

void Server::start() {
  if (running_) return;
  open_listener(tcp_, options_.port);
  if (options_.ws_port >= 0) {
    try {
      open_listener(ws_, options_.ws_port);
    } catch (...) {
      ::close(tcp_.fd);
      tcp_.fd = -1;
      throw;
    }
  }
  running_ = true;
  tcp_.acceptor = std::thread([this] { accept_loop(tcp_); });
  if (ws_.fd >= 0) ws_.acceptor = std::thread([this] { accept_loop(ws_); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  for (Listener* l : {&tcp_, &ws_}) {
    if (l->acceptor.joinable()) l->acceptor.join();
    if (l->fd >= 0) ::close(l->fd);
    l->fd = -1;
  }
  std::vector<std::unique_ptr<Connection>> conns;
  {
    std::lock_guard lock(conns_m_);
    conns.swap(conns_);
  }
  for (auto& c : conns) {
    if (!c->done) ::shutdown(c->fd, SHUT_RDWR);
  }
  for (auto& c : conns) {
    if (c->worker.joinable()) c->worker.join();
  }
}

void Server::reap_finished() {
  std::lock_guard lock(conns_m_);
  std::erase_if(conns_, [](std::unique_ptr<Connection>& c) {
    if (!c->done) return false;
    if (c->worker.joinable()) c->worker.join();
    return true;
  });
}

void Server::accept_loop(Listener& l) {
  while (running_) {
    pollfd p{l.fd, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) {
      reap_finished();
      continue;
    }
    const int fd = ::accept(l.fd, nullptr, nullptr);
    if (fd < 0) continue;
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    auto conn = std::make_unique<Connection>();
    conn->fd = fd;
    Connection& ref = *conn;
    std::lock_guard lock(conns_m_);
    conns_.push_back(std::move(conn));
    ref.worker = std::thread([this, &ref, ws = l.websocket] { serve(ref, ws); });
  }
}

void Server::serve(Connection& conn, bool websocket) {
  Transport transport(conn.fd, websocket);
  std::shared_ptr<TelemetrySubscription> sub;
  bool alive = transport.handshake();

  auto handle = [&](const std::string& line) {
    const protocol::ParseResult parsed = protocol::parse_command(line, limits_);
    protocol::Reply reply;
    if (const auto* err = std::get_if<protocol::ProtocolError>(&parsed)) {
      reply = protocol::Reply::failure(*err);
    } else {
      const auto& cmd = std::get<protocol::Command>(parsed);
      if (std::holds_alternative<protocol::Subscribe>(cmd)) {
        if (!sub) sub = device_.subscribe();
        reply = protocol::Reply::success("subscribed");
      } else if (std::holds_alternative<protocol::Unsubscribe>(cmd)) {
        if (sub) device_.unsubscribe(sub);
        sub.reset();
        reply = protocol::Reply::success("unsubscribed");
      } else {
        reply = device_.execute(cmd);
      }
    }
    return transport.write(protocol::serialize(reply));
  };

  std::vector<std::string> lines;
  while (alive && running_) {
    pollfd p{conn.fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, sub ? 2 : 50);
    if (ready > 0) {
      if (p.revents & (POLLIN | POLLHUP | POLLERR)) {
        lines.clear();
        alive = transport.receive(lines);
        for (const std::string& line : lines) {
          if (!handle(line)) {
            alive = false;
            break;
          }
        }
      }
    }
    if (sub && alive) {
      for (const Telemetry& t : sub->drain(std::chrono::microseconds(0))) {
        if (!transport.write(format_telemetry(t) + "\n")) {
          alive = false;
          break;
        }
      }
    }
  }
  if (sub) device_.unsubscribe(sub);
  ::close(conn.fd);
  conn.done = true;
}

}  // namespace glide
