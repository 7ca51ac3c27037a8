#include "glide/client.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace glide {

LineClient::LineClient(const std::string& host, int port, std::chrono::milliseconds timeout) : timeout_(timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw ConnectionError("cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0 || ::connect(fd_, res->ai_addr, res->ai_addrlen) < 0) {
    const std::string why = std::strerror(errno);
    ::freeaddrinfo(res);
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    throw ConnectionError("connect " + host + ":" + service + ": " + why);
  }
  ::freeaddrinfo(res);
  const int yes = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
}

LineClient::~LineClient() {
  if (fd_ >= 0) ::close(fd_);
}

void LineClient::send_raw(std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ConnectionError(std::string("send: ") + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string LineClient::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (const auto lf = buffer_.find('\n'); lf != std::string::npos) {
      std::string line = buffer_.substr(0, lf);
      buffer_.erase(0, lf + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw ConnectionError("timed out waiting for the server");
    pollfd p{fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno != EINTR) throw ConnectionError(std::string("poll: ") + std::strerror(errno));
    if (ready <= 0) continue;
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) throw ConnectionError("connection closed by server");
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

protocol::Reply LineClient::read_reply() {
  for (;;) {
    std::string line = read_line();
    if (line.starts_with("TELEM ")) {
      telemetry_.push_back(std::move(line));
      continue;
    }
    if (auto reply = protocol::parse_reply(line)) return *reply;
    throw ConnectionError("unexpected line from server: " + line);
  }
}

protocol::Reply LineClient::request(const protocol::Command& cmd) { return request_line(protocol::serialize(cmd)); }

protocol::Reply LineClient::request_line(std::string_view line) {
  std::string out(line);
  if (out.empty() || out.back() != '\n') out.push_back('\n');
  send_raw(out);
  return read_reply();
}

std::vector<std::string> LineClient::take_telemetry() {
  std::vector<std::string> out(telemetry_.begin(), telemetry_.end());
  telemetry_.clear();
  return out;
}

std::vector<std::string> LineClient::wait_telemetry(std::size_t count) {
  while (telemetry_.size() < count) {
    std::string line = read_line();
    if (line.starts_with("TELEM ")) telemetry_.push_back(std::move(line));
  }
  return take_telemetry();
}

}  // namespace glide
