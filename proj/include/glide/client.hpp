#pragma once

#include <chrono>
#include <deque>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "glide/protocol.hpp"

namespace glide {

class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Anything that answers protocol commands with replies.
class DeviceLink {
 public:
  virtual ~DeviceLink() = default;
  virtual protocol::Reply request(const protocol::Command& cmd) = 0;
};

/// Blocking line-protocol client.  TELEM lines that arrive while waiting for
/// a reply are kept aside and can be collected with take_telemetry().
class LineClient : public DeviceLink {
 public:
  LineClient(const std::string& host, int port,
             std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
  ~LineClient() override;

  LineClient(const LineClient&) = delete;
  LineClient& operator=(const LineClient&) = delete;

  protocol::Reply request(const protocol::Command& cmd) override;
  protocol::Reply request_line(std::string_view line);

  void send_raw(std::string_view bytes);
  /// Next line without its LF.  Throws ConnectionError on timeout or EOF.
  std::string read_line();
  protocol::Reply read_reply();

  std::vector<std::string> take_telemetry();
  /// Waits until at least `count` TELEM lines have been buffered.
  std::vector<std::string> wait_telemetry(std::size_t count);

 private:
  int fd_{-1};
  std::chrono::milliseconds timeout_;
  std::string buffer_;
  std::deque<std::string> telemetry_;
};

}  // namespace glide
