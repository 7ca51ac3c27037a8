#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "glide/config.hpp"
#include "glide/device.hpp"
#include "glide/protocol.hpp"

namespace glide {

/// TCP front end for a DeviceHost.  Two listeners speak the same line
/// protocol: plain TCP, and a WebSocket bridge for browsers (one line per
/// text message).  Each connection is served sequentially on its own thread;
/// device mutations all funnel through the host's owner thread.
class Server {
 public:
  /// Port 0 binds an ephemeral port; a negative ws_port disables the bridge.
  Server(DeviceHost& device, ServerOptions options, protocol::Limits limits);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Throws std::system_error when a listener cannot bind.
  void start();
  void stop();

  int port() const { return tcp_.port; }
  int ws_port() const { return ws_.port; }

 private:
  struct Listener {
    int fd{-1};
    int port{-1};
    bool websocket{false};
    std::thread acceptor;
  };
  struct Connection {
    int fd{-1};
    std::thread worker;
    std::atomic<bool> done{false};
  };

  void open_listener(Listener& l, int port);
  void accept_loop(Listener& l);
  void serve(Connection& conn, bool websocket);
  void reap_finished();

  DeviceHost& device_;
  ServerOptions options_;
  protocol::Limits limits_;
  std::atomic<bool> running_{false};
  Listener tcp_;
  Listener ws_;
  std::mutex conns_m_;
  std::vector<std::unique_ptr<Connection>> conns_;
};

}  // namespace glide
