#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "glide/config.hpp"
#include "glide/protocol.hpp"
#include "glide/simulator.hpp"

namespace glide {

/// Single-threaded device model: command semantics, the frame queue and one
/// simulator tick at a time.  DeviceHost drives it from its owner thread.
///
/// Queue policy: GOTO appends, SET replaces whatever motion is queued, and
/// PATTERN is refused with 409 while another pattern is still playing.  When
/// the queue runs dry the last commanded contact is held with vibration set
/// to the VIB overlay (zero unless VIB was sent).
class DeviceCore {
 public:
  explicit DeviceCore(const StackConfig& cfg);

  /// SUBSCRIBE/UNSUBSCRIBE are connection concerns and only acknowledged here.
  protocol::Reply apply(const protocol::Command& cmd);

  Telemetry tick();

  const Telemetry& latest() const { return latest_; }
  const DeviceState& state() const { return state_; }
  const LinkageGeometryd& geometry() const { return geom_; }
  const StackConfig& config() const { return cfg_; }
  double tick_period() const { return 1.0 / cfg_.stimulus.tick_rate_hz; }

  bool busy() const { return !queue_.empty(); }
  bool pattern_active() const { return pattern_frames_left_ > 0; }
  std::size_t queued_frames() const { return queue_.size(); }

 private:
  struct QueuedFrame {
    ActuatorFrame frame;
    bool from_pattern{false};
  };

  ContactStated tail_contact() const;
  void enqueue(const Trajectory& traj, bool from_pattern);
  std::string status_payload() const;

  StackConfig cfg_;
  LinkageGeometryd geom_;
  DeviceState state_;
  Telemetry latest_;
  std::deque<QueuedFrame> queue_;
  std::size_t pattern_frames_left_{0};
  QueuedFrame held_;
  VibrationCommand overlay_;
};

/// Bounded per-subscriber telemetry buffer.  The publisher never blocks; a
/// full buffer drops its oldest record.
class TelemetrySubscription {
 public:
  explicit TelemetrySubscription(std::size_t capacity) : capacity_(capacity) {}

  void push(const Telemetry& t);
  /// Everything buffered so far; waits up to `timeout` when empty.
  std::vector<Telemetry> drain(std::chrono::microseconds timeout);
  std::uint64_t dropped() const;

 private:
  std::size_t capacity_;
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::deque<Telemetry> buffer_;
  std::uint64_t dropped_{0};
};

/// Owns the device.  One thread consumes submitted commands and the tick
/// clock; every other thread talks to it through execute() and subscribe().
class DeviceHost {
 public:
  explicit DeviceHost(const StackConfig& cfg);
  ~DeviceHost();

  DeviceHost(const DeviceHost&) = delete;
  DeviceHost& operator=(const DeviceHost&) = delete;

  void start();
  void stop();

  /// Blocks until the owner thread has applied the command.
  protocol::Reply execute(const protocol::Command& cmd);

  std::shared_ptr<TelemetrySubscription> subscribe();
  void unsubscribe(const std::shared_ptr<TelemetrySubscription>& sub);

  Telemetry latest() const;
  const StackConfig& config() const { return cfg_; }

 private:
  struct Pending {
    protocol::Command cmd;
    std::promise<protocol::Reply> reply;
  };

  void run();
  void publish(const Telemetry& t);

  StackConfig cfg_;
  DeviceCore core_;
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::deque<Pending> inbox_;
  bool running_{false};
  bool stopping_{false};
  Telemetry latest_;
  std::thread owner_;

  std::mutex subs_m_;
  std::vector<std::shared_ptr<TelemetrySubscription>> subs_;
};

}  // namespace glide
