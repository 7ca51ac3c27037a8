#include "glide/device.hpp"

#include <algorithm>
#include <chrono>

#include "glide/text.hpp"

namespace glide {

using protocol::Reply;
namespace errc = protocol::errc;

DeviceCore::DeviceCore(const StackConfig& cfg) : cfg_(cfg), geom_(cfg.geometry()) {
  cfg_.validate();
  const ContactStated rest{0.0, 0.0};
  state_ = initial_state(geom_, rest);
  held_.frame.angles = state_.angles;
  held_.frame.contact = rest;
  latest_ = make_telemetry(geom_, state_.angles, state_, cfg_.deadband_rad);
}

ContactStated DeviceCore::tail_contact() const {
  return queue_.empty() ? held_.frame.contact : queue_.back().frame.contact;
}

void DeviceCore::enqueue(const Trajectory& traj, bool from_pattern) {
  for (const ActuatorFrame& f : traj.frames) queue_.push_back({f, from_pattern});
}

std::string DeviceCore::status_payload() const {
  std::string s = format_telemetry(latest_).substr(6);  // drop "TELEM "
  s += " busy=" + std::string(busy() ? "1" : "0");
  s += " pattern=" + std::string(pattern_active() ? "1" : "0");
  s += " queue=" + std::to_string(queue_.size());
  s += " motion=" + std::string(to_string(latest_.motion));
  return s;
}

Reply DeviceCore::apply(const protocol::Command& cmd) {
  using namespace protocol;
  return std::visit(
      [&](const auto& c) -> Reply {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Ping>) {
          return Reply::success("pong");
        } else if constexpr (std::is_same_v<T, Status>) {
          return Reply::success(status_payload());
        } else if constexpr (std::is_same_v<T, Subscribe> || std::is_same_v<T, Unsubscribe>) {
          return Reply::success();
        } else if constexpr (std::is_same_v<T, Stop>) {
          queue_.clear();
          pattern_frames_left_ = 0;
          overlay_ = {};
          // Cut motor power and freeze the servos where they are.
          state_.vib = {};
          held_ = {};
          held_.frame.angles = state_.angles;
          // FK of the measured angles can land a rounding error outside the
          // travel range; later GOTOs start from this contact.
          held_.frame.contact = {std::clamp(latest_.contact.position_mm, 0.0, geom_.travel_len()),
                                 std::clamp(latest_.contact.force_n, 0.0, geom_.max_force())};
          return Reply::success();
        } else if constexpr (std::is_same_v<T, Vib>) {
          overlay_ = c.vib;
          return Reply::success();
        } else if constexpr (std::is_same_v<T, Set> || std::is_same_v<T, Goto>) {
          if (!contact_in_bounds(geom_, c.target)) {
            return Reply::failure(errc::kOutOfRange, "contact outside workspace");
          }
          if constexpr (std::is_same_v<T, Set>) {
            if (pattern_active()) return Reply::failure(errc::kConflict, "pattern playing");
            queue_.clear();
          }
          const Trajectory traj = compile_goto(c.target, tail_contact(), geom_, cfg_.stimulus);
          enqueue(traj, false);
          return Reply::success("duration=" + text::fixed(trajectory_duration(traj)) +
                                " frames=" + std::to_string(traj.frames.size()));
        } else if constexpr (std::is_same_v<T, PlayPattern>) {
          if (pattern_active()) return Reply::failure(errc::kConflict, "pattern playing");
          const PatternSpec spec = pattern_spec(c.id);
          const Trajectory traj = compile_pattern(spec, geom_, cfg_.stimulus);
          const ContactStated start = traj.frames.front().contact;
          double lead_in = 0.0;
          // Frames already queued ahead of the pattern plus its own frames.
          std::size_t before = queue_.size();
          if (tail_contact() != start) {
            const Trajectory approach = compile_goto(start, tail_contact(), geom_, cfg_.stimulus);
            lead_in = static_cast<double>(approach.frames.size()) * tick_period();
            for (const ActuatorFrame& f : approach.frames) queue_.push_back({f, true});
          }
          const double start_in = static_cast<double>(before) * tick_period() + lead_in;
          enqueue(traj, true);
          pattern_frames_left_ = queue_.size();
          return Reply::success("t=" + text::fixed(state_.time_s) + " start_in=" + text::fixed(start_in) +
                                " duration=" + text::fixed(nominal_duration(spec, cfg_.stimulus)) +
                                " frames=" + std::to_string(traj.frames.size()));
        }
      },
      cmd);
}

Telemetry DeviceCore::tick() {
  if (!queue_.empty()) {
    held_ = queue_.front();
    queue_.pop_front();
    if (pattern_frames_left_ > 0) --pattern_frames_left_;
  } else if (held_.from_pattern) {
    // Pattern finished: keep the contact, drop its vibration.
    held_.from_pattern = false;
  }
  ActuatorFrame command = held_.frame;
  if (!held_.from_pattern) command.vibration = overlay_;

  const JointAnglesd before = state_.angles;
  state_ = step(state_, command, tick_period(), cfg_.servo, cfg_.vibration);
  try {
    latest_ = make_telemetry(geom_, before, state_, cfg_.deadband_rad);
  } catch (const KinematicsError&) {
    // Transient pose off the working mode: report angles, keep last contact.
    const ContactStated contact = latest_.contact;
    latest_.time_s = state_.time_s;
    latest_.angles = state_.angles;
    latest_.vib = state_.vib;
    latest_.contact = contact;
    latest_.motion = classify_motion(before, state_.angles, cfg_.deadband_rad);
  }
  return latest_;
}

void TelemetrySubscription::push(const Telemetry& t) {
  {
    std::lock_guard lock(m_);
    if (buffer_.size() >= capacity_) {
      buffer_.pop_front();
      ++dropped_;
    }
    buffer_.push_back(t);
  }
  cv_.notify_one();
}

std::vector<Telemetry> TelemetrySubscription::drain(std::chrono::microseconds timeout) {
  std::unique_lock lock(m_);
  if (buffer_.empty() && timeout.count() > 0) cv_.wait_for(lock, timeout, [&] { return !buffer_.empty(); });
  std::vector<Telemetry> out(buffer_.begin(), buffer_.end());
  buffer_.clear();
  return out;
}

std::uint64_t TelemetrySubscription::dropped() const {
  std::lock_guard lock(m_);
  return dropped_;
}

DeviceHost::DeviceHost(const StackConfig& cfg) : cfg_(cfg), core_(cfg), latest_(core_.latest()) {}

DeviceHost::~DeviceHost() { stop(); }

void DeviceHost::start() {
  std::lock_guard lock(m_);
  if (running_) return;
  running_ = true;
  stopping_ = false;
  owner_ = std::thread([this] { run(); });
}

void DeviceHost::stop() {
  {
    std::lock_guard lock(m_);
    if (!running_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (owner_.joinable()) owner_.join();
  std::lock_guard lock(m_);
  running_ = false;
  for (Pending& p : inbox_) p.reply.set_value(Reply::failure(errc::kDevice, "device stopped"));
  inbox_.clear();
}

Reply DeviceHost::execute(const protocol::Command& cmd) {
  std::future<Reply> result;
  {
    std::lock_guard lock(m_);
    if (!running_ || stopping_) return Reply::failure(errc::kDevice, "device not running");
    inbox_.push_back({cmd, {}});
    result = inbox_.back().reply.get_future();
  }
  cv_.notify_all();
  return result.get();
}

std::shared_ptr<TelemetrySubscription> DeviceHost::subscribe() {
  auto sub = std::make_shared<TelemetrySubscription>(cfg_.server.telemetry_buffer);
  std::lock_guard lock(subs_m_);
  subs_.push_back(sub);
  return sub;
}

void DeviceHost::unsubscribe(const std::shared_ptr<TelemetrySubscription>& sub) {
  std::lock_guard lock(subs_m_);
  std::erase(subs_, sub);
}

Telemetry DeviceHost::latest() const {
  std::lock_guard lock(m_);
  return latest_;
}

void DeviceHost::publish(const Telemetry& t) {
  std::lock_guard lock(subs_m_);
  for (const auto& sub : subs_) sub->push(t);
}

void DeviceHost::run() {
  using clock = std::chrono::steady_clock;
  const double scale = cfg_.server.time_scale;
  const bool throttled = scale > 0;
  const auto period = throttled ? std::chrono::duration_cast<clock::duration>(
                                      std::chrono::duration<double>(core_.tick_period() / scale))
                                : clock::duration::zero();
  auto next_tick = clock::now() + period;

  std::unique_lock lock(m_);
  while (!stopping_) {
    if (throttled) {
      cv_.wait_until(lock, next_tick, [&] { return stopping_ || !inbox_.empty(); });
      if (stopping_) break;
    }
    while (!inbox_.empty()) {
      Pending p = std::move(inbox_.front());
      inbox_.pop_front();
      Reply r;
      try {
        r = core_.apply(p.cmd);
      } catch (const std::exception& e) {
        r = Reply::failure(errc::kDevice, e.what());
      }
      p.reply.set_value(std::move(r));
    }
    if (!throttled || clock::now() >= next_tick) {
      const Telemetry t = core_.tick();
      latest_ = t;
      lock.unlock();
      publish(t);
      lock.lock();
      next_tick += period;
      // Never try to catch up on more than a handful of missed ticks.
      if (throttled && clock::now() - next_tick > 10 * period) next_tick = clock::now() + period;
    }
  }
}

}  // namespace glide
