#include "glide/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "glide/text.hpp"

namespace glide {

void ServoModel::validate() const {
  if (!(max_rate_rad_s > 0)) throw std::invalid_argument("servo max rate must be positive");
  if (!(theta_min_rad < theta_max_rad)) throw std::invalid_argument("empty servo range");
}

DeviceState initial_state(const LinkageGeometryd& geom, const ContactStated& contact) {
  DeviceState st;
  st.angles = contact_to_angles(geom, contact);
  return st;
}

DeviceState step(const DeviceState& state, const ActuatorFrame& command, double dt_s, const ServoModel& servo,
                 const VibrationModel& vib) {
  if (!(dt_s > 0)) throw std::invalid_argument("step requires dt > 0");
  DeviceState next = state;
  next.time_s = state.time_s + dt_s;
  next.clamped = false;

  const double max_move = servo.max_rate_rad_s * dt_s;
  auto track = [&](double actual, double wanted, double& error) {
    const double target = std::clamp(wanted, servo.theta_min_rad, servo.theta_max_rad);
    if (target != wanted) next.clamped = true;
    const double moved = actual + std::clamp(target - actual, -max_move, max_move);
    error = std::abs(target - moved);
    return moved;
  };
  next.angles.theta1 = track(state.angles.theta1, command.angles.theta1, next.tracking_error_rad[0]);
  next.angles.theta2 = track(state.angles.theta2, command.angles.theta2, next.tracking_error_rad[1]);

  const double gain = std::min(1.0, dt_s / vib.tau_s);
  auto spin = [&](double actual, double wanted) {
    const double cmd = std::clamp(wanted, 0.0, vib.f_max_hz);
    return std::clamp(actual + (cmd - actual) * gain, 0.0, vib.f_max_hz);
  };
  next.vib.f_proximal_hz = spin(state.vib.f_proximal_hz, command.vibration.f_proximal_hz);
  next.vib.f_distal_hz = spin(state.vib.f_distal_hz, command.vibration.f_distal_hz);
  return next;
}

Telemetry make_telemetry(const LinkageGeometryd& geom, const JointAnglesd& previous, const DeviceState& state,
                         double deadband_rad) {
  Telemetry t;
  t.time_s = state.time_s;
  t.angles = state.angles;
  t.vib = state.vib;
  t.contact = point_to_contact(geom, forward_kinematics(geom, state.angles));
  t.motion = classify_motion(previous, state.angles, deadband_rad);
  return t;
}

RunResult run_trajectory(const DeviceState& state, const Trajectory& traj, const LinkageGeometryd& geom,
                         const ServoModel& servo, const VibrationModel& vib) {
  if (traj.frames.empty() || !(traj.tick_rate_hz > 0)) throw std::invalid_argument("invalid trajectory");
  const double dt = 1.0 / traj.tick_rate_hz;
  RunResult result;
  result.final_state = state;
  result.telemetry.reserve(traj.frames.size());
  for (const ActuatorFrame& frame : traj.frames) {
    const JointAnglesd before = result.final_state.angles;
    result.final_state = step(result.final_state, frame, dt, servo, vib);
    result.telemetry.push_back(make_telemetry(geom, before, result.final_state));
  }
  return result;
}

std::string format_telemetry(const Telemetry& t) {
  std::string line = "TELEM t=" + text::fixed(t.time_s);
  line += " th1=" + text::fixed(t.angles.theta1);
  line += " th2=" + text::fixed(t.angles.theta2);
  line += " f1=" + text::fixed(t.vib.f_proximal_hz);
  line += " f2=" + text::fixed(t.vib.f_distal_hz);
  line += " s=" + text::fixed(t.contact.position_mm);
  line += " F=" + text::fixed(t.contact.force_n);
  return line;
}

void write_telemetry(std::ostream& out, const std::vector<Telemetry>& stream) {
  for (const Telemetry& t : stream) out << format_telemetry(t) << '\n';
}

}  // namespace glide
