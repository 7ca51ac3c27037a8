#pragma once

#include <array>
#include <iosfwd>
#include <numbers>
#include <string>
#include <vector>

#include "glide/kinematics.hpp"
#include "glide/stimulus.hpp"

namespace glide {

/// Hobby-servo class defaults: about 0.12 s per 60 degrees.
struct ServoModel {
  double max_rate_rad_s{8.7};
  double theta_min_rad{-std::numbers::pi};
  double theta_max_rad{0.0};

  void validate() const;
};

/// First-order ERM spin-up.
struct VibrationModel {
  double tau_s{0.020};
  double f_max_hz{500.0};
};

struct DeviceState {
  JointAnglesd angles;
  VibrationCommand vib;
  double time_s{0};
  std::array<double, 2> tracking_error_rad{0, 0};
  bool clamped{false};  // last command was outside the servo range
};

struct Telemetry {
  double time_s{0};
  JointAnglesd angles;
  VibrationCommand vib;
  ContactStated contact;
  MotionKind motion{MotionKind::None};
};

/// Device resting at the given contact state.
DeviceState initial_state(const LinkageGeometryd& geom, const ContactStated& contact);

/// Advance the device by dt toward the commanded frame.  Servos are rate
/// limited; out-of-range commands are clamped and flagged, never rejected.
DeviceState step(const DeviceState& state, const ActuatorFrame& command, double dt_s, const ServoModel& servo,
                 const VibrationModel& vib = {});

Telemetry make_telemetry(const LinkageGeometryd& geom, const JointAnglesd& previous, const DeviceState& state,
                         double deadband_rad = 1e-4);

struct RunResult {
  DeviceState final_state;
  std::vector<Telemetry> telemetry;
};

/// One step and one telemetry record per trajectory frame.
RunResult run_trajectory(const DeviceState& state, const Trajectory& traj, const LinkageGeometryd& geom,
                         const ServoModel& servo, const VibrationModel& vib = {});

/// "TELEM t=<s> th1=<rad> th2=<rad> f1=<Hz> f2=<Hz> s=<mm> F=<N>", six decimals, no newline.
std::string format_telemetry(const Telemetry& t);

void write_telemetry(std::ostream& out, const std::vector<Telemetry>& stream);

}  // namespace glide
