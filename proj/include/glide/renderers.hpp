#pragma once

#include <iosfwd>
#include <variant>
#include <vector>

#include "glide/kinematics.hpp"
#include "glide/protocol.hpp"
#include "glide/stimulus.hpp"

namespace glide {

/// Forearm below a liquid surface.  Both fields normalized to [0, 1].
struct SubmersionState {
  double immersion_fraction{0};
  double viscosity{0};
};

enum class BoundarySide { Proximal, Distal };

struct BoundaryEvent {
  BoundarySide side{BoundarySide::Proximal};
  double penetration_mm{0};
};

struct RendererConfig {
  double submersion_vib_hz{300.0};
  double boundary_f0_hz{200.0};
  double boundary_gain_hz_per_mm{30.0};
};

struct HapticOutput {
  ContactStated contact;
  VibrationCommand vib;
};

/// Liquid level maps to contact position, viscosity to force and to a
/// symmetric vibration on both motors.  A dry arm gets no stimulus at all.
HapticOutput render_submersion(const SubmersionState& st, const LinkageGeometryd& geom, const StimulusConfig& cfg,
                               const RendererConfig& rcfg = {});

/// Contact jumps to the collision side; only that side's motor vibrates,
/// harder with deeper penetration up to the frequency ceiling.
HapticOutput render_boundary(const BoundaryEvent& ev, const LinkageGeometryd& geom, const StimulusConfig& cfg,
                             const RendererConfig& rcfg = {});

struct TimelineEvent {
  double t_s{0};
  std::variant<SubmersionState, BoundaryEvent> state;
};

/// Scripted environment timeline, one event per line:
///   t=0.50 immersion=0.3 viscosity=0.8
///   t=1.25 boundary=distal penetration=4
/// Blank lines and '#' comments are skipped.  Times must not decrease.
/// Throws std::runtime_error with the offending line number.
std::vector<TimelineEvent> parse_timeline(std::istream& in);

HapticOutput render(const TimelineEvent& ev, const LinkageGeometryd& geom, const StimulusConfig& cfg,
                    const RendererConfig& rcfg);

/// Wire commands realizing an output: the vibration overlay first, then an
/// immediate move.
std::vector<protocol::Command> to_commands(const HapticOutput& out);

}  // namespace glide
