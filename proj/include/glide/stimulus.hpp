#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "glide/kinematics.hpp"

namespace glide {

/// The six-pattern bank: three slide distances, each with and without the
/// position-progressive vibration.
enum class PatternId { SD, MD, LD, SDV, MDV, LDV };

inline constexpr int kPatternCount = 6;
inline constexpr std::array<PatternId, kPatternCount> kAllPatterns{
    PatternId::SD, PatternId::MD, PatternId::LD, PatternId::SDV, PatternId::MDV, PatternId::LDV};

constexpr int index_of(PatternId id) { return static_cast<int>(id); }
std::string_view to_string(PatternId id);
/// Case-insensitive.
std::optional<PatternId> parse_pattern_id(std::string_view text);

struct PatternSpec {
  PatternId id{PatternId::SD};
  double progress_fraction{0.25};
  bool vibration_enabled{false};
};

PatternSpec pattern_spec(PatternId id);

struct VibrationCommand {
  double f_proximal_hz{0};
  double f_distal_hz{0};

  friend bool operator==(const VibrationCommand&, const VibrationCommand&) = default;
};

enum class VibrationLaw { Linear };

struct StimulusConfig {
  double slide_speed_mm_s{23.0};
  double f_max_hz{500.0};
  double tick_rate_hz{100.0};
  double travel_len_mm{100.0};
  double baseline_force_n{0.5};
  double force_rate_n_s{4.0};
  VibrationLaw law{VibrationLaw::Linear};

  /// Throws std::invalid_argument on a non-positive field.
  void validate() const;
};

struct ActuatorFrame {
  double t_s{0};
  JointAnglesd angles;
  VibrationCommand vibration;
  ContactStated contact;
};

struct Trajectory {
  std::vector<ActuatorFrame> frames;
  double tick_rate_hz{100.0};
};

/// Dual-motor law: the motor nearer the contact vibrates faster, both equal
/// at mid-travel.  Throws std::domain_error for s outside [0, L].
VibrationCommand vibration_profile(double s_mm, const StimulusConfig& cfg, bool enabled);

/// Slide from s = 0 to progress * L at constant speed, holding the baseline
/// force.  The last frame lands exactly on the target.
Trajectory compile_pattern(const PatternSpec& pattern, const LinkageGeometryd& geom, const StimulusConfig& cfg);

/// Constant-speed slide in s with a linear force ramp over the same window.
/// Vibration is zero on every frame.
Trajectory compile_goto(const ContactStated& target, const ContactStated& current, const LinkageGeometryd& geom,
                        const StimulusConfig& cfg);

double trajectory_duration(const Trajectory& traj);

/// Travel distance over slide speed, before tick quantization.
double nominal_duration(const PatternSpec& pattern, const StimulusConfig& cfg);

/// One line per frame: "t=.. th1=.. th2=.. f1=.. f2=.. s=.. F=..".
void write_trajectory(std::ostream& out, const Trajectory& traj);

}  // namespace glide
