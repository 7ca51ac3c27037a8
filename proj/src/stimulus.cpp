#include "glide/stimulus.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "glide/text.hpp"

namespace glide {
namespace {

constexpr std::array<std::string_view, kPatternCount> kPatternNames{"SD", "MD", "LD", "SDV", "MDV", "LDV"};

void check_shared_travel(const LinkageGeometryd& geom, const StimulusConfig& cfg) {
  if (std::abs(geom.travel_len() - cfg.travel_len_mm) > 1e-12) {
    throw std::invalid_argument("stimulus travel length does not match linkage geometry");
  }
}

// Frames needed to cover `duration` at the tick rate, endpoints included.
std::size_t frame_count(double duration_s, double tick_rate_hz) {
  return static_cast<std::size_t>(std::ceil(duration_s * tick_rate_hz - 1e-9)) + 1;
}

ActuatorFrame make_frame(const LinkageGeometryd& geom, double t, const ContactStated& contact,
                         const VibrationCommand& vib) {
  ActuatorFrame frame;
  frame.t_s = t;
  frame.contact = contact;
  frame.vibration = vib;
  frame.angles = contact_to_angles(geom, contact);
  return frame;
}

}  // namespace

std::string_view to_string(PatternId id) { return kPatternNames[static_cast<std::size_t>(index_of(id))]; }

std::optional<PatternId> parse_pattern_id(std::string_view text) {
  const std::string key = text::upper(text);
  for (PatternId id : kAllPatterns) {
    if (key == to_string(id)) return id;
  }
  return std::nullopt;
}

PatternSpec pattern_spec(PatternId id) {
  switch (id) {
    case PatternId::SD: return {id, 0.25, false};
    case PatternId::MD: return {id, 0.50, false};
    case PatternId::LD: return {id, 0.75, false};
    case PatternId::SDV: return {id, 0.25, true};
    case PatternId::MDV: return {id, 0.50, true};
    case PatternId::LDV: return {id, 0.75, true};
  }
  throw std::invalid_argument("unknown pattern id");
}

void StimulusConfig::validate() const {
  if (!(slide_speed_mm_s > 0 && f_max_hz > 0 && tick_rate_hz > 0 && travel_len_mm > 0 && baseline_force_n > 0 &&
        force_rate_n_s > 0)) {
    throw std::invalid_argument("stimulus configuration values must be positive");
  }
}

VibrationCommand vibration_profile(double s_mm, const StimulusConfig& cfg, bool enabled) {
  if (!(s_mm >= 0.0 && s_mm <= cfg.travel_len_mm)) {
    throw std::domain_error("contact position " + text::fixed(s_mm) + " mm outside [0, L]");
  }
  if (!enabled) return {};
  const double u = s_mm / cfg.travel_len_mm;
  switch (cfg.law) {
    case VibrationLaw::Linear:
      return {cfg.f_max_hz * (1.0 - u), cfg.f_max_hz * u};
  }
  return {};
}

Trajectory compile_pattern(const PatternSpec& pattern, const LinkageGeometryd& geom, const StimulusConfig& cfg) {
  cfg.validate();
  check_shared_travel(geom, cfg);
  if (!(pattern.progress_fraction >= 0.0 && pattern.progress_fraction <= 1.0)) {
    throw std::invalid_argument("pattern progress must lie in [0, 1]");
  }
  if (cfg.baseline_force_n > geom.max_force()) {
    throw std::invalid_argument("baseline force exceeds the force cap");
  }
  const double target = pattern.progress_fraction * cfg.travel_len_mm;
  const std::size_t n = frame_count(target / cfg.slide_speed_mm_s, cfg.tick_rate_hz);

  Trajectory traj;
  traj.tick_rate_hz = cfg.tick_rate_hz;
  traj.frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.tick_rate_hz;
    const double s = (i + 1 == n) ? target : std::min(cfg.slide_speed_mm_s * t, target);
    traj.frames.push_back(make_frame(geom, t, {s, cfg.baseline_force_n},
                                     vibration_profile(s, cfg, pattern.vibration_enabled)));
  }
  return traj;
}

Trajectory compile_goto(const ContactStated& target, const ContactStated& current, const LinkageGeometryd& geom,
                        const StimulusConfig& cfg) {
  cfg.validate();
  check_shared_travel(geom, cfg);
  if (!contact_in_bounds(geom, target) || !contact_in_bounds(geom, current)) {
    throw std::invalid_argument("contact state outside [0, L] x [0, Fmax]");
  }
  const double ds = target.position_mm - current.position_mm;
  const double df = target.force_n - current.force_n;
  const double window = std::max(std::abs(ds) / cfg.slide_speed_mm_s, std::abs(df) / cfg.force_rate_n_s);

  Trajectory traj;
  traj.tick_rate_hz = cfg.tick_rate_hz;
  if (window == 0.0) {
    traj.frames.push_back(make_frame(geom, 0.0, target, {}));
    return traj;
  }
  const std::size_t n = frame_count(window, cfg.tick_rate_hz);
  traj.frames.reserve(n);
  const double dir = ds < 0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.tick_rate_hz;
    ContactStated c = target;
    if (i + 1 < n) {
      c.position_mm = current.position_mm + dir * std::min(cfg.slide_speed_mm_s * t, std::abs(ds));
      c.force_n = current.force_n + df * std::min(t / window, 1.0);
    }
    traj.frames.push_back(make_frame(geom, t, c, {}));
  }
  return traj;
}

double trajectory_duration(const Trajectory& traj) {
  if (traj.frames.empty()) return 0.0;
  return traj.frames.back().t_s - traj.frames.front().t_s;
}

double nominal_duration(const PatternSpec& pattern, const StimulusConfig& cfg) {
  return pattern.progress_fraction * cfg.travel_len_mm / cfg.slide_speed_mm_s;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  for (const ActuatorFrame& f : traj.frames) {
    out << "t=" << text::fixed(f.t_s) << " th1=" << text::fixed(f.angles.theta1)
        << " th2=" << text::fixed(f.angles.theta2) << " f1=" << text::fixed(f.vibration.f_proximal_hz)
        << " f2=" << text::fixed(f.vibration.f_distal_hz) << " s=" << text::fixed(f.contact.position_mm)
        << " F=" << text::fixed(f.contact.force_n) << '\n';
  }
}

}  // namespace glide
