#include "glide/renderers.hpp"

#include <algorithm>
#include <istream>
#include <stdexcept>
#include <string>

#include "glide/text.hpp"

namespace glide {

HapticOutput render_submersion(const SubmersionState& st, const LinkageGeometryd& geom, const StimulusConfig& cfg,
                               const RendererConfig& rcfg) {
  if (!(st.immersion_fraction >= 0 && st.immersion_fraction <= 1 && st.viscosity >= 0 && st.viscosity <= 1)) {
    throw std::invalid_argument("submersion state outside [0, 1]");
  }
  HapticOutput out;
  if (st.immersion_fraction == 0.0) return out;
  out.contact.position_mm = st.immersion_fraction * geom.travel_len();
  out.contact.force_n = st.viscosity * geom.max_force();
  const double f = std::min(st.viscosity * rcfg.submersion_vib_hz, cfg.f_max_hz);
  out.vib = {f, f};
  return out;
}

HapticOutput render_boundary(const BoundaryEvent& ev, const LinkageGeometryd& geom, const StimulusConfig& cfg,
                             const RendererConfig& rcfg) {
  if (!(ev.penetration_mm >= 0)) throw std::invalid_argument("penetration must be non-negative");
  HapticOutput out;
  out.contact.force_n = std::min(cfg.baseline_force_n, geom.max_force());
  const double f = std::min(cfg.f_max_hz, rcfg.boundary_f0_hz + rcfg.boundary_gain_hz_per_mm * ev.penetration_mm);
  if (ev.side == BoundarySide::Proximal) {
    out.contact.position_mm = 0.0;
    out.vib = {f, 0.0};
  } else {
    out.contact.position_mm = geom.travel_len();
    out.vib = {0.0, f};
  }
  return out;
}

HapticOutput render(const TimelineEvent& ev, const LinkageGeometryd& geom, const StimulusConfig& cfg,
                    const RendererConfig& rcfg) {
  if (const auto* sub = std::get_if<SubmersionState>(&ev.state)) return render_submersion(*sub, geom, cfg, rcfg);
  return render_boundary(std::get<BoundaryEvent>(ev.state), geom, cfg, rcfg);
}

std::vector<protocol::Command> to_commands(const HapticOutput& out) {
  return {protocol::Vib{out.vib}, protocol::Set{out.contact}};
}

std::vector<TimelineEvent> parse_timeline(std::istream& in) {
  std::vector<TimelineEvent> events;
  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("timeline line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;

    std::optional<double> t, immersion, viscosity, penetration;
    std::optional<BoundarySide> side;
    for (std::string_view token : text::split_ws(line)) {
      const auto eq = token.find('=');
      if (eq == std::string_view::npos) fail("expected key=value, got '" + std::string(token) + "'");
      const std::string_view key = token.substr(0, eq);
      const std::string_view value = token.substr(eq + 1);
      if (key == "boundary") {
        if (value == "proximal") side = BoundarySide::Proximal;
        else if (value == "distal") side = BoundarySide::Distal;
        else fail("boundary must be proximal or distal");
        continue;
      }
      double v = 0;
      if (!text::parse_double(value, v)) fail("bad number for " + std::string(key));
      if (key == "t") t = v;
      else if (key == "immersion") immersion = v;
      else if (key == "viscosity") viscosity = v;
      else if (key == "penetration") penetration = v;
      else fail("unknown key '" + std::string(key) + "'");
    }
    if (!t) fail("missing t=");
    if (!events.empty() && *t < events.back().t_s) fail("time goes backwards");
    TimelineEvent ev;
    ev.t_s = *t;
    if (side) {
      if (immersion || viscosity) fail("mixes boundary and submersion keys");
      ev.state = BoundaryEvent{*side, penetration.value_or(0.0)};
    } else {
      if (!immersion || penetration) fail("submersion events need immersion= (and optional viscosity=)");
      ev.state = SubmersionState{*immersion, viscosity.value_or(0.0)};
    }
    events.push_back(ev);
  }
  return events;
}

}  // namespace glide
