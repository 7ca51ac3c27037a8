#include "doctest.h"

#include <sstream>
#include <stdexcept>

#include "glide/renderers.hpp"

using namespace glide;

TEST_CASE("submersion") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  SUBCASE("dry arm gets nothing") {
    for (double v : {0.0, 0.4, 1.0}) {
      const HapticOutput out = render_submersion({0.0, v}, g, cfg);
      CHECK(out.contact == ContactStated{});
      CHECK(out.vib == VibrationCommand{});
    }
  }
  SUBCASE("fully submerged in a thick liquid") {
    const HapticOutput out = render_submersion({1.0, 1.0}, g, cfg);
    CHECK(out.contact.position_mm == 100);
    CHECK(out.contact.force_n == 2);
    CHECK(out.vib.f_proximal_hz == 300);
    CHECK(out.vib.f_distal_hz == 300);
  }
  SUBCASE("half submerged in an inviscid liquid") {
    const HapticOutput out = render_submersion({0.5, 0.0}, g, cfg);
    CHECK(out.contact.position_mm == 50);
    CHECK(out.contact.force_n == 0);
    CHECK(out.vib == VibrationCommand{});
  }
  SUBCASE("monotone in both inputs") {
    for (int i = 1; i < 100; ++i) {
      const HapticOutput a = render_submersion({i / 100.0, 0.5}, g, cfg);
      const HapticOutput b = render_submersion({(i + 1) / 100.0, 0.5}, g, cfg);
      CHECK(b.contact.position_mm >= a.contact.position_mm);
      const HapticOutput c = render_submersion({0.5, i / 100.0}, g, cfg);
      const HapticOutput d = render_submersion({0.5, (i + 1) / 100.0}, g, cfg);
      CHECK(d.contact.force_n >= c.contact.force_n);
      CHECK(d.vib.f_proximal_hz >= c.vib.f_proximal_hz);
    }
  }
  CHECK_THROWS_AS(render_submersion({1.2, 0}, g, cfg), std::invalid_argument);
  CHECK_THROWS_AS(render_submersion({0.5, -0.1}, g, cfg), std::invalid_argument);
}

TEST_CASE("boundary collisions") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  const HapticOutput touch = render_boundary({BoundarySide::Distal, 0}, g, cfg);
  CHECK(touch.contact.position_mm == 100);
  CHECK(touch.contact.force_n == 0.5);
  CHECK(touch.vib.f_distal_hz == 200);
  CHECK(touch.vib.f_proximal_hz == 0);
  CHECK(render_boundary({BoundarySide::Distal, 10}, g, cfg).vib.f_distal_hz == 500);
  CHECK(render_boundary({BoundarySide::Distal, 5}, g, cfg).vib.f_distal_hz == 350);

  for (double pen = 0; pen <= 20; pen += 0.25) {
    const HapticOutput d = render_boundary({BoundarySide::Distal, pen}, g, cfg);
    const HapticOutput p = render_boundary({BoundarySide::Proximal, pen}, g, cfg);
    CHECK(p.contact.position_mm == g.travel_len() - d.contact.position_mm);
    CHECK(p.vib.f_proximal_hz == d.vib.f_distal_hz);
    CHECK(p.vib.f_distal_hz == d.vib.f_proximal_hz);
    CHECK(d.vib.f_distal_hz <= 500);
    if (pen > 0) CHECK(d.vib.f_distal_hz >= render_boundary({BoundarySide::Distal, pen - 0.25}, g, cfg).vib.f_distal_hz);
  }
  CHECK_THROWS_AS(render_boundary({BoundarySide::Distal, -1}, g, cfg), std::invalid_argument);
}

TEST_CASE("custom gains are honoured and still capped") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  RendererConfig r;
  r.submersion_vib_hz = 900;
  r.boundary_f0_hz = 100;
  r.boundary_gain_hz_per_mm = 10;
  CHECK(render_submersion({0.5, 1.0}, g, cfg, r).vib.f_proximal_hz == 500);
  CHECK(render_boundary({BoundarySide::Proximal, 3}, g, cfg, r).vib.f_proximal_hz == 130);
}

TEST_CASE("timeline parsing") {
  std::istringstream in(
      "# liquid then wall\n"
      "t=0 immersion=0.2 viscosity=0.1\n"
      "\n"
      "t=0.5 immersion=0.6   # deeper\n"
      "t=1.25 boundary=distal penetration=4\n"
      "t=1.25 boundary=proximal\n");
  const auto events = parse_timeline(in);
  REQUIRE(events.size() == 4);
  CHECK(events[0].t_s == 0);
  CHECK(std::get<SubmersionState>(events[1].state).immersion_fraction == 0.6);
  CHECK(std::get<SubmersionState>(events[1].state).viscosity == 0.0);
  CHECK(std::get<BoundaryEvent>(events[2].state).side == BoundarySide::Distal);
  CHECK(std::get<BoundaryEvent>(events[2].state).penetration_mm == 4);
  CHECK(std::get<BoundaryEvent>(events[3].state).penetration_mm == 0);

  const auto bad = [](const char* text) {
    std::istringstream s(text);
    return parse_timeline(s);
  };
  CHECK_THROWS_WITH_AS(bad("t=1 immersion=0.1\nt=0.5 immersion=0.2\n"), "timeline line 2: time goes backwards",
                       std::runtime_error);
  CHECK_THROWS_AS(bad("immersion=0.1\n"), std::runtime_error);
  CHECK_THROWS_AS(bad("t=0 boundary=up\n"), std::runtime_error);
  CHECK_THROWS_AS(bad("t=0 immersion=x\n"), std::runtime_error);
  CHECK_THROWS_AS(bad("t=0 colour=red\n"), std::runtime_error);
  CHECK_THROWS_AS(bad("t=0 boundary=distal immersion=0.3\n"), std::runtime_error);
}

TEST_CASE("outputs become a VIB then a SET") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  const auto cmds = to_commands(render_boundary({BoundarySide::Proximal, 2}, g, cfg));
  REQUIRE(cmds.size() == 2);
  CHECK(protocol::serialize(cmds[0]) == "VIB 260 0\n");
  CHECK(protocol::serialize(cmds[1]) == "SET 0 0.5\n");
}
