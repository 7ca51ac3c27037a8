#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "glide/stimulus.hpp"

using namespace glide;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in, "missing fixture " << path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("pattern bank") {
  CHECK(pattern_spec(PatternId::SD).progress_fraction == 0.25);
  CHECK(pattern_spec(PatternId::SDV).progress_fraction == 0.25);
  CHECK(pattern_spec(PatternId::MD).progress_fraction == 0.50);
  CHECK(pattern_spec(PatternId::MDV).progress_fraction == 0.50);
  CHECK(pattern_spec(PatternId::LD).progress_fraction == 0.75);
  CHECK(pattern_spec(PatternId::LDV).progress_fraction == 0.75);
  for (PatternId id : kAllPatterns) {
    CHECK(pattern_spec(id).vibration_enabled == to_string(id).ends_with("V"));
    CHECK(parse_pattern_id(to_string(id)) == id);
  }
  CHECK(parse_pattern_id("ldv") == PatternId::LDV);
  CHECK_FALSE(parse_pattern_id("XYZ"));
  CHECK_FALSE(parse_pattern_id(""));
}

TEST_CASE("vibration profile") {
  const StimulusConfig cfg;
  const VibrationCommand mid = vibration_profile(50, cfg, true);
  CHECK(mid.f_proximal_hz == mid.f_distal_hz);
  const VibrationCommand start = vibration_profile(0, cfg, true);
  CHECK(start.f_proximal_hz == 500);
  CHECK(start.f_distal_hz == 0);
  const VibrationCommand end = vibration_profile(100, cfg, true);
  CHECK(end.f_proximal_hz == 0);
  CHECK(end.f_distal_hz == 500);
  CHECK(vibration_profile(37, cfg, false) == VibrationCommand{});
  CHECK_THROWS_AS(vibration_profile(-0.1, cfg, true), std::domain_error);
  CHECK_THROWS_AS(vibration_profile(100.1, cfg, true), std::domain_error);

  VibrationCommand prev = start;
  for (int i = 1; i <= 1000; ++i) {
    const VibrationCommand v = vibration_profile(i / 10.0, cfg, true);
    CHECK(v.f_proximal_hz < prev.f_proximal_hz);
    CHECK(v.f_distal_hz > prev.f_distal_hz);
    prev = v;
  }
}

TEST_CASE("pattern durations") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  const double sd = trajectory_duration(compile_pattern(pattern_spec(PatternId::SD), g, cfg));
  const double md = trajectory_duration(compile_pattern(pattern_spec(PatternId::MD), g, cfg));
  const double ld = trajectory_duration(compile_pattern(pattern_spec(PatternId::LD), g, cfg));
  CHECK(std::abs(sd - 25.0 / 23.0) <= 0.01);
  CHECK(std::abs(md - 50.0 / 23.0) <= 0.01);
  CHECK(std::abs(ld - 75.0 / 23.0) <= 0.01);
  CHECK(ld > md);
  CHECK(md > sd);
  CHECK(nominal_duration(pattern_spec(PatternId::LD), cfg) == doctest::Approx(3.2609).epsilon(1e-4));
}

TEST_CASE("LD trajectory shape") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  const Trajectory t = compile_pattern(pattern_spec(PatternId::LD), g, cfg);
  // ceil(3.2609 * 100) + 1 frames.
  CHECK(t.frames.size() == 328);
  CHECK(t.frames.front().contact.position_mm == 0);
  CHECK(t.frames.back().contact.position_mm == 75);
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    const ActuatorFrame& f = t.frames[i];
    CHECK(f.contact.force_n == 0.5);
    CHECK(f.vibration == VibrationCommand{});
    CHECK(f.t_s == doctest::Approx(i / 100.0).epsilon(1e-12));
    if (i > 0) {
      const double dt = f.t_s - t.frames[i - 1].t_s;
      CHECK(std::abs(dt - 0.01) < 1e-9);
      const double v = (f.contact.position_mm - t.frames[i - 1].contact.position_mm) / dt;
      CHECK(v <= 23 + 0.23);
      if (i + 1 < t.frames.size()) CHECK(std::abs(v - 23) <= 0.23);
    }
  }
}

TEST_CASE("frames realize their contact state") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  const Trajectory t = compile_pattern(pattern_spec(PatternId::MDV), g, cfg);
  for (const ActuatorFrame& f : t.frames) {
    const JointAnglesd q = contact_to_angles(g, f.contact);
    CHECK(q == f.angles);
    CHECK((forward_kinematics(g, f.angles) - contact_to_point(g, f.contact)).norm() < 1e-6);
  }
}

TEST_CASE("pattern pairs share their contact trajectory") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  const std::pair<PatternId, PatternId> pairs[] = {
      {PatternId::SD, PatternId::SDV}, {PatternId::MD, PatternId::MDV}, {PatternId::LD, PatternId::LDV}};
  for (auto [plain, vib] : pairs) {
    const Trajectory a = compile_pattern(pattern_spec(plain), g, cfg);
    const Trajectory b = compile_pattern(pattern_spec(vib), g, cfg);
    REQUIRE(a.frames.size() == b.frames.size());
    bool any_vibration = false;
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
      CHECK(a.frames[i].contact == b.frames[i].contact);
      CHECK(a.frames[i].angles == b.frames[i].angles);
      CHECK(a.frames[i].t_s == b.frames[i].t_s);
      CHECK(a.frames[i].vibration == VibrationCommand{});
      any_vibration = any_vibration || b.frames[i].vibration.f_distal_hz > 0;
    }
    CHECK(any_vibration);
  }
}

TEST_CASE("compilation is deterministic") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  std::ostringstream a, b;
  write_trajectory(a, compile_pattern(pattern_spec(PatternId::LDV), g, cfg));
  write_trajectory(b, compile_pattern(pattern_spec(PatternId::LDV), g, cfg));
  CHECK(a.str() == b.str());
}

TEST_CASE("golden SDV trajectory") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  std::ostringstream out;
  write_trajectory(out, compile_pattern(pattern_spec(PatternId::SDV), g, cfg));
  CHECK(out.str() == read_file(std::string(GLIDE_FIXTURE_DIR) + "/golden/sdv_trajectory.txt"));
}

TEST_CASE("zero progress gives a single frame") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  const Trajectory t = compile_pattern(PatternSpec{PatternId::SD, 0.0, false}, g, cfg);
  REQUIRE(t.frames.size() == 1);
  CHECK(t.frames[0].contact.position_mm == 0);
  CHECK(trajectory_duration(t) == 0);
}

TEST_CASE("goto trajectories") {
  const LinkageGeometryd g;
  const StimulusConfig cfg;
  SUBCASE("staying put") {
    const Trajectory t = compile_goto({30, 1}, {30, 1}, g, cfg);
    CHECK(t.frames.size() == 1);
    CHECK(trajectory_duration(t) == 0);
  }
  SUBCASE("46 mm at 23 mm/s") {
    const Trajectory t = compile_goto({46, 2}, {0, 0}, g, cfg);
    CHECK(trajectory_duration(t) == doctest::Approx(2.0));
    CHECK(t.frames.back().contact.force_n == 2.0);
    CHECK(t.frames.back().contact.position_mm == 46.0);
    for (const ActuatorFrame& f : t.frames) CHECK(f.vibration == VibrationCommand{});
    for (std::size_t i = 1; i < t.frames.size(); ++i) {
      CHECK(t.frames[i].contact.force_n >= t.frames[i - 1].contact.force_n);
    }
  }
  SUBCASE("backwards") {
    const Trajectory t = compile_goto({10, 0.5}, {80, 0.5}, g, cfg);
    CHECK(t.frames.front().contact.position_mm == 80);
    CHECK(t.frames.back().contact.position_mm == 10);
    CHECK(trajectory_duration(t) == doctest::Approx(70.0 / 23.0).epsilon(0.01));
  }
  SUBCASE("press in place is limited by the force rate") {
    const Trajectory t = compile_goto({50, 2}, {50, 0}, g, cfg);
    CHECK(trajectory_duration(t) == doctest::Approx(2.0 / cfg.force_rate_n_s));
  }
  SUBCASE("targets out of bounds are rejected") {
    CHECK_THROWS_AS(compile_goto({120, 0}, {0, 0}, g, cfg), std::invalid_argument);
    CHECK_THROWS_AS(compile_goto({10, 2.5}, {0, 0}, g, cfg), std::invalid_argument);
  }
}

TEST_CASE("configuration checks") {
  const LinkageGeometryd g;
  StimulusConfig cfg;
  cfg.slide_speed_mm_s = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.travel_len_mm = 80;
  CHECK_THROWS(compile_pattern(pattern_spec(PatternId::SD), g, cfg));
}
