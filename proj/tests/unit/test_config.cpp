#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "glide/config.hpp"

using namespace glide;

TEST_CASE("defaults are consistent") {
  const StackConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.server.port == 9760);
  CHECK(cfg.stimulus.slide_speed_mm_s == 23);
  CHECK(cfg.stimulus.f_max_hz == 500);
  CHECK(cfg.limits().max_force_n == 2);
}

TEST_CASE("keys can be set one at a time") {
  StackConfig cfg;
  cfg.set("port", "12000");
  cfg.set("slide_speed_mm_s", "46");
  cfg.set("travel_len_mm", "90");
  cfg.set("theta_min_rad", "-3");
  cfg.set("ws_port", "off");
  CHECK(cfg.server.port == 12000);
  CHECK(cfg.stimulus.slide_speed_mm_s == 46);
  CHECK(cfg.stimulus.travel_len_mm == 90);
  CHECK(cfg.servo.theta_min_rad == -3);
  CHECK(cfg.server.ws_port == -1);
  CHECK_NOTHROW(cfg.validate());
  CHECK_THROWS_AS(cfg.set("colour", "red"), ConfigError);
  CHECK_THROWS_AS(cfg.set("port", "http"), ConfigError);
  CHECK_THROWS_AS(cfg.set("port", "70000"), ConfigError);
  CHECK_THROWS_AS(cfg.set("slide_speed_mm_s", "fast"), ConfigError);
}

TEST_CASE("invalid combinations are caught by validate") {
  StackConfig cfg;
  cfg.set("distal_len_mm", "20");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.set("baseline_force_n", "3");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.set("tick_rate_hz", "0");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config files") {
  const auto path = std::filesystem::temp_directory_path() / "glide_test_config.txt";
  {
    std::ofstream out(path);
    out << "# lab bench\nport = 9800\n\nslide_speed_mm_s=20 # slower\nhost=0.0.0.0\n";
  }
  StackConfig cfg;
  cfg.load_file(path);
  CHECK(cfg.server.port == 9800);
  CHECK(cfg.stimulus.slide_speed_mm_s == 20);
  CHECK(cfg.server.host == "0.0.0.0");
  {
    std::ofstream out(path);
    out << "port 9800\n";
  }
  CHECK_THROWS_WITH_AS(cfg.load_file(path), doctest::Contains(":1: expected key=value"), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(cfg.load_file(path), ConfigError);
}

TEST_CASE("entries round-trip through set") {
  StackConfig a;
  a.set("max_force_n", "1.5");
  a.set("time_scale", "4");
  StackConfig b;
  for (const auto& [k, v] : a.entries()) b.set(k, v);
  CHECK(b.entries() == a.entries());
  CHECK(b.linkage.max_force_n == 1.5);
}
