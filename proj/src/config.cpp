#include "glide/config.hpp"

#include <fstream>
#include <functional>

#include "glide/text.hpp"

namespace glide {
namespace {

struct Key {
  const char* name;
  std::function<double&(StackConfig&)> ref;
};

// Travel length and servo range feed more than one section; set() keeps them
// in sync.
const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      {"base_separation_mm", [](StackConfig& c) -> double& { return c.linkage.base_separation_mm; }},
      {"proximal_len_mm", [](StackConfig& c) -> double& { return c.linkage.proximal_len_mm; }},
      {"distal_len_mm", [](StackConfig& c) -> double& { return c.linkage.distal_len_mm; }},
      {"travel_len_mm", [](StackConfig& c) -> double& { return c.linkage.travel_len_mm; }},
      {"rest_height_mm", [](StackConfig& c) -> double& { return c.linkage.rest_height_mm; }},
      {"skin_stiffness_n_per_mm", [](StackConfig& c) -> double& { return c.linkage.skin_stiffness_n_per_mm; }},
      {"max_force_n", [](StackConfig& c) -> double& { return c.linkage.max_force_n; }},
      {"theta_min_rad", [](StackConfig& c) -> double& { return c.linkage.theta_min_rad; }},
      {"theta_max_rad", [](StackConfig& c) -> double& { return c.linkage.theta_max_rad; }},
      {"slide_speed_mm_s", [](StackConfig& c) -> double& { return c.stimulus.slide_speed_mm_s; }},
      {"f_max_hz", [](StackConfig& c) -> double& { return c.stimulus.f_max_hz; }},
      {"tick_rate_hz", [](StackConfig& c) -> double& { return c.stimulus.tick_rate_hz; }},
      {"baseline_force_n", [](StackConfig& c) -> double& { return c.stimulus.baseline_force_n; }},
      {"force_rate_n_s", [](StackConfig& c) -> double& { return c.stimulus.force_rate_n_s; }},
      {"servo_max_rate_rad_s", [](StackConfig& c) -> double& { return c.servo.max_rate_rad_s; }},
      {"vibration_tau_s", [](StackConfig& c) -> double& { return c.vibration.tau_s; }},
      {"submersion_vib_hz", [](StackConfig& c) -> double& { return c.renderer.submersion_vib_hz; }},
      {"boundary_f0_hz", [](StackConfig& c) -> double& { return c.renderer.boundary_f0_hz; }},
      {"boundary_gain_hz_per_mm", [](StackConfig& c) -> double& { return c.renderer.boundary_gain_hz_per_mm; }},
      {"time_scale", [](StackConfig& c) -> double& { return c.server.time_scale; }},
      {"inter_trial_gap_s", [](StackConfig& c) -> double& { return c.inter_trial_gap_s; }},
      {"deadband_rad", [](StackConfig& c) -> double& { return c.deadband_rad; }},
  };
  return table;
}

int parse_port(const std::string& key, const std::string& value) {
  double v = 0;
  if (!text::parse_decimal(value, v) || v != static_cast<int>(v) || v > 65535) {
    throw ConfigError("config: " + key + " must be an integer port, got '" + value + "'");
  }
  return static_cast<int>(v);
}

void sync(StackConfig& c) {
  c.stimulus.travel_len_mm = c.linkage.travel_len_mm;
  c.servo.theta_min_rad = c.linkage.theta_min_rad;
  c.servo.theta_max_rad = c.linkage.theta_max_rad;
  c.vibration.f_max_hz = c.stimulus.f_max_hz;
}

}  // namespace

void StackConfig::set(const std::string& key, const std::string& value) {
  if (key == "host") {
    server.host = value;
    return;
  }
  if (key == "port") {
    server.port = parse_port(key, value);
    return;
  }
  if (key == "ws_port") {
    server.ws_port = value == "off" ? -1 : parse_port(key, value);
    return;
  }
  if (key == "telemetry_buffer") {
    double v = 0;
    if (!text::parse_decimal(value, v) || v < 1) throw ConfigError("config: telemetry_buffer must be >= 1");
    server.telemetry_buffer = static_cast<std::size_t>(v);
    return;
  }
  for (const Key& k : keys()) {
    if (key == k.name) {
      double v = 0;
      if (!text::parse_double(value, v)) throw ConfigError("config: " + key + " is not a number: '" + value + "'");
      k.ref(*this) = v;
      sync(*this);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

void StackConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config: " + path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    set(std::string(text::trim(line.substr(0, eq))), std::string(text::trim(line.substr(eq + 1))));
  }
}

LinkageGeometryd StackConfig::geometry() const {
  try {
    return LinkageGeometryd(linkage);
  } catch (const KinematicsError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void StackConfig::validate() const {
  const LinkageGeometryd geom = geometry();
  try {
    stimulus.validate();
    servo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (stimulus.baseline_force_n > geom.max_force()) throw ConfigError("config: baseline_force_n exceeds max_force_n");
  if (!(vibration.tau_s > 0)) throw ConfigError("config: vibration_tau_s must be positive");
  if (!(server.time_scale >= 0)) throw ConfigError("config: time_scale must be >= 0");
  if (!(inter_trial_gap_s >= 0)) throw ConfigError("config: inter_trial_gap_s must be >= 0");
  if (!(deadband_rad >= 0)) throw ConfigError("config: deadband_rad must be >= 0");
  if (renderer.submersion_vib_hz < 0 || renderer.boundary_f0_hz < 0 || renderer.boundary_gain_hz_per_mm < 0) {
    throw ConfigError("config: renderer gains must be >= 0");
  }
}

protocol::Limits StackConfig::limits() const {
  return {linkage.travel_len_mm, linkage.max_force_n, stimulus.f_max_hz};
}

std::vector<std::pair<std::string, std::string>> StackConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("host", server.host);
  out.emplace_back("port", std::to_string(server.port));
  out.emplace_back("ws_port", server.ws_port < 0 ? std::string("off") : std::to_string(server.ws_port));
  out.emplace_back("telemetry_buffer", std::to_string(server.telemetry_buffer));
  StackConfig copy = *this;
  for (const Key& k : keys()) out.emplace_back(k.name, text::shortest(k.ref(copy)));
  return out;
}

}  // namespace glide
