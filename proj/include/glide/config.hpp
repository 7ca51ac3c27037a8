#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "glide/kinematics.hpp"
#include "glide/protocol.hpp"
#include "glide/renderers.hpp"
#include "glide/simulator.hpp"
#include "glide/stimulus.hpp"

namespace glide {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServerOptions {
  std::string host{"127.0.0.1"};
  int port{9760};
  int ws_port{9761};  // -1 ("off") disables the WebSocket bridge
  /// Simulated seconds per wall second; 0 runs the tick loop unthrottled.
  double time_scale{1.0};
  std::size_t telemetry_buffer{1024};
};

/// Everything the stack can be configured with.  Loaded from flat key=value
/// text; the same keys can be overridden one at a time with set().
struct StackConfig {
  LinkageParamsd linkage;
  StimulusConfig stimulus;
  ServoModel servo;
  VibrationModel vibration;
  RendererConfig renderer;
  ServerOptions server;
  double inter_trial_gap_s{2.0};
  double deadband_rad{1e-4};

  /// Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::filesystem::path& path);

  /// Cross-checks every section and returns the validated geometry.
  LinkageGeometryd geometry() const;
  void validate() const;

  protocol::Limits limits() const;

  /// key=value pairs in a fixed order, suitable for a config snapshot.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

}  // namespace glide
