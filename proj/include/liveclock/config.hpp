#pragma once

// Scenario configuration files.
//
// A config is a nested-key plain-text document (YAML syntax) whose leaves are
// scalars. Unknown keys are rejected and every error names the offending key
// path, e.g. "steering.kp". See configs/ for annotated examples and README.md
// for the full key reference with units.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "liveclock/scenario.hpp"

namespace liveclock {

struct EstimateSettings {
  NodeId origin{};
  double tolerance = 1e-6;  // on |omega_fwd - omega_bwd| in units of c/r
};

struct ScenarioConfig {
  Scenario scenario;
  EstimateSettings estimate;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& message)
      : std::runtime_error(key_path + ": " + message), key_path_(std::move(key_path)) {}
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

class ConfigIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses and validates a config document.
ScenarioConfig parse_config(std::string_view text);

/// Reads a config file. Throws ConfigIoError when the file cannot be read.
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace liveclock
