#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dcl/scenario.hpp"

namespace dcl {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Everything a CLI run needs. Defaults reproduce the simulation table.
struct RunConfig {
  ScenarioConfig scenario;
  std::vector<int> presets{1};
  std::string output_dir = "out";
  int threads = 1;

  void validate() const;  // throws ConfigError
};

/// Parses a flat `key = value` file. `#` starts a comment; blank lines are
/// ignored. Unknown keys, duplicate keys and malformed values throw
/// ConfigError with the offending line number.
///
/// Keys (defaults in brackets):
///   imu_rate [100]  uwb_rate [10]  uwb_range [10]  uwb_noise_std [0.05]
///   gyro_noise [2.0e-2]  gyro_bias [3.0e-4]  accel_noise [3.0e-3]  accel_bias [3.0e-4]
///   robot_count [4]  anchors ["0 0 0; 10 0 3; 10 6 0; 0 6 3"]  duration [60]
///   gravity ["0 0 -9.81"]  biases [on]
///   filter_gyro_noise, filter_accel_noise, filter_uwb_noise_std [= simulated]
///   init_sigma_rot, init_sigma_vel, init_sigma_pos [0.01]  init_perturbation [on]
///   fusion [ci|naive]  filters [both|dinekf|qdekf]  trials [20]  seed [1]
///   preset [1 | comma list | all]  threads [1]  output [out]
/// Noise values are per-sample standard deviations in SI units.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical, fully expanded `key = value` rendering; parse_config of the
/// result reproduces the configuration.
std::string canonical_text(const RunConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

/// Hash of the canonical text with run-only options (threads, output)
/// normalized, so it identifies the experiment rather than the invocation.
std::uint64_t experiment_hash(const RunConfig& config);

void set_fusion(ScenarioConfig& config, std::string_view value);
void set_filters(ScenarioConfig& config, std::string_view value);
std::vector<int> parse_presets(std::string_view value);

}  // namespace dcl
