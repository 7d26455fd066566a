#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dcl/dinekf.hpp"
#include "dcl/metrics.hpp"
#include "dcl/qdekf.hpp"

namespace dcl {

/// Parametric truth trajectory. Every component is a smooth closed form:
///   circle:    c + r (cos(w t + phase), sin(w t + phase), 0)      r = amplitude.x, w = rate.x
///   lissajous: c + A (sin(w_x t + phi_x), sin(w_y t + phi_y), sin(w_z t + phi_z))
///   helix:     circle + (0, 0, climb_rate t)
struct TrajectorySpec {
  enum class Kind { circle, lissajous, helix };
  Kind kind = Kind::circle;
  Vec3 center = Vec3::Zero();
  Vec3 amplitude = Vec3::Zero();
  Vec3 rate = Vec3::Zero();
  Vec3 phase = Vec3::Zero();
  double climb_rate = 0.0;
  double duration = 60.0;

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;
};

/// Four-robot trajectory presets (1: staggered concentric circles,
/// 2: two figure-eight lissajous pairs, 3: helices with crossing ground
/// tracks). All presets leave the anchor rectangle for part of each lap, so
/// anchor coverage and inter-robot links come and go. Throws
/// std::invalid_argument for unknown presets or more than four robots.
std::vector<TrajectorySpec> preset_trajectories(int preset, int robot_count, double duration);

/// Anchor layout: corners of a 10 x 6 m rectangle at alternating heights 0 and 3 m.
std::vector<Vec3> default_anchors();

struct ScenarioConfig {
  // Simulated sensors (defaults: the simulation parameter table).
  double imu_rate = 100.0;
  double uwb_rate = 10.0;
  double uwb_range = 10.0;
  double uwb_noise = 0.05;
  double gyro_noise = 2.0e-2;
  double gyro_bias = 3.0e-4;
  double accel_noise = 3.0e-3;
  double accel_bias = 3.0e-4;
  bool biases_enabled = true;

  int robot_count = 4;
  std::vector<Vec3> anchors = default_anchors();
  double duration = 60.0;
  Vec3 gravity{0.0, 0.0, -9.81};

  // Filter-side noise model. Negative means "same as the simulated value".
  double filter_gyro_noise = -1.0;
  double filter_accel_noise = -1.0;
  double filter_uwb_noise = -1.0;

  // Initial uncertainty (1-sigma) and whether the initial estimate is drawn from it.
  double init_sigma_rot = 0.01;
  double init_sigma_vel = 0.01;
  double init_sigma_pos = 0.01;
  bool init_perturbation = true;

  FusionMode fusion = FusionMode::ci;
  bool run_dinekf = true;
  bool run_qdekf = true;

  int trials = 20;
  std::uint64_t seed = 1;

  void validate() const;
  double imu_dt() const { return 1.0 / imu_rate; }
  int imu_per_uwb() const;
  std::int64_t steps() const;
  WorldConstants world() const { return {gravity, imu_dt()}; }
  ImuNoiseSpec sim_noise() const;
  FilterParams filter_params() const;
  double filter_uwb_var() const;
  Mat9 initial_covariance() const;
};

struct TruthSample {
  RobotState state;
  ImuSample imu;  // ideal, noise-free, at time t
};

/// Analytic truth at time t: position and velocity from the curve, yaw
/// following the horizontal velocity with level roll and pitch, and the
/// ideal IMU (omega, specific force) consistent with the strapdown model.
TruthSample truth_kinematics(const TrajectorySpec& spec, double t, const Vec3& gravity);

/// Independent per-consumer random streams derived from one seed.
class RandomStreams {
 public:
  enum class Consumer : std::uint64_t { imu = 1, uwb = 2, relative = 3, bias = 4, init = 5 };

  explicit RandomStreams(std::uint64_t seed) : seed_(seed) {}
  std::mt19937_64 stream(Consumer consumer, std::uint64_t a, std::uint64_t b = 0) const;

 private:
  std::uint64_t seed_;
};

struct ImuBias {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

/// Constant per-trial bias with the configured magnitudes and random signs.
ImuBias draw_bias(const ScenarioConfig& config, std::mt19937_64& rng);

/// ideal + bias + white noise.
ImuSample corrupt_imu(const ImuSample& ideal, const ImuBias& bias, const ScenarioConfig& config,
                      std::mt19937_64& rng);

/// Ranges to every anchor within uwb_range of the true position.
std::vector<AbsoluteRangeMeasurement> synthesize_absolute(RobotId robot, const Vec3& position,
                                                          const ScenarioConfig& config,
                                                          std::mt19937_64& rng);

/// One relative range from observer to target (no gating).
RelativeRangeMeasurement synthesize_relative(RobotId observer, RobotId target,
                                             const Vec3& p_observer, const Vec3& p_target,
                                             const ScenarioConfig& config, std::mt19937_64& rng);

/// Runs both estimators on one shared truth and noise realization.
TrialRecord run_trial(const ScenarioConfig& config, const std::vector<TrajectorySpec>& trajectories,
                      int preset, std::uint64_t seed);

/// Trial k of each preset uses seed = config.seed + k. Results do not depend
/// on `threads`.
std::vector<TrialRecord> run_monte_carlo(const ScenarioConfig& config,
                                         const std::vector<int>& presets, int n_trials,
                                         int threads = 1);

}  // namespace dcl
