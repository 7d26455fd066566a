#include "dcl/scenario.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <memory>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>

namespace dcl {

// ---------------------------------------------------------------- trajectories

Vec3 TrajectorySpec::position(double t) const {
  switch (kind) {
    case Kind::lissajous:
      return center + Vec3(amplitude.x() * std::sin(rate.x() * t + phase.x()),
                           amplitude.y() * std::sin(rate.y() * t + phase.y()),
                           amplitude.z() * std::sin(rate.z() * t + phase.z()));
    case Kind::circle:
    case Kind::helix: {
      const double a = rate.x() * t + phase.x();
      Vec3 p = center + amplitude.x() * Vec3(std::cos(a), std::sin(a), 0.0);
      if (kind == Kind::helix) p.z() += climb_rate * t;
      return p;
    }
  }
  return center;
}

Vec3 TrajectorySpec::velocity(double t) const {
  switch (kind) {
    case Kind::lissajous:
      return Vec3(amplitude.x() * rate.x() * std::cos(rate.x() * t + phase.x()),
                  amplitude.y() * rate.y() * std::cos(rate.y() * t + phase.y()),
                  amplitude.z() * rate.z() * std::cos(rate.z() * t + phase.z()));
    case Kind::circle:
    case Kind::helix: {
      const double a = rate.x() * t + phase.x();
      Vec3 v = amplitude.x() * rate.x() * Vec3(-std::sin(a), std::cos(a), 0.0);
      if (kind == Kind::helix) v.z() = climb_rate;
      return v;
    }
  }
  return Vec3::Zero();
}

Vec3 TrajectorySpec::acceleration(double t) const {
  switch (kind) {
    case Kind::lissajous:
      return Vec3(-amplitude.x() * rate.x() * rate.x() * std::sin(rate.x() * t + phase.x()),
                  -amplitude.y() * rate.y() * rate.y() * std::sin(rate.y() * t + phase.y()),
                  -amplitude.z() * rate.z() * rate.z() * std::sin(rate.z() * t + phase.z()));
    case Kind::circle:
    case Kind::helix: {
      const double a = rate.x() * t + phase.x();
      return -amplitude.x() * rate.x() * rate.x() * Vec3(std::cos(a), std::sin(a), 0.0);
    }
  }
  return Vec3::Zero();
}

namespace {

TrajectorySpec circle(Vec3 center, double radius, double rate, double phase, double duration) {
  TrajectorySpec s;
  s.kind = TrajectorySpec::Kind::circle;
  s.center = center;
  s.amplitude = Vec3(radius, 0.0, 0.0);
  s.rate = Vec3(rate, 0.0, 0.0);
  s.phase = Vec3(phase, 0.0, 0.0);
  s.duration = duration;
  return s;
}

TrajectorySpec helix(Vec3 center, double radius, double rate, double phase, double climb,
                     double duration) {
  TrajectorySpec s = circle(center, radius, rate, phase, duration);
  s.kind = TrajectorySpec::Kind::helix;
  s.climb_rate = climb;
  return s;
}

// Figure-eight: the y frequency and phase are twice the x ones, so the
// horizontal speed never vanishes.
TrajectorySpec figure_eight(Vec3 center, Vec3 amplitude, double rate, double time_shift,
                            double z_rate, double duration) {
  TrajectorySpec s;
  s.kind = TrajectorySpec::Kind::lissajous;
  s.center = center;
  s.amplitude = amplitude;
  s.rate = Vec3(rate, 2.0 * rate, z_rate);
  s.phase = Vec3(rate * time_shift, 2.0 * rate * time_shift, z_rate * time_shift);
  s.duration = duration;
  return s;
}

}  // namespace

std::vector<TrajectorySpec> preset_trajectories(int preset, int robot_count, double duration) {
  if (robot_count < 1 || robot_count > 4) {
    throw std::invalid_argument("presets define between 1 and 4 robots");
  }
  std::vector<TrajectorySpec> all;
  switch (preset) {
    case 1:
      all = {circle({5.0, 3.0, 1.0}, 2.7, 0.60, 0.0, duration),
             circle({5.0, 3.0, 1.5}, 5.4, -0.35, 1.0, duration),
             circle({5.0, 3.0, 2.0}, 8.1, 0.25, 2.5, duration),
             circle({5.0, 3.0, 2.5}, 10.8, -0.18, 4.0, duration)};
      break;
    case 2:
      all = {figure_eight({5.0, 3.0, 1.5}, {7.2, 4.5, 0.5}, 0.20, 0.0, 0.30, duration),
             figure_eight({5.0, 3.0, 1.5}, {7.2, 4.5, 0.5}, 0.20, 7.0, 0.30, duration),
             figure_eight({5.0, 3.0, 2.2}, {10.8, 6.3, 0.4}, 0.15, 3.0, 0.25, duration),
             figure_eight({5.0, 3.0, 2.2}, {10.8, 6.3, 0.4}, 0.15, 14.0, 0.25, duration)};
      break;
    case 3:
      all = {helix({-1.3, -0.6, 1.0}, 6.3, 0.30, 0.0, 0.020, duration),
             helix({11.3, 6.6, 1.2}, 6.3, -0.28, 1.5, 0.015, duration),
             helix({11.3, -0.6, 2.0}, 5.4, 0.33, 3.0, -0.010, duration),
             helix({-1.3, 6.6, 2.2}, 5.4, -0.31, 4.5, 0.010, duration)};
      break;
    default:
      throw std::invalid_argument("unknown trajectory preset " + std::to_string(preset));
  }
  all.resize(static_cast<std::size_t>(robot_count));
  return all;
}

std::vector<Vec3> default_anchors() {
  return {{0.0, 0.0, 0.0}, {10.0, 0.0, 3.0}, {10.0, 6.0, 0.0}, {0.0, 6.0, 3.0}};
}

// ---------------------------------------------------------------- config

void ScenarioConfig::validate() const {
  if (!(imu_rate > 0.0 && uwb_rate > 0.0)) throw std::invalid_argument("rates must be positive");
  const double ratio = imu_rate / uwb_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw std::invalid_argument("imu rate must be an integer multiple of the uwb rate");
  }
  if (!(uwb_range > 0.0)) throw std::invalid_argument("uwb range must be positive");
  if (uwb_noise < 0.0 || gyro_noise < 0.0 || accel_noise < 0.0 || gyro_bias < 0.0 ||
      accel_bias < 0.0) {
    throw std::invalid_argument("noise and bias values must be non-negative");
  }
  if (!(filter_uwb_var() > 0.0)) throw std::invalid_argument("filter uwb noise must be positive");
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (robot_count < 1) throw std::invalid_argument("robot count must be at least 1");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (!(init_sigma_rot > 0.0 && init_sigma_vel > 0.0 && init_sigma_pos > 0.0)) {
    throw std::invalid_argument("initial sigmas must be positive");
  }
  if (!run_dinekf && !run_qdekf) throw std::invalid_argument("no filter selected");
}

int ScenarioConfig::imu_per_uwb() const {
  return static_cast<int>(std::lround(imu_rate / uwb_rate));
}

std::int64_t ScenarioConfig::steps() const { return std::llround(duration * imu_rate); }

ImuNoiseSpec ScenarioConfig::sim_noise() const {
  return {gyro_noise, accel_noise, biases_enabled ? gyro_bias : 0.0,
          biases_enabled ? accel_bias : 0.0};
}

FilterParams ScenarioConfig::filter_params() const {
  FilterParams p;
  p.noise.gyro_noise_std = filter_gyro_noise >= 0.0 ? filter_gyro_noise : gyro_noise;
  p.noise.accel_noise_std = filter_accel_noise >= 0.0 ? filter_accel_noise : accel_noise;
  p.noise.gyro_bias = 0.0;
  p.noise.accel_bias = 0.0;
  p.world = world();
  p.fusion = fusion;
  return p;
}

double ScenarioConfig::filter_uwb_var() const {
  const double s = filter_uwb_noise >= 0.0 ? filter_uwb_noise : uwb_noise;
  return s * s;
}

Mat9 ScenarioConfig::initial_covariance() const {
  Vec9 d;
  d << Vec3::Constant(init_sigma_rot * init_sigma_rot),
      Vec3::Constant(init_sigma_vel * init_sigma_vel),
      Vec3::Constant(init_sigma_pos * init_sigma_pos);
  return d.asDiagonal();
}

// ---------------------------------------------------------------- truth

namespace {

constexpr double kMinHorizontalSpeed = 1e-9;

Mat3 yaw_rotation(double yaw) {
  Mat3 r;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

double held_heading(const TrajectorySpec& spec, double t) {
  for (double s = t - 0.01; s >= 0.0; s -= 0.01) {
    const Vec3 v = spec.velocity(s);
    if (v.head<2>().norm() > kMinHorizontalSpeed) return std::atan2(v.y(), v.x());
  }
  return 0.0;
}

}  // namespace

TruthSample truth_kinematics(const TrajectorySpec& spec, double t, const Vec3& gravity) {
  if (t < 0.0 || t > spec.duration + 1.0) {
    throw std::out_of_range("truth_kinematics: time outside trajectory duration");
  }
  const Vec3 p = spec.position(t);
  const Vec3 v = spec.velocity(t);
  const Vec3 a = spec.acceleration(t);
  const double speed2 = v.head<2>().squaredNorm();
  double yaw = 0.0;
  double yaw_rate = 0.0;
  if (std::sqrt(speed2) > kMinHorizontalSpeed) {
    yaw = std::atan2(v.y(), v.x());
    yaw_rate = (v.x() * a.y() - v.y() * a.x()) / speed2;
  } else {
    yaw = held_heading(spec, t);
  }
  TruthSample out;
  out.state.pose = {yaw_rotation(yaw), v, p};
  out.imu.omega = Vec3(0.0, 0.0, yaw_rate);
  out.imu.accel = out.state.pose.rotation.transpose() * (a - gravity);
  out.imu.timestamp = t;
  return out;
}

// ---------------------------------------------------------------- sensors

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::mt19937_64 RandomStreams::stream(Consumer consumer, std::uint64_t a, std::uint64_t b) const {
  std::uint64_t h = splitmix64(seed_);
  h = splitmix64(h ^ static_cast<std::uint64_t>(consumer));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x51ED270B27A3B6A1ULL));
  return std::mt19937_64(h);
}

ImuBias draw_bias(const ScenarioConfig& config, std::mt19937_64& rng) {
  std::bernoulli_distribution sign(0.5);
  ImuBias b;
  const ImuNoiseSpec n = config.sim_noise();
  for (int k = 0; k < 3; ++k) {
    b.gyro(k) = (sign(rng) ? 1.0 : -1.0) * n.gyro_bias;
    b.accel(k) = (sign(rng) ? 1.0 : -1.0) * n.accel_bias;
  }
  return b;
}

ImuSample corrupt_imu(const ImuSample& ideal, const ImuBias& bias, const ScenarioConfig& config,
                      std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  ImuSample out = ideal;
  for (int k = 0; k < 3; ++k) out.omega(k) += bias.gyro(k) + config.gyro_noise * unit(rng);
  for (int k = 0; k < 3; ++k) out.accel(k) += bias.accel(k) + config.accel_noise * unit(rng);
  return out;
}

std::vector<AbsoluteRangeMeasurement> synthesize_absolute(RobotId robot, const Vec3& position,
                                                          const ScenarioConfig& config,
                                                          std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<AbsoluteRangeMeasurement> out;
  for (std::size_t a = 0; a < config.anchors.size(); ++a) {
    const double noise = unit(rng);  // drawn for every anchor to keep streams aligned
    const double d = (position - config.anchors[a]).norm();
    if (d > config.uwb_range) continue;
    out.push_back({robot, static_cast<int>(a), config.anchors[a],
                   std::max(0.0, d + config.uwb_noise * noise), config.filter_uwb_var()});
  }
  return out;
}

RelativeRangeMeasurement synthesize_relative(RobotId observer, RobotId target,
                                             const Vec3& p_observer, const Vec3& p_target,
                                             const ScenarioConfig& config, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  const double d = (p_observer - p_target).norm();
  return {observer, target, std::max(0.0, d + config.uwb_noise * unit(rng)),
          config.filter_uwb_var()};
}

// ---------------------------------------------------------------- trials

namespace {

struct FilterRun {
  FilterKind kind;
  std::vector<std::unique_ptr<CooperativeFilter>> robots;
};

StepRow make_row(double t, const RobotState& truth, const EstimatePair& est, FilterKind kind) {
  const ErrorSample s = error_sample(truth, est, kind);
  const NeesValue n = nees(s);
  StepRow row;
  row.t = t;
  row.p_true = truth.pose.position;
  row.p_est = est.state.position;
  row.err_pos_m = s.position_error.norm();
  row.err_ori_deg = s.orientation_error_deg;
  row.err_norm = s.tangent_error.norm();
  row.pnees = n.pnees;
  row.onees = n.onees;
  row.nees_valid = n.valid;
  return row;
}

}  // namespace

TrialRecord run_trial(const ScenarioConfig& config, const std::vector<TrajectorySpec>& trajectories,
                      int preset, std::uint64_t seed) {
  config.validate();
  if (trajectories.size() != static_cast<std::size_t>(config.robot_count)) {
    throw std::invalid_argument("run_trial: one trajectory per robot required");
  }
  const RandomStreams streams(seed);
  const WorldConstants world = config.world();
  const double dt = world.imu_dt;
  const std::int64_t steps = config.steps();
  const int per_tick = config.imu_per_uwb();
  const std::size_t n = trajectories.size();
  const FilterParams params = config.filter_params();
  const Mat9 p0 = config.initial_covariance();

  TrialRecord rec;
  rec.seed = seed;
  rec.preset = preset;

  std::vector<GroupElement> truth(n);
  std::vector<ImuBias> biases(n);
  std::vector<std::mt19937_64> imu_rng;
  std::vector<std::mt19937_64> uwb_rng;
  std::vector<std::vector<std::mt19937_64>> rel_rng(n);
  std::vector<FilterRun> runs;
  if (config.run_dinekf) runs.push_back({FilterKind::dinekf, {}});
  if (config.run_qdekf) runs.push_back({FilterKind::qdekf, {}});

  const Eigen::LLT<Mat9> p0_chol(p0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto id = static_cast<RobotId>(r);
    rec.robots.push_back(id);
    truth[r] = truth_kinematics(trajectories[r], 0.0, world.gravity).state.pose;
    auto bias_rng = streams.stream(RandomStreams::Consumer::bias, r);
    biases[r] = draw_bias(config, bias_rng);
    imu_rng.push_back(streams.stream(RandomStreams::Consumer::imu, r));
    uwb_rng.push_back(streams.stream(RandomStreams::Consumer::uwb, r));
    for (std::size_t j = 0; j < n; ++j) {
      rel_rng[r].push_back(streams.stream(RandomStreams::Consumer::relative, r, j));
    }

    auto init_rng = streams.stream(RandomStreams::Consumer::init, r);
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec9 z;
    for (int k = 0; k < 9; ++k) z(k) = unit(init_rng);
    const Vec9 xi0 = config.init_perturbation ? Vec9(p0_chol.matrixL() * z) : Vec9::Zero();
    // truth = exp(xi0) * estimate
    const GroupElement x0_hat = compose(se23_exp(-xi0), truth[r]);

    for (auto& run : runs) {
      if (run.kind == FilterKind::dinekf) {
        run.robots.push_back(std::make_unique<DinekfEstimator>(
            id, EstimatePair{x0_hat, p0, Stage::posterior, 0}, params));
      } else {
        run.robots.push_back(std::make_unique<QdekfEstimator>(
            id, QuatEstimate{QuatState::from_group(x0_hat), invariant_to_decoupled(x0_hat, p0), 0},
            params));
      }
    }
  }
  for (auto& run : runs) {
    FilterTrack track;
    track.kind = run.kind;
    track.rows.assign(n, {});
    for (auto& rows : track.rows) rows.reserve(static_cast<std::size_t>(steps));
    rec.filters.push_back(std::move(track));
  }

  for (std::int64_t k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * dt;
    const double t1 = static_cast<double>(k + 1) * dt;
    std::vector<ImuSample> measured(n);
    for (std::size_t r = 0; r < n; ++r) {
      // Inputs are held constant over the interval, sampled at its midpoint.
      ImuSample ideal = truth_kinematics(trajectories[r], t0 + 0.5 * dt, world.gravity).imu;
      ideal.timestamp = t1;
      truth[r] = integrate_imu(truth[r], ideal, world);
      measured[r] = corrupt_imu(ideal, biases[r], config, imu_rng[r]);
    }
    for (auto& run : runs) {
      for (std::size_t r = 0; r < n; ++r) run.robots[r]->propagate(measured[r]);
    }

    if ((k + 1) % per_tick == 0) {
      std::map<RobotId, Vec3> positions;
      for (std::size_t r = 0; r < n; ++r) positions[static_cast<RobotId>(r)] = truth[r].position;
      GraphSnapshot snapshot = build_snapshot(k + 1, positions, config.uwb_range);

      std::vector<std::vector<AbsoluteRangeMeasurement>> abs(n);
      std::vector<std::vector<RelativeRangeMeasurement>> rel(n);
      for (std::size_t r = 0; r < n; ++r) {
        const auto id = static_cast<RobotId>(r);
        abs[r] = synthesize_absolute(id, truth[r].position, config, uwb_rng[r]);
        for (const RobotId j : snapshot.neighbors(id)) {
          const auto jj = static_cast<std::size_t>(j);
          rel[r].push_back(synthesize_relative(id, j, truth[r].position, truth[jj].position,
                                               config, rel_rng[r][jj]));
        }
      }
      for (auto& run : runs) {
        std::map<RobotId, NeighborMessage> outboxes;
        for (std::size_t r = 0; r < n; ++r) {
          run.robots[r]->local_update(abs[r]);
          outboxes[static_cast<RobotId>(r)] = run.robots[r]->broadcast();
        }
        const auto inboxes = dcl::exchange(snapshot, outboxes);
        for (std::size_t r = 0; r < n; ++r) {
          run.robots[r]->relative_update(rel[r], inboxes.at(static_cast<RobotId>(r)));
        }
      }
      rec.snapshots.push_back(std::move(snapshot));
    }

    for (std::size_t f = 0; f < runs.size(); ++f) {
      for (std::size_t r = 0; r < n; ++r) {
        const RobotState truth_state{static_cast<RobotId>(r), truth[r]};
        rec.filters[f].rows[r].push_back(
            make_row(t1, truth_state, runs[f].robots[r]->estimate(), runs[f].kind));
      }
    }
  }
  for (std::size_t f = 0; f < runs.size(); ++f) {
    for (const auto& robot : runs[f].robots) rec.filters[f].diagnostics += robot->diagnostics();
  }
  return rec;
}

std::vector<TrialRecord> run_monte_carlo(const ScenarioConfig& config,
                                         const std::vector<int>& presets, int n_trials,
                                         int threads) {
  if (n_trials < 1) throw std::invalid_argument("run_monte_carlo: n_trials must be >= 1");
  struct Job {
    int preset;
    int trial;
  };
  std::vector<Job> jobs;
  for (const int preset : presets) {
    for (int k = 0; k < n_trials; ++k) jobs.push_back({preset, k});
  }
  std::vector<TrialRecord> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto traj =
            preset_trajectories(jobs[i].preset, config.robot_count, config.duration);
        out[i] = run_trial(config, traj, jobs[i].preset,
                           config.seed + static_cast<std::uint64_t>(jobs[i].trial));
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace dcl
