#include <gtest/gtest.h>

#include <cmath>

#include "dcl/csv_export.hpp"
#include "dcl/scenario.hpp"
#include "test_util.hpp"

using namespace dcl;

namespace {

ScenarioConfig short_config(double duration) {
  ScenarioConfig c;
  c.duration = duration;
  return c;
}

struct Kinematic {
  Mat3 r;
  Vec3 v;
  Vec3 p;
};

// Classical RK4 on R' = R skew(w), v' = R a + g, p' = v with the ideal IMU
// evaluated at the stage times.
Kinematic rk4_step(const Kinematic& x, const TrajectorySpec& spec, double t, double h,
                   const Vec3& g) {
  const auto deriv = [&](const Kinematic& s, double tt) {
    const ImuSample imu = truth_kinematics(spec, tt, g).imu;
    return Kinematic{s.r * skew(imu.omega), s.r * imu.accel + g, s.v};
  };
  const auto add = [](const Kinematic& a, const Kinematic& d, double k) {
    return Kinematic{a.r + k * d.r, a.v + k * d.v, a.p + k * d.p};
  };
  const Kinematic k1 = deriv(x, t);
  const Kinematic k2 = deriv(add(x, k1, h / 2), t + h / 2);
  const Kinematic k3 = deriv(add(x, k2, h / 2), t + h / 2);
  const Kinematic k4 = deriv(add(x, k3, h), t + h);
  Kinematic out{x.r + h / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r),
                x.v + h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v),
                x.p + h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p)};
  out.r = orthonormalize(out.r);
  return out;
}

bool same_records(const TrialRecord& a, const TrialRecord& b) {
  if (trial_csv(a) != trial_csv(b)) return false;
  for (std::size_t f = 0; f < a.filters.size(); ++f) {
    for (std::size_t r = 0; r < a.filters[f].rows.size(); ++r) {
      for (std::size_t k = 0; k < a.filters[f].rows[r].size(); ++k) {
        const StepRow& x = a.filters[f].rows[r][k];
        const StepRow& y = b.filters[f].rows[r][k];
        if (x.err_norm != y.err_norm || x.p_est != y.p_est || x.pnees != y.pnees) return false;
      }
    }
  }
  return a.snapshots.size() == b.snapshots.size();
}

}  // namespace

TEST(Truth, CircleSpeedIsRadiusTimesRate) {
  TrajectorySpec s;
  s.kind = TrajectorySpec::Kind::circle;
  s.amplitude = Vec3(2.0, 0, 0);
  s.rate = Vec3(0.5, 0, 0);
  const TruthSample t0 = truth_kinematics(s, 0.0, Vec3(0, 0, -9.81));
  EXPECT_NEAR(t0.state.pose.velocity.norm(), 1.0, 1e-14);
  EXPECT_NEAR(t0.state.pose.position.x(), 2.0, 1e-14);
  // Body x axis points along the velocity.
  EXPECT_LT((t0.state.pose.rotation.col(0) - t0.state.pose.velocity.normalized()).norm(), 1e-12);
}

TEST(Truth, HoverNeedsOnlyGravityCompensation) {
  TrajectorySpec s;
  s.center = Vec3(1, 2, 3);
  const Vec3 g(0, 0, -9.81);
  for (const double t : {0.0, 1.0, 30.0}) {
    const TruthSample ts = truth_kinematics(s, t, g);
    EXPECT_EQ(ts.imu.omega, Vec3::Zero());
    EXPECT_LT((ts.imu.accel + ts.state.pose.rotation.transpose() * g).norm(), 1e-14);
    EXPECT_EQ(ts.state.pose.position, Vec3(1, 2, 3));
  }
  EXPECT_THROW(truth_kinematics(s, -1.0, g), std::out_of_range);
}

TEST(Truth, HighRateIntegrationReproducesEveryPreset) {
  const Vec3 g(0, 0, -9.81);
  for (int preset = 1; preset <= 3; ++preset) {
    for (const auto& spec : preset_trajectories(preset, 4, 60.0)) {
      const TruthSample start = truth_kinematics(spec, 0.0, g);
      Kinematic x{start.state.pose.rotation, start.state.pose.velocity, start.state.pose.position};
      const double h = 1e-3;
      for (int k = 0; k < 10000; ++k) x = rk4_step(x, spec, k * h, h, g);
      const Vec3 analytic = truth_kinematics(spec, 10.0, g).state.pose.position;
      EXPECT_LT((x.p - analytic).norm(), 1e-3) << "preset " << preset;
    }
  }
}

TEST(Presets, ShapesAndValidation) {
  for (int preset = 1; preset <= 3; ++preset) {
    EXPECT_EQ(preset_trajectories(preset, 4, 60.0).size(), 4u);
    EXPECT_EQ(preset_trajectories(preset, 2, 60.0).size(), 2u);
  }
  EXPECT_THROW(preset_trajectories(4, 4, 60.0), std::invalid_argument);
  EXPECT_THROW(preset_trajectories(1, 5, 60.0), std::invalid_argument);
  EXPECT_EQ(default_anchors().size(), 4u);
}

TEST(Presets, LinksAndAnchorCoverageComeAndGo) {
  const ScenarioConfig c;
  const Vec3 g = c.gravity;
  for (int preset = 1; preset <= 3; ++preset) {
    const auto specs = preset_trajectories(preset, 4, c.duration);
    int link_changes = 0;
    int coverage_changes = 0;
    std::set<std::pair<RobotId, RobotId>> previous_edges;
    std::vector<int> previous_visible(specs.size(), -1);
    for (int tick = 0; tick <= 600; ++tick) {
      std::map<RobotId, Vec3> pos;
      for (std::size_t r = 0; r < specs.size(); ++r) {
        pos[static_cast<RobotId>(r)] = truth_kinematics(specs[r], tick * 0.1, g).state.pose.position;
      }
      const GraphSnapshot snap = build_snapshot(tick, pos, c.uwb_range);
      if (tick > 0 && snap.edges() != previous_edges) ++link_changes;
      previous_edges = snap.edges();
      for (std::size_t r = 0; r < specs.size(); ++r) {
        int visible = 0;
        for (const Vec3& a : c.anchors) visible += (pos[static_cast<RobotId>(r)] - a).norm() <= c.uwb_range;
        if (previous_visible[r] >= 0 && visible != previous_visible[r]) ++coverage_changes;
        previous_visible[r] = visible;
      }
    }
    EXPECT_GT(link_changes, 0) << "preset " << preset;
    EXPECT_GT(coverage_changes, 0) << "preset " << preset;
  }
}

TEST(Sensors, NoiseFreeMeasurementsEqualPredictions) {
  ScenarioConfig c;
  c.uwb_noise = 0.0;
  c.filter_uwb_noise = 0.05;
  std::mt19937_64 rng(401);
  const Vec3 p(2, 3, 1);
  const auto abs = synthesize_absolute(0, p, c, rng);
  ASSERT_EQ(abs.size(), 4u);
  for (const auto& z : abs) {
    EXPECT_EQ(z.range, abs_range_predict(RobotState{0, GroupElement{Mat3::Identity(), Vec3::Zero(), p}},
                                         z.anchor_position));
    EXPECT_DOUBLE_EQ(z.noise_var, 0.0025);
  }
  const Vec3 q(5, -1, 2);
  const auto rel = synthesize_relative(0, 1, p, q, c, rng);
  EXPECT_EQ(rel.range, (p - q).norm());
  EXPECT_EQ(rel.observer_id, 0);
  EXPECT_EQ(rel.target_id, 1);

  ImuBias bias;
  ScenarioConfig quiet = c;
  quiet.gyro_noise = quiet.accel_noise = 0.0;
  const ImuSample ideal{Vec3(0.1, 0.2, 0.3), Vec3(0, 0, 9.81), 0.01};
  const ImuSample out = corrupt_imu(ideal, bias, quiet, rng);
  EXPECT_EQ(out.omega, ideal.omega);
  EXPECT_EQ(out.accel, ideal.accel);
}

TEST(Sensors, AnchorsBeyondRangeAreSilent) {
  ScenarioConfig c;
  c.anchors = {Vec3(0, 0, 0), Vec3(12, 0, 0)};
  std::mt19937_64 rng(403);
  const auto abs = synthesize_absolute(0, Vec3::Zero() + Vec3(0.0, 0.0, 0.5), c, rng);
  ASSERT_EQ(abs.size(), 1u);
  EXPECT_EQ(abs[0].anchor_id, 0);
}

TEST(Sensors, RangeNoiseHasConfiguredSpread) {
  const ScenarioConfig c;
  std::mt19937_64 rng(405);
  const Vec3 p(3, 2, 1);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double e = synthesize_relative(0, 1, p, Vec3(7, 5, 1), c, rng).range - 5.0;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, 0.05, 0.002);
}

TEST(Sensors, BiasMagnitudesFollowConfig) {
  ScenarioConfig c;
  std::mt19937_64 rng(407);
  for (int i = 0; i < 20; ++i) {
    const ImuBias b = draw_bias(c, rng);
    for (int k = 0; k < 3; ++k) {
      EXPECT_DOUBLE_EQ(std::abs(b.gyro(k)), 3e-4);
      EXPECT_DOUBLE_EQ(std::abs(b.accel(k)), 3e-4);
    }
  }
  c.biases_enabled = false;
  const ImuBias none = draw_bias(c, rng);
  EXPECT_EQ(none.gyro, Vec3::Zero());
  EXPECT_EQ(none.accel, Vec3::Zero());
}

TEST(Streams, DeterministicAndIndependent) {
  const RandomStreams s(42);
  auto a = s.stream(RandomStreams::Consumer::imu, 1);
  auto b = s.stream(RandomStreams::Consumer::imu, 1);
  auto c = s.stream(RandomStreams::Consumer::uwb, 1);
  auto d = s.stream(RandomStreams::Consumer::imu, 2);
  auto e = RandomStreams(43).stream(RandomStreams::Consumer::imu, 1);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
  EXPECT_NE(va, e());
}

TEST(Config, Validation) {
  ScenarioConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.imu_per_uwb(), 10);
  EXPECT_EQ(c.steps(), 6000);
  c.uwb_rate = 30.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ScenarioConfig{};
  c.uwb_noise = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);  // filter variance would be zero
  c.filter_uwb_noise = 0.05;
  EXPECT_NO_THROW(c.validate());
}

TEST(Trial, OneRowPerStepPerRobotPerFilter) {
  const ScenarioConfig c = short_config(1.0);
  const TrialRecord rec = run_trial(c, preset_trajectories(1, 4, c.duration), 1, 7);
  ASSERT_EQ(rec.filters.size(), 2u);
  for (const auto& f : rec.filters) {
    ASSERT_EQ(f.rows.size(), 4u);
    for (const auto& rows : f.rows) {
      ASSERT_EQ(rows.size(), 100u);
      EXPECT_NEAR(rows.front().t, 0.01, 1e-12);
      EXPECT_NEAR(rows.back().t, 1.0, 1e-12);
    }
  }
  EXPECT_EQ(rec.snapshots.size(), 10u);
}

TEST(Trial, NoiseFreeRunTracksTruthExactly) {
  ScenarioConfig c = short_config(10.0);
  c.gyro_noise = c.accel_noise = c.uwb_noise = 0.0;
  c.filter_gyro_noise = 2e-2;
  c.filter_accel_noise = 3e-3;
  c.filter_uwb_noise = 0.05;
  c.biases_enabled = false;
  c.init_perturbation = false;
  for (int preset = 1; preset <= 3; ++preset) {
    const TrialRecord rec = run_trial(c, preset_trajectories(preset, 4, c.duration), preset, 3);
    for (const auto& f : rec.filters) {
      for (const auto& rows : f.rows) {
        for (const StepRow& row : rows) {
          if (f.kind == FilterKind::dinekf) ASSERT_LE(row.err_norm, 1e-6);
          ASSERT_LE(row.err_pos_m, 1e-6);
        }
      }
    }
  }
}

TEST(Trial, SameSeedSameRecord) {
  const ScenarioConfig c = short_config(3.0);
  const auto traj = preset_trajectories(2, 4, c.duration);
  EXPECT_TRUE(same_records(run_trial(c, traj, 2, 11), run_trial(c, traj, 2, 11)));
  EXPECT_FALSE(same_records(run_trial(c, traj, 2, 11), run_trial(c, traj, 2, 12)));
}

TEST(Trial, FullLengthRunStaysBoundedAndClean) {
  const ScenarioConfig c;
  const TrialRecord rec = run_trial(c, preset_trajectories(1, 4, c.duration), 1, 5);
  for (const auto& f : rec.filters) {
    EXPECT_EQ(f.diagnostics.clamped_covariances, 0);
    for (const auto& rows : f.rows) {
      for (const StepRow& row : rows) {
        ASSERT_TRUE(std::isfinite(row.err_pos_m));
        ASSERT_LT(row.err_pos_m, 2.0);
        ASSERT_LT(row.err_ori_deg, 20.0);
      }
    }
  }
}

TEST(MonteCarlo, SingleTrialEqualsRunTrialAndThreadsDoNotMatter) {
  ScenarioConfig c = short_config(2.0);
  c.seed = 100;
  const auto one = run_monte_carlo(c, {3}, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(same_records(one[0], run_trial(c, preset_trajectories(3, 4, c.duration), 3, 100)));

  const auto serial = run_monte_carlo(c, {1, 2, 3}, 3, 1);
  const auto parallel = run_monte_carlo(c, {1, 2, 3}, 3, 4);
  ASSERT_EQ(serial.size(), 9u);
  ASSERT_EQ(parallel.size(), 9u);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].preset, parallel[i].preset);
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_TRUE(same_records(serial[i], parallel[i]));
  }
  EXPECT_THROW(run_monte_carlo(c, {1}, 0), std::invalid_argument);
}
