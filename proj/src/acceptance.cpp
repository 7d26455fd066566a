#include "dcl/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/MatrixFunctions>

#include "dcl/csv_export.hpp"
#include "dcl/dinekf.hpp"
#include "dcl/fusion.hpp"
#include "dcl/qdekf.hpp"
#include "dcl/scenario.hpp"

namespace dcl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 d(n(rng), n(rng), n(rng));
  return d.normalized() * radius * std::cbrt(u(rng));
}

GroupElement random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-10.0, 10.0);
  std::uniform_real_distribution<double> vel(-3.0, 3.0);
  GroupElement x;
  x.rotation = so3_exp(random_in_ball(rng, M_PI - 0.1));
  x.velocity = Vec3(vel(rng), vel(rng), vel(rng));
  x.position = Vec3(pos(rng), pos(rng), pos(rng));
  return x;
}

// Dense reference: truncated power series of the 3x3 rotation generator.
Mat3 gamma_series(int m, const Vec3& phi, int terms) {
  const Mat3 w = skew(phi);
  Mat3 power = Mat3::Identity();
  Mat3 sum = Mat3::Zero();
  double factorial = 1.0;
  for (int k = 1; k <= m; ++k) factorial *= k;
  for (int k = 0; k < terms; ++k) {
    sum += power / factorial;
    power = power * w;
    factorial *= static_cast<double>(k + m + 1);
  }
  return sum;
}

double row_relative_error(const Row9& analytic, const Row9& numeric) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-12);
}

template <class F>
Row9 central_difference(F&& h, double step = 1e-6) {
  Row9 j;
  for (int k = 0; k < 9; ++k) {
    Vec9 d = Vec9::Zero();
    d(k) = step;
    j(k) = (h(d) - h(-d)) / (2.0 * step);
  }
  return j;
}

}  // namespace

std::string format_result(const CriterionResult& r) {
  char head[160];
  std::snprintf(head, sizeof head, "[%s] %d %s", r.pass() ? "PASS" : "FAIL", r.id, r.name.c_str());
  char tail[96];
  std::snprintf(tail, sizeof tail, " | %.2f s (limit %.0f s)", r.seconds, r.time_limit);
  return std::string(head) + ": measured " + r.measured + " | bound " + r.bound + tail;
}

// ---------------------------------------------------------------- 1

CriterionResult check_lie_exactness(std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kSamples = 10000;

  double roundtrip = 0.0;
  double gamma_err = 0.0;
  double dense_err = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    Vec9 dir;
    for (int k = 0; k < 9; ++k) dir(k) = n(rng);
    // Mix tiny norms in so the series branches are exercised as well.
    const double norm = i % 10 == 0 ? std::pow(10.0, -9.0 + 7.0 * u(rng)) : (M_PI - 0.1) * u(rng);
    const Vec9 xi = dir.normalized() * norm;

    const GroupElement x = se23_exp(xi);
    roundtrip = std::max(roundtrip, (se23_log(x) - xi).norm());

    const Mat5 dense = se23_hat(xi).exp();
    dense_err = std::max(dense_err, (dense - x.matrix()).cwiseAbs().maxCoeff());

    const Vec3 phi = rot_part(xi);
    for (int m = 0; m <= 2; ++m) {
      gamma_err = std::max(gamma_err,
                           (gamma(m, phi) - gamma_series(m, phi, 30)).cwiseAbs().maxCoeff());
    }
  }
  CriterionResult r;
  r.id = 1;
  r.name = "lie-core exactness";
  r.measured = "roundtrip " + sci(roundtrip) + ", gamma " + sci(gamma_err) + ", dense exp " +
               sci(dense_err);
  r.bound = "roundtrip <= 1e-9, gamma <= 1e-12, dense exp <= 1e-9";
  r.value_ok = roundtrip <= 1e-9 && gamma_err <= 1e-12 && dense_err <= 1e-9;
  r.seconds = seconds_since(start);
  r.time_limit = 10.0;
  return r;
}

// ---------------------------------------------------------------- 2

CriterionResult check_jacobian_fidelity(std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-10.0, 10.0);
  constexpr int kStates = 100;

  double inv_err = 0.0;
  double dec_err = 0.0;
  for (int i = 0; i < kStates; ++i) {
    const GroupElement xi = random_state(rng);
    GroupElement xj = random_state(rng);
    Vec3 anchor(box(rng), box(rng), box(rng));
    while ((anchor - xi.position).norm() < 0.5) anchor = Vec3(box(rng), box(rng), box(rng));
    while ((xj.position - xi.position).norm() < 0.5) xj = random_state(rng);
    const RobotState si{0, xi};
    const RobotState sj{1, xj};

    // Invariant filter: truth = exp(d) * estimate.
    const auto perturbed = [](const GroupElement& x, const Vec9& d) {
      return RobotState{0, compose(se23_exp(d), x)};
    };
    const Row9 fd_abs = central_difference(
        [&](const Vec9& d) { return abs_range_predict(perturbed(xi, d), anchor); });
    inv_err = std::max(inv_err, row_relative_error(abs_range_jacobian(si, anchor), fd_abs));

    const RelativeJacobians rel = rel_range_jacobians(si, sj);
    const Row9 fd_obs = central_difference(
        [&](const Vec9& d) { return rel_range_predict(perturbed(xi, d), sj); });
    const Row9 fd_tgt = central_difference(
        [&](const Vec9& d) { return rel_range_predict(si, perturbed(xj, d)); });
    inv_err = std::max(inv_err, row_relative_error(rel.observer, fd_obs));
    inv_err = std::max(inv_err, row_relative_error(rel.target, fd_tgt));

    // Baseline: truth = retract(estimate, d).
    const QuatState qi = QuatState::from_group(xi);
    const QuatState qj = QuatState::from_group(xj);
    const auto qstate = [](const QuatState& q, const Vec9& d) {
      return RobotState{0, q_retract(q, d).as_group()};
    };
    const Row9 qfd_abs = central_difference(
        [&](const Vec9& d) { return abs_range_predict(qstate(qi, d), anchor); });
    dec_err = std::max(dec_err, row_relative_error(q_abs_range_jacobian(qi, anchor), qfd_abs));

    const RelativeJacobians qrel = q_rel_range_jacobians(qi, qj);
    const Row9 qfd_obs = central_difference([&](const Vec9& d) {
      return rel_range_predict(qstate(qi, d), RobotState{1, qj.as_group()});
    });
    const Row9 qfd_tgt = central_difference([&](const Vec9& d) {
      return rel_range_predict(RobotState{0, qi.as_group()}, qstate(qj, d));
    });
    dec_err = std::max(dec_err, row_relative_error(qrel.observer, qfd_obs));
    dec_err = std::max(dec_err, row_relative_error(qrel.target, qfd_tgt));
  }
  CriterionResult r;
  r.id = 2;
  r.name = "jacobian fidelity";
  r.measured = "dinekf " + sci(inv_err) + ", qdekf " + sci(dec_err) + " (max relative error)";
  r.bound = "<= 1e-5";
  r.value_ok = inv_err <= 1e-5 && dec_err <= 1e-5;
  r.seconds = seconds_since(start);
  r.time_limit = 5.0;
  return r;
}

// ---------------------------------------------------------------- 3

CriterionResult check_transition_independence(std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const WorldConstants world;
  const ImuNoiseSpec silent{0.0, 0.0, 0.0, 0.0};
  constexpr int kEstimates = 100;

  // The transition actually applied by propagate(): with zero process noise
  // and P = I the propagated covariance is Phi Phi^T.
  Mat9 reference_phi;
  Mat9 reference_cov;
  int phi_mismatch = 0;
  int cov_mismatch = 0;
  double min_f_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kEstimates; ++i) {
    const GroupElement x = random_state(rng);
    const ImuSample imu{Vec3(n(rng), n(rng), n(rng)), Vec3(n(rng), n(rng), n(rng)) * 5.0,
                        world.imu_dt};
    const Mat9 phi = state_transition(world);
    const EstimatePair prior =
        propagate(EstimatePair{x, Mat9::Identity(), Stage::posterior, 0}, imu, silent, world);
    if (i == 0) {
      reference_phi = phi;
      reference_cov = prior.covariance;
    } else {
      phi_mismatch += std::memcmp(phi.data(), reference_phi.data(), sizeof(Mat9)) != 0;
      cov_mismatch +=
          std::memcmp(prior.covariance.data(), reference_cov.data(), sizeof(Mat9)) != 0;
    }

    // Baseline: same estimate, two different accelerometer readings.
    const QuatState q = QuatState::from_group(x);
    ImuSample other = imu;
    other.accel += Vec3(n(rng), n(rng), n(rng)) + Vec3(1.0, 0.0, 0.0);
    const Mat9 fa = q_error_transition(q, imu, world);
    const Mat9 fb = q_error_transition(q, other, world);
    min_f_gap = std::min(min_f_gap, (fa - fb).cwiseAbs().maxCoeff());
  }
  CriterionResult r;
  r.id = 3;
  r.name = "estimate independence";
  r.measured = "dinekf Phi mismatches " + std::to_string(phi_mismatch) +
               ", propagated-cov mismatches " + std::to_string(cov_mismatch) +
               ", qdekf min |F(a1)-F(a2)| " + sci(min_f_gap);
  r.bound = "0 mismatches over 100 estimates; F gap > 0";
  r.value_ok = phi_mismatch == 0 && cov_mismatch == 0 && min_f_gap > 0.0;
  r.seconds = seconds_since(start);
  r.time_limit = 1.0;
  return r;
}

// ---------------------------------------------------------------- 4

CriterionResult check_noise_free(const ScenarioConfig& base) {
  const auto start = Clock::now();
  ScenarioConfig c = base;
  // Filters keep their nominal noise model; only the simulation is silent.
  c.filter_gyro_noise = base.filter_params().noise.gyro_noise_std;
  c.filter_accel_noise = base.filter_params().noise.accel_noise_std;
  c.filter_uwb_noise = std::sqrt(base.filter_uwb_var());
  c.gyro_noise = c.accel_noise = c.uwb_noise = 0.0;
  c.biases_enabled = false;
  c.init_perturbation = false;
  c.robot_count = 4;
  c.duration = 60.0;
  c.run_dinekf = true;
  c.run_qdekf = false;

  const TrialRecord rec = run_trial(c, preset_trajectories(1, c.robot_count, c.duration), 1, c.seed);
  double worst = 0.0;
  for (const auto& robot_rows : rec.filters.at(0).rows) {
    for (const StepRow& row : robot_rows) worst = std::max(worst, row.err_norm);
  }
  CriterionResult r;
  r.id = 4;
  r.name = "noise-free sanity";
  r.measured = "max invariant-error norm " + sci(worst);
  r.bound = "<= 1e-5";
  r.value_ok = worst <= 1e-5;
  r.seconds = seconds_since(start);
  r.time_limit = 30.0;
  return r;
}

// ---------------------------------------------------------------- 5 and 6

MonteCarloChecks check_monte_carlo(const ScenarioConfig& config, int threads) {
  const auto start = Clock::now();
  ScenarioConfig c = config;
  c.run_dinekf = c.run_qdekf = true;
  const std::vector<TrialRecord> records =
      run_monte_carlo(c, {1, 2, 3}, kAcceptanceTrialsPerPreset, threads);
  const std::vector<SummaryRow> rows = summarize(records);
  const double elapsed = seconds_since(start);

  bool consistent = true;
  bool ordered = true;
  std::string nees_text;
  std::string order_text;
  for (int preset = 1; preset <= 3; ++preset) {
    const MetricSummary* d = nullptr;
    const MetricSummary* q = nullptr;
    for (const auto& row : rows) {
      if (row.preset != preset) continue;
      (row.filter == FilterKind::dinekf ? d : q) = &row.summary;
    }
    if (d == nullptr || q == nullptr) {
      consistent = ordered = false;
      continue;
    }
    const auto in_band = [](double v) { return v >= 2.0 && v <= 4.5; };
    consistent = consistent && in_band(d->pnees) && in_band(d->onees);
    const bool ormse_ok = d->ormse < q->ormse;
    const bool onees_ok = std::abs(d->onees - 3.0) < std::abs(q->onees - 3.0);
    ordered = ordered && ormse_ok && onees_ok;

    const std::string tag = "p" + std::to_string(preset) + " ";
    if (!nees_text.empty()) nees_text += "; ";
    nees_text += tag + "PNEES " + fixed(d->pnees) + " ONEES " + fixed(d->onees);
    if (!order_text.empty()) order_text += "; ";
    order_text += tag + "ORMSE " + fixed(d->ormse) + " vs " + fixed(q->ormse) + " deg, |ONEES-3| " +
                  fixed(std::abs(d->onees - 3.0)) + " vs " + fixed(std::abs(q->onees - 3.0)) +
                  " (PRMSE " + fixed(d->prmse) + " m)";
  }

  MonteCarloChecks out;
  out.consistency.id = 5;
  out.consistency.name = "dinekf consistency (20 trials/preset)";
  out.consistency.measured = nees_text;
  out.consistency.bound = "PNEES, ONEES in [2.0, 4.5] on every preset";
  out.consistency.value_ok = consistent;
  out.consistency.seconds = elapsed;
  out.consistency.time_limit = 600.0;

  out.ordering.id = 6;
  out.ordering.name = "ordering dinekf vs qdekf";
  out.ordering.measured = order_text;
  out.ordering.bound = "ORMSE and |ONEES-3| strictly smaller for dinekf on every preset";
  out.ordering.value_ok = ordered;
  out.ordering.seconds = elapsed;
  out.ordering.time_limit = 600.0;
  return out;
}

// ---------------------------------------------------------------- 7

CriterionResult check_ci_vs_naive(const ScenarioConfig& base, int threads) {
  const auto start = Clock::now();
  // Two robots on the inner circles of preset 1 stay within link range the
  // whole run and re-fuse each other's estimates at every tick; with only
  // two anchors the relative ranges carry most of the information.
  ScenarioConfig c = base;
  c.robot_count = 2;
  c.anchors.resize(std::min<std::size_t>(2, c.anchors.size()));
  c.duration = 60.0;
  c.run_dinekf = true;
  c.run_qdekf = false;
  constexpr int kTrials = 10;

  c.fusion = FusionMode::ci;
  const auto ci = summarize_filter(run_monte_carlo(c, {1}, kTrials, threads), FilterKind::dinekf);
  c.fusion = FusionMode::naive;
  const auto naive =
      summarize_filter(run_monte_carlo(c, {1}, kTrials, threads), FilterKind::dinekf);

  CriterionResult r;
  r.id = 7;
  r.name = "ci vs naive re-fusion";
  r.measured = "position ANEES naive " + fixed(naive.pnees) + ", ci " + fixed(ci.pnees);
  r.bound = "naive > 4.5, ci <= 4.5";
  r.value_ok = naive.pnees > 4.5 && ci.pnees <= 4.5;
  r.seconds = seconds_since(start);
  r.time_limit = 60.0;
  return r;
}

// ---------------------------------------------------------------- 8

CriterionResult check_synthetic_ci(std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  constexpr int kDraws = 10000;
  const double band = 3.0 + 3.0 * std::sqrt(6.0 / kDraws);

  const auto random_spd = [&] {
    Mat9 a;
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) a(i, j) = n(rng);
    return Mat9(0.2 * a * a.transpose() + 0.5 * Mat9::Identity());
  };
  const Mat9 pa = random_spd();
  const Mat9 pb = random_spd();
  const Mat9 la = pa.llt().matrixL();
  const Mat9 lb = pb.llt().matrixL();
  const Mat9 pb_inv = pb.inverse();

  double worst_ci = 0.0;
  double naive_at_09 = 0.0;
  std::string text;
  for (const double rho : {0.0, 0.5, 0.9}) {
    double ci_sum[3] = {0.0, 0.0, 0.0};
    double naive_sum[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < kDraws; ++d) {
      Vec9 z1, z2;
      for (int k = 0; k < 9; ++k) {
        z1(k) = n(rng);
        z2(k) = n(rng);
      }
      // Truth at the origin; errors share a fraction rho of their noise.
      const Vec9 xa = la * z1;
      const Vec9 xb = lb * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
      CorrectionPair pair;
      pair.s = pb_inv;
      pair.y = pb_inv * (xb - xa);
      pair.neighbor_id = 1;
      const std::vector<CorrectionPair> pairs{pair};

      const CiWeights w = select_ci_weights(pa, pairs);
      const double alpha = w.alpha_neighbor.at(1);
      const FusedInformation ci =
          fuse_information(pa, pairs, w.alpha_self, std::span<const double>(&alpha, 1));
      const double one = 1.0;
      const FusedInformation naive =
          fuse_information(pa, pairs, 1.0, std::span<const double>(&one, 1));

      for (int b = 0; b < 3; ++b) {
        const Vec3 e_ci = (xa + ci.correction).segment<3>(3 * b);
        const Vec3 e_nv = (xa + naive.correction).segment<3>(3 * b);
        const Mat3 p_ci = ci.covariance.block<3, 3>(3 * b, 3 * b);
        const Mat3 p_nv = naive.covariance.block<3, 3>(3 * b, 3 * b);
        ci_sum[b] += e_ci.dot(p_ci.llt().solve(e_ci));
        naive_sum[b] += e_nv.dot(p_nv.llt().solve(e_nv));
      }
    }
    double ci_max = 0.0;
    double naive_max = 0.0;
    for (int b = 0; b < 3; ++b) {
      ci_max = std::max(ci_max, ci_sum[b] / kDraws);
      naive_max = std::max(naive_max, naive_sum[b] / kDraws);
    }
    worst_ci = std::max(worst_ci, ci_max);
    if (rho == 0.9) naive_at_09 = naive_max;
    if (!text.empty()) text += "; ";
    text += "rho " + fixed(rho, 1) + ": ci " + fixed(ci_max) + " naive " + fixed(naive_max);
  }
  CriterionResult r;
  r.id = 8;
  r.name = "synthetic ci property";
  r.measured = text + " (max block NEES)";
  r.bound = "ci <= " + fixed(band) + " for all rho; naive > " + fixed(band) + " at rho 0.9";
  r.value_ok = worst_ci <= band && naive_at_09 > band;
  r.seconds = seconds_since(start);
  r.time_limit = 30.0;
  return r;
}

// ---------------------------------------------------------------- 9

CriterionResult check_determinism(const ScenarioConfig& config, int threads) {
  const auto start = Clock::now();
  constexpr int kTrials = 3;
  const std::vector<int> presets{1, 2, 3};
  const auto render = [&](int workers) {
    const auto records = run_monte_carlo(config, presets, kTrials, workers);
    std::string all;
    for (const auto& rec : records) all += trial_file_name(rec) + "\n" + trial_csv(rec);
    all += summary_csv(summarize(records));
    return all;
  };
  const std::string serial = render(1);
  const std::string parallel = render(std::max(threads, 4));
  std::size_t first_diff = 0;
  while (first_diff < std::min(serial.size(), parallel.size()) &&
         serial[first_diff] == parallel[first_diff]) {
    ++first_diff;
  }
  const bool same = serial == parallel;

  CriterionResult r;
  r.id = 9;
  r.name = "determinism serial vs parallel";
  r.measured = same ? std::to_string(serial.size()) + " bytes identical"
                    : "first difference at byte " + std::to_string(first_diff);
  r.bound = "byte-identical CSVs";
  r.value_ok = same && !serial.empty();
  r.seconds = seconds_since(start);
  r.time_limit = 120.0;
  return r;
}

std::vector<CriterionResult> run_acceptance(const RunConfig& config,
                                            std::span<const int> selected) {
  const auto wanted = [&](int id) {
    return selected.empty() || std::find(selected.begin(), selected.end(), id) != selected.end();
  };
  const ScenarioConfig& s = config.scenario;
  std::vector<CriterionResult> out;
  if (wanted(1)) out.push_back(check_lie_exactness(s.seed));
  if (wanted(2)) out.push_back(check_jacobian_fidelity(s.seed));
  if (wanted(3)) out.push_back(check_transition_independence(s.seed));
  if (wanted(4)) out.push_back(check_noise_free(s));
  if (wanted(5) || wanted(6)) {
    MonteCarloChecks mc = check_monte_carlo(s, config.threads);
    if (wanted(5)) out.push_back(std::move(mc.consistency));
    if (wanted(6)) out.push_back(std::move(mc.ordering));
  }
  if (wanted(7)) out.push_back(check_ci_vs_naive(s, config.threads));
  if (wanted(8)) out.push_back(check_synthetic_ci(s.seed));
  if (wanted(9)) out.push_back(check_determinism(s, config.threads));
  return out;
}

}  // namespace dcl
