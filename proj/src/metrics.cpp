#include "dcl/metrics.hpp"

#include <cmath>
#include <map>

#include <Eigen/Cholesky>

#include "dcl/qdekf.hpp"

namespace dcl {

std::string to_string(FilterKind kind) {
  return kind == FilterKind::dinekf ? "dinekf" : "qdekf";
}

ErrorSample error_sample(const RobotState& truth, const EstimatePair& estimate, FilterKind kind) {
  ErrorSample s;
  s.timestep = estimate.timestep;
  s.robot = truth.id;
  s.filter = kind;
  s.position_error = truth.pose.position - estimate.state.position;
  s.orientation_error_deg =
      rotation_angle(truth.pose.rotation * estimate.state.rotation.transpose()) * 180.0 / M_PI;
  if (kind == FilterKind::dinekf) {
    s.tangent_error = se23_log(compose(truth.pose, inverse(estimate.state)));
  } else {
    s.tangent_error = q_error(truth.pose, QuatState::from_group(estimate.state));
  }
  s.covariance = estimate.covariance;
  return s;
}

namespace {

bool block_nees(const Mat3& block, const Vec3& err, double& out) {
  Eigen::LLT<Mat3> llt(block);
  if (llt.info() != Eigen::Success) return false;
  out = err.dot(llt.solve(err));
  return std::isfinite(out);
}

}  // namespace

NeesValue nees(const ErrorSample& sample) {
  NeesValue v;
  const Mat3 p_rr = sample.covariance.block<3, 3>(kRotBlock, kRotBlock);
  const Mat3 p_pp = sample.covariance.block<3, 3>(kPosBlock, kPosBlock);
  v.valid = block_nees(p_rr, rot_part(sample.tangent_error), v.onees) &&
            block_nees(p_pp, pos_part(sample.tangent_error), v.pnees);
  if (!v.valid) v.pnees = v.onees = 0.0;
  return v;
}

namespace {

struct TrialMetrics {
  double pos_ms = 0.0;  // robot-averaged mean squared error
  double ori_ms = 0.0;
  double pnees = 0.0;
  double onees = 0.0;
  std::int64_t excluded = 0;
};

TrialMetrics trial_metrics(const FilterTrack& track) {
  TrialMetrics m;
  if (track.rows.empty()) return m;
  for (const auto& robot_rows : track.rows) {
    double pos = 0.0;
    double ori = 0.0;
    double pn = 0.0;
    double on = 0.0;
    std::int64_t valid = 0;
    for (const StepRow& row : robot_rows) {
      pos += row.err_pos_m * row.err_pos_m;
      ori += row.err_ori_deg * row.err_ori_deg;
      if (row.nees_valid) {
        pn += row.pnees;
        on += row.onees;
        ++valid;
      } else {
        ++m.excluded;
      }
    }
    const double n = robot_rows.empty() ? 1.0 : static_cast<double>(robot_rows.size());
    m.pos_ms += pos / n;
    m.ori_ms += ori / n;
    if (valid > 0) {
      m.pnees += pn / static_cast<double>(valid);
      m.onees += on / static_cast<double>(valid);
    }
  }
  const double robots = static_cast<double>(track.rows.size());
  m.pos_ms /= robots;
  m.ori_ms /= robots;
  m.pnees /= robots;
  m.onees /= robots;
  return m;
}

MetricSummary combine(const std::vector<TrialMetrics>& trials) {
  MetricSummary s;
  if (trials.empty()) return s;
  double pos = 0.0;
  double ori = 0.0;
  for (const auto& t : trials) {
    pos += t.pos_ms;
    ori += t.ori_ms;
    s.pnees += t.pnees;
    s.onees += t.onees;
    s.excluded_nees_samples += t.excluded;
  }
  const double n = static_cast<double>(trials.size());
  s.prmse = std::sqrt(pos / n);
  s.ormse = std::sqrt(ori / n);
  s.pnees /= n;
  s.onees /= n;
  s.trials = static_cast<int>(trials.size());
  return s;
}

}  // namespace

MetricSummary summarize_filter(std::span<const TrialRecord> records, FilterKind kind) {
  std::vector<TrialMetrics> trials;
  for (const auto& rec : records) {
    for (const auto& track : rec.filters) {
      if (track.kind == kind) trials.push_back(trial_metrics(track));
    }
  }
  return combine(trials);
}

std::vector<SummaryRow> summarize(std::span<const TrialRecord> records) {
  std::map<std::pair<int, int>, std::vector<TrialMetrics>> groups;
  for (const auto& rec : records) {
    for (const auto& track : rec.filters) {
      groups[{rec.preset, static_cast<int>(track.kind)}].push_back(trial_metrics(track));
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, trials] : groups) {
    rows.push_back({key.first, static_cast<FilterKind>(key.second), combine(trials)});
  }
  return rows;
}

}  // namespace dcl
