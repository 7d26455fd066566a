#pragma once

#include <span>
#include <vector>

#include "dcl/trial_record.hpp"
#include "dcl/vehicle_model.hpp"

namespace dcl {

struct ErrorSample {
  std::int64_t timestep = 0;
  RobotId robot = 0;
  FilterKind filter = FilterKind::dinekf;
  Vec3 position_error = Vec3::Zero();   // p_true - p_hat, global frame
  double orientation_error_deg = 0.0;   // geodesic angle of R_true R_hat^T
  Vec9 tangent_error = Vec9::Zero();    // filter-native error coordinates
  Mat9 covariance = Mat9::Identity();
};

/// Errors of `estimate` against `truth`. The invariant filter's tangent
/// error is log(X X_hat^-1); the baseline's is its decoupled
/// (dtheta_body, dv, dp).
ErrorSample error_sample(const RobotState& truth, const EstimatePair& estimate, FilterKind kind);

struct NeesValue {
  double pnees = 0.0;
  double onees = 0.0;
  bool valid = true;  // false when a 3x3 marginal block is singular
};

/// NEES of the position and rotation 3x3 marginal blocks separately.
NeesValue nees(const ErrorSample& sample);

struct MetricSummary {
  double prmse = 0.0;  // m
  double ormse = 0.0;  // deg
  double pnees = 0.0;
  double onees = 0.0;
  std::int64_t excluded_nees_samples = 0;
  int trials = 0;
};

struct SummaryRow {
  int preset = 1;
  FilterKind filter = FilterKind::dinekf;
  MetricSummary summary;
};

/// Aggregates time -> robot -> trial. RMSE values are combined as
/// quadratic means at every level; NEES values as arithmetic means.
/// Rows are grouped by (preset, filter), ordered by preset then filter.
std::vector<SummaryRow> summarize(std::span<const TrialRecord> records);

/// Summary of one filter over one set of tracks (any presets).
MetricSummary summarize_filter(std::span<const TrialRecord> records, FilterKind kind);

}  // namespace dcl
