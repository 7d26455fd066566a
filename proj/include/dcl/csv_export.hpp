#pragma once

#include <span>
#include <string>

#include "dcl/metrics.hpp"

namespace dcl {

/// Bumped on any breaking change to the column set or its meaning.
inline constexpr int kCsvSchemaVersion = 1;

/// Per-trial time series, one row per (filter, robot, propagation step):
///   schema_version,t,robot,filter,px_true,py_true,pz_true,px_est,py_est,pz_est,
///   err_pos_m,err_ori_deg,pnees,onees
/// Empty NEES cells mark singular covariance blocks.
std::string trial_csv(const TrialRecord& record);

/// One row per (preset, filter):
///   schema_version,preset,filter,trials,prmse_m,ormse_deg,pnees,onees,excluded_nees_samples
std::string summary_csv(std::span<const SummaryRow> rows);

/// File name used for a trial's CSV, e.g. "trial_p1_s000042.csv".
std::string trial_file_name(const TrialRecord& record);

}  // namespace dcl
