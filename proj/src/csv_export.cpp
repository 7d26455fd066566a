#include "dcl/csv_export.hpp"

#include <cstdio>

namespace dcl {

namespace {

void append(std::string& out, const char* fmt, double v) {
  char buf[48];
  const int n = std::snprintf(buf, sizeof buf, fmt, v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string trial_csv(const TrialRecord& record) {
  std::string out =
      "schema_version,t,robot,filter,px_true,py_true,pz_true,px_est,py_est,pz_est,"
      "err_pos_m,err_ori_deg,pnees,onees\n";
  const std::string version = std::to_string(kCsvSchemaVersion);
  for (const FilterTrack& track : record.filters) {
    const std::string name = to_string(track.kind);
    for (std::size_t r = 0; r < track.rows.size(); ++r) {
      const std::string robot = std::to_string(record.robots.at(r));
      for (const StepRow& row : track.rows[r]) {
        out += version;
        append(out, ",%.3f", row.t);
        out += ',' + robot + ',' + name;
        for (int k = 0; k < 3; ++k) append(out, ",%.9g", row.p_true(k));
        for (int k = 0; k < 3; ++k) append(out, ",%.9g", row.p_est(k));
        append(out, ",%.9g", row.err_pos_m);
        append(out, ",%.9g", row.err_ori_deg);
        if (row.nees_valid) {
          append(out, ",%.9g", row.pnees);
          append(out, ",%.9g", row.onees);
        } else {
          out += ",,";
        }
        out += '\n';
      }
    }
  }
  return out;
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::string out =
      "schema_version,preset,filter,trials,prmse_m,ormse_deg,pnees,onees,"
      "excluded_nees_samples\n";
  for (const SummaryRow& row : rows) {
    out += std::to_string(kCsvSchemaVersion) + ',' + std::to_string(row.preset) + ',' +
           to_string(row.filter) + ',' + std::to_string(row.summary.trials);
    append(out, ",%.6f", row.summary.prmse);
    append(out, ",%.6f", row.summary.ormse);
    append(out, ",%.6f", row.summary.pnees);
    append(out, ",%.6f", row.summary.onees);
    out += ',' + std::to_string(row.summary.excluded_nees_samples) + '\n';
  }
  return out;
}

std::string trial_file_name(const TrialRecord& record) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "trial_p%d_s%06llu.csv", record.preset,
                static_cast<unsigned long long>(record.seed));
  return buf;
}

}  // namespace dcl
