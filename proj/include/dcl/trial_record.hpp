#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcl/comm_graph.hpp"

namespace dcl {

enum class FilterKind { dinekf, qdekf };

std::string to_string(FilterKind kind);

/// Per-robot, per-timestep output of one filter, reduced to what the
/// metrics and CSV export consume.
struct StepRow {
  double t = 0.0;
  Vec3 p_true = Vec3::Zero();
  Vec3 p_est = Vec3::Zero();
  double err_pos_m = 0.0;
  double err_ori_deg = 0.0;
  double err_norm = 0.0;  // |xi| in the filter's own error coordinates
  double pnees = 0.0;
  double onees = 0.0;
  bool nees_valid = true;
};

struct FilterTrack {
  FilterKind kind = FilterKind::dinekf;
  std::vector<std::vector<StepRow>> rows;  // [robot index][step]
  Diagnostics diagnostics;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  int preset = 1;
  std::vector<RobotId> robots;
  std::vector<FilterTrack> filters;
  std::vector<GraphSnapshot> snapshots;  // one per UWB tick
};

}  // namespace dcl
