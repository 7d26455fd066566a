#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dcl/estimate.hpp"

namespace dcl {

/// Broadcast payload: a robot's intermediate estimate at one timestep.
struct NeighborMessage {
  RobotId sender = 0;
  std::int64_t timestep = 0;
  EstimatePair estimate;
};

/// Directed sensing/communication graph at one timestep. An edge (j, i)
/// means robot i senses and hears robot j.
class GraphSnapshot {
 public:
  GraphSnapshot() = default;
  GraphSnapshot(std::int64_t timestep, std::vector<RobotId> robots,
                std::set<std::pair<RobotId, RobotId>> edges);

  std::int64_t timestep() const { return timestep_; }
  const std::vector<RobotId>& robots() const { return robots_; }
  const std::set<std::pair<RobotId, RobotId>>& edges() const { return edges_; }
  bool has_edge(RobotId from, RobotId to) const { return edges_.contains({from, to}); }

  /// N_i = { j | (j, i) in E }, ascending.
  std::vector<RobotId> neighbors(RobotId i) const;

 private:
  std::int64_t timestep_ = 0;
  std::vector<RobotId> robots_;
  std::set<std::pair<RobotId, RobotId>> edges_;
};

/// Edges between every ordered pair closer than `sensing_range` (inclusive).
/// Communication range is taken equal to sensing range.
GraphSnapshot build_snapshot(std::int64_t timestep, const std::map<RobotId, Vec3>& true_positions,
                             double sensing_range);

/// Synchronous lossless delivery: robot i receives exactly the messages of
/// its neighbors N_i, ordered by sender id.
std::map<RobotId, std::vector<NeighborMessage>> exchange(
    const GraphSnapshot& snapshot, const std::map<RobotId, NeighborMessage>& outboxes);

/// Wire format, all little-endian:
///   int32 sender | int64 timestep | 15 x float64 state (rotation row-major,
///   velocity, position) | 45 x float64 covariance upper triangle, row-major.
inline constexpr std::size_t kMessageStateScalars = 15;
inline constexpr std::size_t kMessageCovScalars = 45;
inline constexpr std::size_t kMessageBytes =
    4 + 8 + 8 * (kMessageStateScalars + kMessageCovScalars);

std::vector<std::uint8_t> serialize(const NeighborMessage& msg);

/// Throws std::invalid_argument on a wrong buffer size.
NeighborMessage deserialize(std::span<const std::uint8_t> bytes);

}  // namespace dcl
