#include "dcl/comm_graph.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace dcl {

GraphSnapshot::GraphSnapshot(std::int64_t timestep, std::vector<RobotId> robots,
                             std::set<std::pair<RobotId, RobotId>> edges)
    : timestep_(timestep), robots_(std::move(robots)), edges_(std::move(edges)) {
  for (const auto& [from, to] : edges_) {
    if (from == to) throw std::invalid_argument("graph snapshot: self edge");
  }
}

std::vector<RobotId> GraphSnapshot::neighbors(RobotId i) const {
  std::vector<RobotId> out;
  for (const auto& [from, to] : edges_) {
    if (to == i) out.push_back(from);
  }
  std::sort(out.begin(), out.end());
  return out;
}

GraphSnapshot build_snapshot(std::int64_t timestep, const std::map<RobotId, Vec3>& true_positions,
                             double sensing_range) {
  if (!(sensing_range > 0.0)) throw std::invalid_argument("build_snapshot: range must be positive");
  std::vector<RobotId> robots;
  std::set<std::pair<RobotId, RobotId>> edges;
  for (const auto& [i, pi] : true_positions) {
    robots.push_back(i);
    for (const auto& [j, pj] : true_positions) {
      if (i != j && (pi - pj).norm() <= sensing_range) edges.insert({j, i});
    }
  }
  return {timestep, std::move(robots), std::move(edges)};
}

std::map<RobotId, std::vector<NeighborMessage>> exchange(
    const GraphSnapshot& snapshot, const std::map<RobotId, NeighborMessage>& outboxes) {
  std::map<RobotId, std::vector<NeighborMessage>> inboxes;
  for (const RobotId i : snapshot.robots()) {
    auto& inbox = inboxes[i];
    for (const RobotId j : snapshot.neighbors(i)) {
      if (auto it = outboxes.find(j); it != outboxes.end()) inbox.push_back(it->second);
    }
  }
  return inboxes;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "message serialization assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* raw = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

}  // namespace

std::vector<std::uint8_t> serialize(const NeighborMessage& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(kMessageBytes);
  put<std::int32_t>(out, msg.sender);
  put<std::int64_t>(out, msg.timestep);
  const GroupElement& x = msg.estimate.state;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) put<double>(out, x.rotation(r, c));
  }
  for (int k = 0; k < 3; ++k) put<double>(out, x.velocity(k));
  for (int k = 0; k < 3; ++k) put<double>(out, x.position(k));
  const Mat9& p = msg.estimate.covariance;
  for (int r = 0; r < 9; ++r) {
    for (int c = r; c < 9; ++c) put<double>(out, p(r, c));
  }
  return out;
}

NeighborMessage deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kMessageBytes) {
    throw std::invalid_argument("deserialize: expected " + std::to_string(kMessageBytes) +
                                " bytes, got " + std::to_string(bytes.size()));
  }
  std::size_t offset = 0;
  NeighborMessage msg;
  msg.sender = take<std::int32_t>(bytes, offset);
  msg.timestep = take<std::int64_t>(bytes, offset);
  GroupElement& x = msg.estimate.state;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) x.rotation(r, c) = take<double>(bytes, offset);
  }
  for (int k = 0; k < 3; ++k) x.velocity(k) = take<double>(bytes, offset);
  for (int k = 0; k < 3; ++k) x.position(k) = take<double>(bytes, offset);
  Mat9& p = msg.estimate.covariance;
  for (int r = 0; r < 9; ++r) {
    for (int c = r; c < 9; ++c) p(r, c) = p(c, r) = take<double>(bytes, offset);
  }
  msg.estimate.stage = Stage::intermediate;
  msg.estimate.timestep = msg.timestep;
  return msg;
}

}  // namespace dcl
