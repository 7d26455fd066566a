#include "dcl/filter.hpp"

namespace dcl {

CooperativeFilter::StepOutput CooperativeFilter::step(
    std::span<const ImuSample> imu_window,
    std::span<const AbsoluteRangeMeasurement> abs_measurements,
    std::span<const RelativeRangeMeasurement> rel_measurements, const InboxProvider& inbox) {
  for (const ImuSample& imu : imu_window) propagate(imu);
  local_update(abs_measurements);
  StepOutput out;
  out.outgoing = broadcast();
  const std::vector<NeighborMessage> received =
      inbox ? inbox(out.outgoing) : std::vector<NeighborMessage>{};
  relative_update(rel_measurements, received);
  out.posterior = estimate();
  return out;
}

}  // namespace dcl
