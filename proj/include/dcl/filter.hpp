#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dcl/comm_graph.hpp"
#include "dcl/vehicle_model.hpp"

namespace dcl {

enum class FusionMode { ci, naive };

/// Filter-side model parameters. These may deliberately differ from the
/// values used to synthesize the data.
struct FilterParams {
  ImuNoiseSpec noise;
  WorldConstants world;
  FusionMode fusion = FusionMode::ci;
};

/// Called with a robot's outgoing (intermediate) message; returns the
/// messages of its neighbors for the same timestep.
using InboxProvider = std::function<std::vector<NeighborMessage>(const NeighborMessage&)>;

/// One robot's cooperative estimator. Each timestep runs propagation, local
/// absolute update, broadcast of the intermediate estimate, then fusion of
/// relative measurements against the neighbors' broadcasts. Instances are
/// single-writer; separate instances share nothing.
class CooperativeFilter {
 public:
  virtual ~CooperativeFilter() = default;

  virtual RobotId id() const = 0;
  virtual const EstimatePair& estimate() const = 0;

  virtual void propagate(const ImuSample& imu) = 0;
  virtual void local_update(std::span<const AbsoluteRangeMeasurement> measurements) = 0;
  virtual void relative_update(std::span<const RelativeRangeMeasurement> measurements,
                               std::span<const NeighborMessage> inbox) = 0;

  NeighborMessage broadcast() const { return {id(), estimate().timestep, estimate()}; }

  struct StepOutput {
    EstimatePair posterior;
    NeighborMessage outgoing;
  };

  /// Runs one full cycle. `imu_window` holds the samples since the last
  /// posterior; updates use the state at the end of the window.
  StepOutput step(std::span<const ImuSample> imu_window,
                  std::span<const AbsoluteRangeMeasurement> abs_measurements,
                  std::span<const RelativeRangeMeasurement> rel_measurements,
                  const InboxProvider& inbox);

  const Diagnostics& diagnostics() const { return diagnostics_; }

 protected:
  Diagnostics diagnostics_;
};

}  // namespace dcl
