#pragma once

#include <optional>
#include <span>

#include "dcl/filter.hpp"
#include "dcl/fusion.hpp"

namespace dcl {

/// Discrete transition of the right-invariant error over one IMU interval.
/// Depends only on gravity and the interval, never on the estimate.
Mat9 state_transition(const WorldConstants& world);

/// Covariance of W = (n_gyro, n_accel, 0). The per-sample standard
/// deviations are converted to continuous-time densities (sigma^2 * dt) so
/// that the discretized injection Phi O Phi^T dt matches the per-sample
/// noise the simulator adds.
Mat9 imu_noise_covariance(const ImuNoiseSpec& noise, const WorldConstants& world);

struct ProcessNoise {
  Mat9 w_cov;
  Mat9 o_matrix;  // Ad_X w_cov Ad_X^T
};

ProcessNoise process_noise(const GroupElement& estimate, const ImuNoiseSpec& noise,
                           const WorldConstants& world);

/// Exact integration of constant body-frame (omega, accel) over one interval.
GroupElement integrate_imu(const GroupElement& x, const ImuSample& imu,
                           const WorldConstants& world);

/// Prior from posterior. Requires imu.timestamp == (timestep + 1) * dt.
EstimatePair propagate(const EstimatePair& posterior, const ImuSample& imu,
                       const ImuNoiseSpec& noise, const WorldConstants& world,
                       Diagnostics* diag = nullptr);

/// Stacked EKF update with all absolute ranges of one tick, applied on the
/// group as exp(K z_bar) * X_bar. An empty list returns the prior.
EstimatePair local_update(const EstimatePair& prior,
                          std::span<const AbsoluteRangeMeasurement> measurements,
                          Diagnostics* diag = nullptr);

/// Builds (S_ij, y_ij) for one relative measurement against the neighbor's
/// broadcast intermediate estimate. Returns nullopt (and counts a rejected
/// pair) when the residual covariance is not positive or the geometry is
/// degenerate.
std::optional<CorrectionPair> build_correction_pair(
    const EstimatePair& own, const NeighborMessage& neighbor,
    const RelativeRangeMeasurement& z, Diagnostics* diag = nullptr,
    const RelativeModel& model = RelativeRangeModel{});

/// Covariance-intersection fusion of the intermediate estimate with the
/// correction pairs. alpha_self == 1 returns the estimate untouched.
EstimatePair ci_fuse(const EstimatePair& own, std::span<const CorrectionPair> pairs,
                     const CiWeights& weights, Diagnostics* diag = nullptr);

/// Fusion that treats all sources as independent (every weight 1). It
/// double-counts correlated information and is kept for comparison only.
EstimatePair naive_fuse(const EstimatePair& own, std::span<const CorrectionPair> pairs,
                        Diagnostics* diag = nullptr);

class DinekfEstimator final : public CooperativeFilter {
 public:
  DinekfEstimator(RobotId id, EstimatePair initial, FilterParams params);

  RobotId id() const override { return id_; }
  const EstimatePair& estimate() const override { return estimate_; }

  void propagate(const ImuSample& imu) override;
  void local_update(std::span<const AbsoluteRangeMeasurement> measurements) override;
  void relative_update(std::span<const RelativeRangeMeasurement> measurements,
                       std::span<const NeighborMessage> inbox) override;

 private:
  void count_compositions(int n);

  RobotId id_;
  EstimatePair estimate_;
  FilterParams params_;
  int compositions_ = 0;
};

}  // namespace dcl
