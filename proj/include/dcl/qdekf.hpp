#pragma once

#include <optional>
#include <span>

#include <Eigen/Geometry>

#include "dcl/filter.hpp"
#include "dcl/fusion.hpp"

namespace dcl {

/// Baseline state: unit quaternion (global-from-body), velocity, position.
/// Errors are decoupled: R = R_hat Exp(dtheta) with dtheta in the body
/// frame, v = v_hat + dv, p = p_hat + dp.
struct QuatState {
  Eigen::Quaterniond attitude = Eigen::Quaterniond::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 position = Vec3::Zero();

  static QuatState from_group(const GroupElement& x);
  GroupElement as_group() const;
};

/// Error-state transition over one interval. Unlike the invariant filter's
/// transition it depends on the attitude estimate and the measured inputs.
Mat9 q_error_transition(const QuatState& state, const ImuSample& imu, const WorldConstants& world);

/// Noise input matrix G mapping (n_gyro, n_accel, 0) into the error state.
Mat9 q_noise_input(const QuatState& state);

QuatState q_integrate(const QuatState& state, const ImuSample& imu, const WorldConstants& world);

struct QuatEstimate {
  QuatState state;
  Mat9 covariance = Mat9::Identity();
  std::int64_t timestep = 0;
};

QuatEstimate q_propagate(const QuatEstimate& posterior, const ImuSample& imu,
                         const ImuNoiseSpec& noise, const WorldConstants& world,
                         Diagnostics* diag = nullptr);

/// Position-only range Jacobian in decoupled coordinates: [0, 0, u^T].
Row9 q_abs_range_jacobian(const QuatState& state, const Vec3& anchor);
RelativeJacobians q_rel_range_jacobians(const QuatState& observer, const QuatState& target);

/// Applies a decoupled correction (dtheta, dv, dp).
QuatState q_retract(const QuatState& state, const Vec9& delta);

/// Decoupled error of `truth` relative to `estimate`.
Vec9 q_error(const GroupElement& truth, const QuatState& estimate);

/// Maps a right-invariant covariance at `estimate` into decoupled
/// coordinates (first order): J P J^T.
Mat9 invariant_to_decoupled(const GroupElement& estimate, const Mat9& p);

QuatEstimate q_local_update(const QuatEstimate& prior,
                            std::span<const AbsoluteRangeMeasurement> measurements,
                            Diagnostics* diag = nullptr);

std::optional<CorrectionPair> q_build_correction_pair(const QuatEstimate& own,
                                                      const NeighborMessage& neighbor,
                                                      const RelativeRangeMeasurement& z,
                                                      Diagnostics* diag = nullptr);

QuatEstimate q_ci_fuse(const QuatEstimate& own, std::span<const CorrectionPair> pairs,
                       const CiWeights& weights, Diagnostics* diag = nullptr);
QuatEstimate q_naive_fuse(const QuatEstimate& own, std::span<const CorrectionPair> pairs,
                          Diagnostics* diag = nullptr);

class QdekfEstimator final : public CooperativeFilter {
 public:
  QdekfEstimator(RobotId id, QuatEstimate initial, FilterParams params);

  RobotId id() const override { return id_; }
  const EstimatePair& estimate() const override { return view_; }
  const QuatEstimate& quat_estimate() const { return estimate_; }

  void propagate(const ImuSample& imu) override;
  void local_update(std::span<const AbsoluteRangeMeasurement> measurements) override;
  void relative_update(std::span<const RelativeRangeMeasurement> measurements,
                       std::span<const NeighborMessage> inbox) override;

 private:
  void refresh(Stage stage);

  RobotId id_;
  QuatEstimate estimate_;
  FilterParams params_;
  EstimatePair view_;
};

}  // namespace dcl
