#pragma once

#include <stdexcept>
#include <string>

#include "dcl/lie.hpp"

namespace dcl {

/// Raised when two range endpoints coincide (the range gradient is undefined).
class CoincidentPositions : public std::domain_error {
 public:
  explicit CoincidentPositions(const std::string& what) : std::domain_error(what) {}
};

inline constexpr double kRangeEpsilon = 1e-6;

struct RobotState {
  RobotId id = 0;
  GroupElement pose;
};

/// One IMU sample. It drives the interval that ends at `timestamp`.
struct ImuSample {
  Vec3 omega = Vec3::Zero();  // rad/s, body frame
  Vec3 accel = Vec3::Zero();  // m/s^2 specific force, body frame
  double timestamp = 0.0;
};

/// Per-sample white noise standard deviations plus constant biases. The
/// biases only corrupt simulated measurements; no filter estimates them.
struct ImuNoiseSpec {
  double gyro_noise_std = 2.0e-2;
  double accel_noise_std = 3.0e-3;
  double gyro_bias = 3.0e-4;
  double accel_bias = 3.0e-4;

  void validate() const;
};

struct WorldConstants {
  Vec3 gravity{0.0, 0.0, -9.81};
  double imu_dt = 0.01;

  void validate() const;
};

struct AbsoluteRangeMeasurement {
  RobotId robot_id = 0;
  int anchor_id = 0;
  Vec3 anchor_position = Vec3::Zero();
  double range = 0.0;
  double noise_var = 0.0025;
};

struct RelativeRangeMeasurement {
  RobotId observer_id = 0;
  RobotId target_id = 0;
  double range = 0.0;
  double noise_var = 0.0025;
};

struct StateDerivative {
  Mat3 rotation_rate;
  Vec3 velocity_rate;
  Vec3 position_rate;
};

/// Noise-free strapdown kinematics: R' = R [w]x, v' = R a + g, p' = v.
StateDerivative continuous_dynamics(const RobotState& state, const ImuSample& imu,
                                    const WorldConstants& world);

double abs_range_predict(const RobotState& state, const Vec3& anchor);

/// Range Jacobian w.r.t. the right-invariant error xi, where the true state
/// is exp(xi) * estimate. First order, p = p_hat - [p_hat]x xi_R + xi_p.
Row9 abs_range_jacobian(const RobotState& state, const Vec3& anchor);

double rel_range_predict(const RobotState& xi, const RobotState& xj);

struct RelativeJacobians {
  Row9 observer;  // H_i
  Row9 target;    // H_j
};

RelativeJacobians rel_range_jacobians(const RobotState& xi, const RobotState& xj);

/// Scalar measurement model seen by the filters. Anything that can predict
/// and linearize w.r.t. both endpoints' right-invariant errors can be used
/// for relative updates.
struct RelativeModel {
  virtual ~RelativeModel() = default;
  virtual double predict(const RobotState& observer, const RobotState& target) const = 0;
  virtual RelativeJacobians jacobians(const RobotState& observer,
                                      const RobotState& target) const = 0;
};

struct RelativeRangeModel final : RelativeModel {
  double predict(const RobotState& observer, const RobotState& target) const override {
    return rel_range_predict(observer, target);
  }
  RelativeJacobians jacobians(const RobotState& observer,
                              const RobotState& target) const override {
    return rel_range_jacobians(observer, target);
  }
};

}  // namespace dcl
