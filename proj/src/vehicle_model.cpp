#include "dcl/vehicle_model.hpp"

#include <cmath>

namespace dcl {

void ImuNoiseSpec::validate() const {
  if (!(gyro_noise_std >= 0.0 && accel_noise_std >= 0.0 && gyro_bias >= 0.0 &&
        accel_bias >= 0.0)) {
    throw std::invalid_argument("ImuNoiseSpec: all values must be non-negative");
  }
}

void WorldConstants::validate() const {
  if (!(imu_dt > 0.0)) throw std::invalid_argument("WorldConstants: imu_dt must be positive");
}

StateDerivative continuous_dynamics(const RobotState& state, const ImuSample& imu,
                                    const WorldConstants& world) {
  const GroupElement& x = state.pose;
  return {x.rotation * skew(imu.omega), x.rotation * imu.accel + world.gravity, x.velocity};
}

namespace {

Vec3 unit_between(const Vec3& from, const Vec3& to, const char* what) {
  const Vec3 d = from - to;
  const double n = d.norm();
  if (!(n > kRangeEpsilon)) throw CoincidentPositions(what);
  return d / n;
}

}  // namespace

double abs_range_predict(const RobotState& state, const Vec3& anchor) {
  const double d = (state.pose.position - anchor).norm();
  if (!(d > kRangeEpsilon)) throw CoincidentPositions("abs_range: robot at anchor");
  return d;
}

Row9 abs_range_jacobian(const RobotState& state, const Vec3& anchor) {
  const Vec3& p = state.pose.position;
  const Vec3 u = unit_between(p, anchor, "abs_range: robot at anchor");
  Row9 row = Row9::Zero();
  row.segment<3>(kRotBlock) = -u.transpose() * skew(p);
  row.segment<3>(kPosBlock) = u.transpose();
  return row;
}

double rel_range_predict(const RobotState& xi, const RobotState& xj) {
  const double d = (xi.pose.position - xj.pose.position).norm();
  if (!(d > kRangeEpsilon)) throw CoincidentPositions("rel_range: robots coincide");
  return d;
}

RelativeJacobians rel_range_jacobians(const RobotState& xi, const RobotState& xj) {
  const Vec3& pi = xi.pose.position;
  const Vec3& pj = xj.pose.position;
  const Vec3 u = unit_between(pi, pj, "rel_range: robots coincide");
  RelativeJacobians h{Row9::Zero(), Row9::Zero()};
  h.observer.segment<3>(kRotBlock) = -u.transpose() * skew(pi);
  h.observer.segment<3>(kPosBlock) = u.transpose();
  h.target.segment<3>(kRotBlock) = u.transpose() * skew(pj);
  h.target.segment<3>(kPosBlock) = -u.transpose();
  return h;
}

}  // namespace dcl
