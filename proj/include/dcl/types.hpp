#pragma once

#include <Eigen/Core>

namespace dcl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Row9 = Eigen::Matrix<double, 1, 9>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

using RobotId = int;

// Tangent coordinates are stacked as (rotation, velocity, position).
inline constexpr int kRotBlock = 0;
inline constexpr int kVelBlock = 3;
inline constexpr int kPosBlock = 6;

}  // namespace dcl
