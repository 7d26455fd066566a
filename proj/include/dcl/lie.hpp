#pragma once

#include <stdexcept>
#include <string>

#include "dcl/types.hpp"

namespace dcl {

/// Raised for inputs outside an operation's domain (non-antisymmetric vee
/// input, log at a rotation angle too close to pi, unsupported gamma order).
class DegenerateInput : public std::domain_error {
 public:
  explicit DegenerateInput(const std::string& what) : std::domain_error(what) {}
};

inline constexpr double kSeriesThreshold = 1e-6;
inline constexpr double kLogAngleMargin = 1e-6;

Mat3 skew(const Vec3& v);

/// Inverse of skew(). Throws DegenerateInput if |m + m^T| exceeds 1e-9.
Vec3 vee(const Mat3& m);

/// Gamma_m(phi) = sum_n skew(phi)^n / (n + m)!  for m in {0, 1, 2}.
/// Gamma_0 is the SO(3) exponential, Gamma_1 its left Jacobian.
Mat3 gamma(int m, const Vec3& phi);

Mat3 so3_exp(const Vec3& phi);
Vec3 so3_log(const Mat3& rotation);

/// Geodesic rotation angle of R in [0, pi], valid for any rotation.
double rotation_angle(const Mat3& rotation);

/// Projects onto the nearest rotation matrix (Frobenius norm).
Mat3 orthonormalize(const Mat3& m);

bool is_rotation(const Mat3& m, double tol = 1e-9);

/// Element of SE_2(3) stored as (rotation, velocity, position).
/// `rotation` is the global-from-body attitude.
struct GroupElement {
  Mat3 rotation = Mat3::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 position = Vec3::Zero();

  static GroupElement identity() { return {}; }

  /// 5x5 embedding [R v p; 0 1 0; 0 0 1].
  Mat5 matrix() const;
  static GroupElement from_matrix(const Mat5& m);

  GroupElement normalized() const;
};

GroupElement compose(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& x);

inline GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  return compose(a, b);
}

/// hat map R^9 -> se_2(3) as a 5x5 matrix.
Mat5 se23_hat(const Vec9& xi);

GroupElement se23_exp(const Vec9& xi);
Vec9 se23_log(const GroupElement& x);

/// Adjoint of SE_2(3): block lower-triangular with R on the diagonal and
/// skew(v) R, skew(p) R in the first column.
Mat9 adjoint(const GroupElement& x);

inline Vec3 rot_part(const Vec9& xi) { return xi.segment<3>(kRotBlock); }
inline Vec3 vel_part(const Vec9& xi) { return xi.segment<3>(kVelBlock); }
inline Vec3 pos_part(const Vec9& xi) { return xi.segment<3>(kPosBlock); }

inline Vec9 stack(const Vec3& r, const Vec3& v, const Vec3& p) {
  Vec9 xi;
  xi << r, v, p;
  return xi;
}

}  // namespace dcl
