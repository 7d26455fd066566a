#include "dcl/lie.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace dcl {

namespace {

// Coefficients of Gamma_m = c0 I + c1 K + c2 K^2 (K = skew(phi), theta = |phi|).
// Expressions that cancel catastrophically for small theta switch to their
// Taylor expansions below kCoefSeries.
constexpr double kCoefSeries = 1e-2;

double sinc(double t) {  // sin(t)/t
  if (t < kCoefSeries) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0));
  }
  return std::sin(t) / t;
}

double one_minus_cos_over_t2(double t) {  // (1 - cos t)/t^2
  const double h = 0.5 * t;
  const double s = sinc(h);
  return 0.5 * s * s;
}

double t_minus_sin_over_t3(double t) {  // (t - sin t)/t^3
  if (t < kCoefSeries) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

double gamma2_k2_coef(double t) {  // (t^2 + 2 cos t - 2)/(2 t^4)
  if (t < kCoefSeries) {
    const double t2 = t * t;
    return 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0 - t2 * t2 * t2 / 3628800.0;
  }
  const double t2 = t * t;
  return (t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2);
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw DegenerateInput("vee: matrix is not antisymmetric");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Mat3 gamma(int m, const Vec3& phi) {
  if (m < 0 || m > 2) {
    throw DegenerateInput("gamma: order must be 0, 1 or 2, got " + std::to_string(m));
  }
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  const Mat3 k2 = k * k;
  if (theta < kSeriesThreshold) {
    Mat3 out = Mat3::Identity() / factorial(m);
    Mat3 kn = Mat3::Identity();
    for (int n = 1; n <= 3; ++n) {
      kn = kn * k;
      out += kn / factorial(n + m);
    }
    return out;
  }
  switch (m) {
    case 0:
      return Mat3::Identity() + sinc(theta) * k + one_minus_cos_over_t2(theta) * k2;
    case 1:
      return Mat3::Identity() + one_minus_cos_over_t2(theta) * k + t_minus_sin_over_t3(theta) * k2;
    default:
      return 0.5 * Mat3::Identity() + t_minus_sin_over_t3(theta) * k + gamma2_k2_coef(theta) * k2;
  }
}

Mat3 so3_exp(const Vec3& phi) { return gamma(0, phi); }

double rotation_angle(const Mat3& rotation) {
  const Vec3 axis_sin(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
                      rotation(1, 0) - rotation(0, 1));
  const double s = 0.5 * axis_sin.norm();
  const double c = 0.5 * (rotation.trace() - 1.0);
  return std::atan2(s, c);
}

Vec3 so3_log(const Mat3& rotation) {
  const double theta = rotation_angle(rotation);
  if (theta >= M_PI - kLogAngleMargin) {
    throw DegenerateInput("so3_log: rotation angle too close to pi");
  }
  const Vec3 w(rotation(2, 1) - rotation(1, 2), rotation(0, 2) - rotation(2, 0),
               rotation(1, 0) - rotation(0, 1));
  if (theta < 3.0) {
    // w = 2 sin(theta) n
    return w / (2.0 * sinc(theta));
  }
  // Near pi sin(theta) is poorly conditioned; recover the axis from the
  // symmetric part, R + R^T = 2 cos(theta) I + 2 (1 - cos(theta)) n n^T.
  const double c = std::cos(theta);
  const Mat3 nnt = (0.5 * (rotation + rotation.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int col = 0;
  nnt.diagonal().maxCoeff(&col);
  Vec3 n = nnt.col(col) / std::sqrt(nnt(col, col));
  if (n.dot(w) < 0.0) n = -n;
  return theta * n.normalized();
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

bool is_rotation(const Mat3& m, double tol) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

Mat5 GroupElement::matrix() const {
  Mat5 m = Mat5::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.block<3, 1>(0, 3) = velocity;
  m.block<3, 1>(0, 4) = position;
  return m;
}

GroupElement GroupElement::from_matrix(const Mat5& m) {
  return {m.topLeftCorner<3, 3>(), m.block<3, 1>(0, 3), m.block<3, 1>(0, 4)};
}

GroupElement GroupElement::normalized() const {
  return {orthonormalize(rotation), velocity, position};
}

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  return {a.rotation * b.rotation, a.rotation * b.velocity + a.velocity,
          a.rotation * b.position + a.position};
}

GroupElement inverse(const GroupElement& x) {
  const Mat3 rt = x.rotation.transpose();
  return {rt, -rt * x.velocity, -rt * x.position};
}

Mat5 se23_hat(const Vec9& xi) {
  Mat5 m = Mat5::Zero();
  m.topLeftCorner<3, 3>() = skew(rot_part(xi));
  m.block<3, 1>(0, 3) = vel_part(xi);
  m.block<3, 1>(0, 4) = pos_part(xi);
  return m;
}

GroupElement se23_exp(const Vec9& xi) {
  const Vec3 phi = rot_part(xi);
  const Mat3 j = gamma(1, phi);
  return {gamma(0, phi), j * vel_part(xi), j * pos_part(xi)};
}

Vec9 se23_log(const GroupElement& x) {
  const Vec3 phi = so3_log(x.rotation);
  const Mat3 j_inv = gamma(1, phi).inverse();
  return stack(phi, j_inv * x.velocity, j_inv * x.position);
}

Mat9 adjoint(const GroupElement& x) {
  Mat9 ad = Mat9::Zero();
  const Mat3& r = x.rotation;
  ad.block<3, 3>(0, 0) = r;
  ad.block<3, 3>(3, 3) = r;
  ad.block<3, 3>(6, 6) = r;
  ad.block<3, 3>(3, 0) = skew(x.velocity) * r;
  ad.block<3, 3>(6, 0) = skew(x.position) * r;
  return ad;
}

}  // namespace dcl
