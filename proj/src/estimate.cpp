#include "dcl/estimate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace dcl {

bool sanitize_covariance(Mat9& p) {
  p = 0.5 * (p + p.transpose()).eval();
  Eigen::LLT<Mat9> llt(p);
  if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 1e-9) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Mat9> eig(p);
  if (eig.eigenvalues().minCoeff() > kEigenFloor) return false;
  const Vec9 clamped = eig.eigenvalues().cwiseMax(kEigenFloor);
  p = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  p = 0.5 * (p + p.transpose()).eval();
  return true;
}

bool is_symmetric(const Mat9& p, double tol) {
  return (p - p.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool is_positive_definite(const Mat9& p) {
  Eigen::SelfAdjointEigenSolver<Mat9> eig(0.5 * (p + p.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 0.0;
}

}  // namespace dcl
