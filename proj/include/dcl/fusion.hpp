#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dcl/estimate.hpp"

namespace dcl {

struct KalmanCorrection {
  Vec9 correction = Vec9::Zero();
  Mat9 covariance;
  bool ok = false;
};

/// Stacked EKF correction in error coordinates: K = P C^T (C P C^T + Q)^-1,
/// correction = K z_bar, covariance = (I - K C) P. `ok` is false when the
/// innovation covariance is not positive definite.
KalmanCorrection kalman_correction(const Mat9& p, const Eigen::MatrixXd& c,
                                   const Eigen::VectorXd& residual,
                                   const Eigen::VectorXd& noise_var);

/// Information-form contribution of one relative measurement: S = H^T R^-1 H
/// and y = H^T R^-1 z_bar, with the neighbor's uncertainty folded into R.
struct CorrectionPair {
  Mat9 s = Mat9::Zero();
  Vec9 y = Vec9::Zero();
  double r = 0.0;
  RobotId neighbor_id = 0;
};

struct CiWeights {
  double alpha_self = 1.0;
  std::map<RobotId, double> alpha_neighbor;

  /// Throws std::invalid_argument unless the weights cover exactly the
  /// given pairs and sum to one within 1e-12.
  void validate_against(std::span<const CorrectionPair> pairs) const;
};

/// Result of fusing an estimate's information with correction pairs, all
/// in the estimate's own error coordinates.
struct FusedInformation {
  Mat9 covariance;
  Vec9 correction;
  bool ok = false;
};

/// P_hat = [a_self P^-1 + sum a_j S_j]^-1 and eps = P_hat sum a_j y_j.
/// `ok` is false when the fused information is not positive definite.
FusedInformation fuse_information(const Mat9& own_cov, std::span<const CorrectionPair> pairs,
                                  double alpha_self, std::span<const double> alpha_pairs);

/// trace([a_self P^-1 + sum a_j S_j]^-1), +inf when singular.
double fused_trace(const Mat9& own_info, std::span<const CorrectionPair> pairs,
                   std::span<const double> weights);

/// Chooses CI weights minimizing the fused covariance trace over the
/// simplex: pairwise coordinate descent on a 0.02 grid, one refinement pass
/// on a 0.002 grid, then a comparison against the closed-form weights
/// a_k ~ 1/trace(S_k^+) (and 1/trace(P) for self). Ties keep the larger
/// self weight.
CiWeights select_ci_weights(const Mat9& own_cov, std::span<const CorrectionPair> pairs);

}  // namespace dcl
