#include "dcl/fusion.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace dcl {

void CiWeights::validate_against(std::span<const CorrectionPair> pairs) const {
  std::set<RobotId> ids;
  for (const auto& pair : pairs) ids.insert(pair.neighbor_id);
  if (ids.size() != pairs.size()) {
    throw std::invalid_argument("ci weights: duplicate neighbor in correction pairs");
  }
  if (ids.size() != alpha_neighbor.size()) {
    throw std::invalid_argument("ci weights: weight set does not match pair set");
  }
  double sum = alpha_self;
  if (!(alpha_self > 0.0 && alpha_self <= 1.0)) {
    throw std::invalid_argument("ci weights: alpha_self must lie in (0, 1]");
  }
  for (const auto& [id, alpha] : alpha_neighbor) {
    if (!ids.contains(id)) throw std::invalid_argument("ci weights: weight for unknown neighbor");
    if (!(alpha >= 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("ci weights: neighbor weight must lie in [0, 1)");
    }
    sum += alpha;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("ci weights: do not sum to one");
}

KalmanCorrection kalman_correction(const Mat9& p, const Eigen::MatrixXd& c,
                                   const Eigen::VectorXd& residual,
                                   const Eigen::VectorXd& noise_var) {
  KalmanCorrection out;
  out.covariance = p;
  Eigen::MatrixXd innovation = c * p * c.transpose();
  innovation.diagonal() += noise_var;
  Eigen::LLT<Eigen::MatrixXd> llt(innovation);
  if (llt.info() != Eigen::Success) return out;
  const Eigen::Matrix<double, 9, Eigen::Dynamic> gain = llt.solve(c * p).transpose();
  out.correction = gain * residual;
  out.covariance = (Mat9::Identity() - gain * c) * p;
  out.ok = true;
  return out;
}

FusedInformation fuse_information(const Mat9& own_cov, std::span<const CorrectionPair> pairs,
                                  double alpha_self, std::span<const double> alpha_pairs) {
  FusedInformation out;
  out.covariance = own_cov;
  out.correction.setZero();
  Eigen::LLT<Mat9> own_llt(own_cov);
  if (own_llt.info() != Eigen::Success) return out;
  Mat9 info = alpha_self * own_llt.solve(Mat9::Identity());
  Vec9 info_vec = Vec9::Zero();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    info += alpha_pairs[k] * pairs[k].s;
    info_vec += alpha_pairs[k] * pairs[k].y;
  }
  info = 0.5 * (info + info.transpose()).eval();
  Eigen::LLT<Mat9> llt(info);
  if (llt.info() != Eigen::Success) return out;
  out.covariance = llt.solve(Mat9::Identity());
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.correction = out.covariance * info_vec;
  out.ok = true;
  return out;
}

double fused_trace(const Mat9& own_info, std::span<const CorrectionPair> pairs,
                   std::span<const double> weights) {
  Mat9 info = weights[0] * own_info;
  for (std::size_t k = 0; k < pairs.size(); ++k) info += weights[k + 1] * pairs[k].s;
  Eigen::LLT<Mat9> llt(info);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Mat9 l_inv = llt.matrixL().solve(Mat9::Identity());
  const double tr = l_inv.squaredNorm();
  return std::isfinite(tr) ? tr : std::numeric_limits<double>::infinity();
}

namespace {

constexpr double kCoarseStep = 0.02;
constexpr double kFineStep = 0.002;
constexpr int kMaxSweeps = 200;
// alpha_self must stay strictly positive.
constexpr double kMinSelfWeight = kFineStep;

// Moves mass between two coordinates along the grid while the objective
// keeps decreasing; the objective is convex in the weights, so each line
// is unimodal.
bool descend(std::vector<double>& w, const Mat9& own_info, std::span<const CorrectionPair> pairs,
             double step, int max_steps, double& best) {
  bool any = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool improved = false;
    for (std::size_t a = 0; a < w.size(); ++a) {
      for (std::size_t b = a + 1; b < w.size(); ++b) {
        double line_best = best;
        double best_t = 0.0;
        for (const double dir : {1.0, -1.0}) {
          double prev = best;
          for (int k = 1; k <= max_steps; ++k) {
            const double t = dir * k * step;
            const double wa = w[a] + t;
            const double wb = w[b] - t;
            if (wa < -1e-12 || wb < -1e-12 || wa > 1.0 + 1e-12 || wb > 1.0 + 1e-12) break;
            if (a == 0 && wa < kMinSelfWeight - 1e-12) break;
            std::vector<double> trial = w;
            trial[a] = std::max(0.0, wa);
            trial[b] = std::max(0.0, wb);
            const double f = fused_trace(own_info, pairs, trial);
            if (f < line_best * (1.0 - 1e-14)) {
              line_best = f;
              best_t = t;
            }
            if (f > prev) break;
            prev = f;
          }
        }
        if (best_t != 0.0) {
          w[a] = std::max(0.0, w[a] + best_t);
          w[b] = std::max(0.0, w[b] - best_t);
          best = line_best;
          improved = true;
          any = true;
        }
      }
    }
    if (!improved) break;
  }
  return any;
}

}  // namespace

CiWeights select_ci_weights(const Mat9& own_cov, std::span<const CorrectionPair> pairs) {
  CiWeights out;
  if (pairs.empty()) return out;

  Eigen::LLT<Mat9> own_llt(own_cov);
  const Mat9 own_info = own_llt.solve(Mat9::Identity());

  std::vector<double> w(pairs.size() + 1, 0.0);
  w[0] = 1.0;
  double best = fused_trace(own_info, pairs, w);
  descend(w, own_info, pairs, kCoarseStep, static_cast<int>(1.0 / kCoarseStep), best);
  descend(w, own_info, pairs, kFineStep, static_cast<int>(kCoarseStep / kFineStep), best);

  // Closed-form candidate: weights inversely proportional to the trace of
  // each source's covariance (pseudo-inverse of its information).
  std::vector<double> closed(w.size(), 0.0);
  closed[0] = 1.0 / own_cov.trace();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Mat9 pinv = pairs[k].s.completeOrthogonalDecomposition().pseudoInverse();
    const double tr = pinv.trace();
    closed[k + 1] = tr > 0.0 ? 1.0 / tr : 0.0;
  }
  double total = 0.0;
  for (const double c : closed) total += c;
  for (double& c : closed) c /= total;
  if (const double f = fused_trace(own_info, pairs, closed); f < best * (1.0 - 1e-14)) {
    w = closed;
    best = f;
  }

  double neighbor_sum = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.alpha_neighbor[pairs[k].neighbor_id] = w[k + 1];
    neighbor_sum += w[k + 1];
  }
  out.alpha_self = 1.0 - neighbor_sum;
  return out;
}

}  // namespace dcl
