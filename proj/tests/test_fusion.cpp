#include <gtest/gtest.h>

#include <limits>

#include <Eigen/LU>

#include "dcl/fusion.hpp"
#include "test_util.hpp"

using namespace dcl;

namespace {

CorrectionPair pair_with(const Mat9& s, RobotId id) {
  CorrectionPair p;
  p.s = s;
  p.neighbor_id = id;
  return p;
}

// Brute-force trace of the CI covariance for explicit weights.
double ci_trace(const Mat9& own_cov, const std::vector<CorrectionPair>& pairs, double a_self,
                const std::vector<double>& a) {
  Mat9 info = a_self * own_cov.inverse();
  for (std::size_t k = 0; k < pairs.size(); ++k) info += a[k] * pairs[k].s;
  return info.inverse().trace();
}

}  // namespace

TEST(KalmanCorrection, ScalarOracle) {
  std::mt19937_64 rng(101);
  const Mat9 p = test::random_spd(rng);
  Eigen::MatrixXd c(1, 9);
  c.row(0) = test::random_vec9(rng).transpose();
  Eigen::VectorXd r(1), q(1);
  r << 0.3;
  q << 0.0025;
  const KalmanCorrection k = kalman_correction(p, c, r, q);
  ASSERT_TRUE(k.ok);
  const Vec9 pc = p * c.row(0).transpose();
  const double s = c.row(0).dot(pc) + 0.0025;
  EXPECT_LT((k.correction - pc * 0.3 / s).norm(), 1e-12);
  EXPECT_LT((k.covariance - (p - pc * pc.transpose() / s)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KalmanCorrection, StackedRowsEqualSequentialScalarUpdates) {
  std::mt19937_64 rng(103);
  const Mat9 p = test::random_spd(rng);
  Eigen::MatrixXd c(3, 9);
  for (int i = 0; i < 3; ++i) c.row(i) = test::random_vec9(rng).transpose();
  Eigen::VectorXd r(3), q(3);
  r << 0.1, -0.2, 0.05;
  q << 0.0025, 0.01, 0.0025;
  const KalmanCorrection all = kalman_correction(p, c, r, q);

  // Sequential processing of independent scalar rows (linear model).
  Mat9 ps = p;
  Vec9 x = Vec9::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec9 pc = ps * c.row(i).transpose();
    const double s = c.row(i).dot(pc) + q(i);
    const double innov = r(i) - c.row(i).dot(x);
    x += pc * innov / s;
    ps -= pc * pc.transpose() / s;
  }
  EXPECT_LT((all.correction - x).norm(), 1e-10);
  EXPECT_LT((all.covariance - ps).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SelectWeights, NoPairsOrUselessPair) {
  std::mt19937_64 rng(107);
  const Mat9 p = test::random_spd(rng);
  EXPECT_EQ(select_ci_weights(p, {}).alpha_self, 1.0);
  const CorrectionPair zero = pair_with(Mat9::Zero(), 4);
  const CiWeights w = select_ci_weights(p, std::span(&zero, 1));
  EXPECT_EQ(w.alpha_self, 1.0);
  EXPECT_EQ(w.alpha_neighbor.at(4), 0.0);
  EXPECT_NO_THROW(w.validate_against(std::span(&zero, 1)));
}

TEST(SelectWeights, MatchesExhaustiveGridSearch) {
  Mat9 s = Mat9::Zero();
  s(0, 0) = 100.0;
  const std::vector<CorrectionPair> pairs{pair_with(s, 1)};
  double best_alpha = 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 1000; ++i) {
    const double a = i / 1000.0;
    const double t = ci_trace(Mat9::Identity(), pairs, a, {1.0 - a});
    if (t < best) {
      best = t;
      best_alpha = a;
    }
  }
  const CiWeights w = select_ci_weights(Mat9::Identity(), pairs);
  EXPECT_NEAR(w.alpha_self, best_alpha, 1e-3 + 1e-12);
  EXPECT_NEAR(w.alpha_self + w.alpha_neighbor.at(1), 1.0, 1e-12);
  EXPECT_LE(ci_trace(Mat9::Identity(), pairs, w.alpha_self, {w.alpha_neighbor.at(1)}),
            best + 1e-4);
}

TEST(SelectWeights, NeverWorseThanTrivialWeightsWithSeveralNeighbors) {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat9 p = test::random_spd(rng);
    std::vector<CorrectionPair> pairs;
    for (int k = 0; k < 3; ++k) {
      const Row9 h = test::random_vec9(rng).transpose();
      pairs.push_back(pair_with(h.transpose() * h / 0.01, k + 1));
    }
    const CiWeights w = select_ci_weights(p, pairs);
    ASSERT_NO_THROW(w.validate_against(pairs));
    std::vector<double> a;
    for (const auto& pr : pairs) a.push_back(w.alpha_neighbor.at(pr.neighbor_id));
    const double chosen = ci_trace(p, pairs, w.alpha_self, a);
    EXPECT_LE(chosen, p.trace() + 1e-12);
    // Coarse random search never finds anything meaningfully better.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int probe = 0; probe < 200; ++probe) {
      double raw[4];
      double sum = 0.0;
      for (double& v : raw) sum += (v = u(rng));
      std::vector<double> ap{raw[1] / sum, raw[2] / sum, raw[3] / sum};
      EXPECT_GE(ci_trace(p, pairs, raw[0] / sum, ap), chosen * (1.0 - 1e-2));
    }
  }
}

TEST(FuseInformation, MatchesClosedForm) {
  std::mt19937_64 rng(113);
  const Mat9 p = test::random_spd(rng);
  CorrectionPair a = pair_with(test::random_spd(rng), 1);
  a.y = test::random_vec9(rng);
  CorrectionPair b = pair_with(test::random_spd(rng), 2);
  b.y = test::random_vec9(rng);
  const std::vector<CorrectionPair> pairs{a, b};
  const std::vector<double> alphas{0.3, 0.2};
  const FusedInformation f = fuse_information(p, pairs, 0.5, alphas);
  ASSERT_TRUE(f.ok);
  const Mat9 info = 0.5 * p.inverse() + 0.3 * a.s + 0.2 * b.s;
  const Mat9 cov = info.inverse();
  EXPECT_LT((f.covariance - cov).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((f.correction - cov * (0.3 * a.y + 0.2 * b.y)).norm(), 1e-10);
  EXPECT_NEAR(fused_trace(p.inverse(), pairs, std::vector<double>{0.5, 0.3, 0.2}), cov.trace(),
              1e-10);
}

TEST(FuseInformation, SingularInformationIsReported) {
  const std::vector<double> none;
  EXPECT_EQ(fused_trace(Mat9::Zero(), {}, std::vector<double>{1.0}),
            std::numeric_limits<double>::infinity());
  const FusedInformation f = fuse_information(Mat9::Identity(), {}, 1.0, none);
  EXPECT_TRUE(f.ok);
  EXPECT_LT((f.covariance - Mat9::Identity()).norm(), 1e-14);
}

TEST(CiWeights, Validation) {
  const std::vector<CorrectionPair> pairs{pair_with(Mat9::Identity(), 1),
                                          pair_with(Mat9::Identity(), 2)};
  CiWeights w;
  w.alpha_self = 0.5;
  w.alpha_neighbor = {{1, 0.25}, {2, 0.25}};
  EXPECT_NO_THROW(w.validate_against(pairs));
  w.alpha_neighbor[2] = 0.3;
  EXPECT_THROW(w.validate_against(pairs), std::invalid_argument);
  w.alpha_self = 0.0;
  w.alpha_neighbor = {{1, 0.5}, {2, 0.5}};
  EXPECT_THROW(w.validate_against(pairs), std::invalid_argument);
  const std::vector<CorrectionPair> dup{pair_with(Mat9::Identity(), 1),
                                        pair_with(Mat9::Identity(), 1)};
  w.alpha_self = 0.5;
  w.alpha_neighbor = {{1, 0.5}};
  EXPECT_THROW(w.validate_against(dup), std::invalid_argument);
}
