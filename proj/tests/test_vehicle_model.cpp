#include <gtest/gtest.h>

#include "dcl/vehicle_model.hpp"
#include "test_util.hpp"

using namespace dcl;

namespace {

RobotState at(const Vec3& p, RobotId id = 0) {
  RobotState s;
  s.id = id;
  s.pose.position = p;
  return s;
}

// Central differences of f(exp(d) * X) along the nine tangent directions.
template <class F>
Row9 numeric_row(const GroupElement& x, F&& f, double h = 1e-6) {
  Row9 row;
  for (int k = 0; k < 9; ++k) {
    Vec9 d = Vec9::Zero();
    d(k) = h;
    row(k) = (f(compose(se23_exp(d), x)) - f(compose(se23_exp(-d), x))) / (2 * h);
  }
  return row;
}

double rel_err(const Row9& a, const Row9& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(Dynamics, HoverAndFreeFall) {
  const WorldConstants world;
  RobotState s;
  const auto hover = continuous_dynamics(s, ImuSample{Vec3::Zero(), Vec3(0, 0, 9.81), 0.0}, world);
  EXPECT_LT(hover.velocity_rate.norm(), 1e-15);
  EXPECT_EQ(hover.position_rate, Vec3::Zero());
  EXPECT_EQ(hover.rotation_rate, Mat3::Zero());

  const auto fall = continuous_dynamics(s, ImuSample{}, world);
  EXPECT_EQ(fall.velocity_rate, world.gravity);

  s.pose.velocity = Vec3(1, 0, 0);
  EXPECT_EQ(continuous_dynamics(s, ImuSample{}, world).position_rate, Vec3(1, 0, 0));
}

TEST(Dynamics, SuperpositionInVelocityAndAccel) {
  std::mt19937_64 rng(31);
  const WorldConstants world;
  for (int i = 0; i < 50; ++i) {
    RobotState s{0, test::random_state(rng)};
    const ImuSample a{test::random_vec3(rng), test::random_vec3(rng, 5.0), 0.0};
    ImuSample b = a;
    b.accel = test::random_vec3(rng, 5.0);
    ImuSample ab = a;
    ab.accel = a.accel + b.accel;
    // v_dot(a1 + a2) = v_dot(a1) + v_dot(a2) - g  (affine in accel)
    const Vec3 lhs = continuous_dynamics(s, ab, world).velocity_rate;
    const Vec3 rhs = continuous_dynamics(s, a, world).velocity_rate +
                     continuous_dynamics(s, b, world).velocity_rate - world.gravity;
    EXPECT_LT((lhs - rhs).norm(), 1e-12);

    RobotState s2 = s;
    s2.pose.velocity *= 2.0;
    EXPECT_LT((continuous_dynamics(s2, a, world).position_rate -
               2.0 * continuous_dynamics(s, a, world).position_rate)
                  .norm(),
              1e-14);
    // Rotation rate is R * skew(omega).
    EXPECT_LT((continuous_dynamics(s, a, world).rotation_rate - s.pose.rotation * skew(a.omega))
                  .norm(),
              1e-14);
  }
}

TEST(AbsoluteRange, Predictions) {
  EXPECT_DOUBLE_EQ(abs_range_predict(at(Vec3::Zero()), Vec3(3, 4, 0)), 5.0);
  EXPECT_DOUBLE_EQ(abs_range_predict(at(Vec3(1, 1, 1)), Vec3(1, 1, 0)), 1.0);
  EXPECT_THROW(abs_range_predict(at(Vec3(3 + 1e-9, 4, 0)), Vec3(3, 4, 0)), CoincidentPositions);
}

TEST(AbsoluteRange, JacobianStructure) {
  const Row9 h = abs_range_jacobian(at(Vec3::Zero()), Vec3(3, 4, 0));
  EXPECT_EQ(h.segment<3>(kRotBlock).norm(), 0.0);
  EXPECT_EQ(h.segment<3>(kVelBlock).norm(), 0.0);
  EXPECT_LT((h.segment<3>(kPosBlock).transpose() - Vec3(-0.6, -0.8, 0.0)).norm(), 1e-15);
}

TEST(AbsoluteRange, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 100; ++i) {
    const GroupElement x = test::random_state(rng);
    Vec3 anchor = test::random_vec3(rng, 6.0);
    while ((anchor - x.position).norm() < 0.5) anchor = test::random_vec3(rng, 6.0);
    const Row9 analytic = abs_range_jacobian(RobotState{0, x}, anchor);
    const Row9 numeric =
        numeric_row(x, [&](const GroupElement& y) { return abs_range_predict({0, y}, anchor); });
    EXPECT_LT(rel_err(analytic, numeric), 1e-5);
    EXPECT_EQ(analytic.segment<3>(kVelBlock).norm(), 0.0);
  }
}

TEST(RelativeRange, PredictionsAreSymmetric) {
  EXPECT_DOUBLE_EQ(rel_range_predict(at(Vec3::Zero()), at(Vec3(3, 4, 0), 1)), 5.0);
  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    const RobotState a{0, test::random_state(rng)};
    const RobotState b{1, test::random_state(rng)};
    EXPECT_EQ(rel_range_predict(a, b), rel_range_predict(b, a));
  }
  EXPECT_THROW(rel_range_predict(at(Vec3(1, 2, 3)), at(Vec3(1, 2, 3), 1)), CoincidentPositions);
}

TEST(RelativeRange, JacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(43);
  const RelativeRangeModel model;
  for (int i = 0; i < 100; ++i) {
    const GroupElement xi = test::random_state(rng);
    GroupElement xj = test::random_state(rng);
    while ((xj.position - xi.position).norm() < 0.5) xj = test::random_state(rng);
    const RelativeJacobians h = model.jacobians({0, xi}, {1, xj});
    const Row9 ni =
        numeric_row(xi, [&](const GroupElement& y) { return rel_range_predict({0, y}, {1, xj}); });
    const Row9 nj =
        numeric_row(xj, [&](const GroupElement& y) { return rel_range_predict({0, xi}, {1, y}); });
    EXPECT_LT(rel_err(h.observer, ni), 1e-5);
    EXPECT_LT(rel_err(h.target, nj), 1e-5);
    EXPECT_EQ(h.observer.segment<3>(kPosBlock), -h.target.segment<3>(kPosBlock));
    EXPECT_EQ(h.observer.segment<3>(kVelBlock).norm(), 0.0);
    EXPECT_EQ(h.target.segment<3>(kVelBlock).norm(), 0.0);
    EXPECT_EQ(model.predict({0, xi}, {1, xj}), rel_range_predict({0, xi}, {1, xj}));
  }
}

TEST(NoiseSpec, RejectsNegativeValues) {
  EXPECT_NO_THROW(ImuNoiseSpec{}.validate());
  EXPECT_THROW((ImuNoiseSpec{-1.0, 0.0, 0.0, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((WorldConstants{Vec3(0, 0, -9.81), 0.0}.validate()), std::invalid_argument);
}
