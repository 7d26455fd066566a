#include "dcl/qdekf.hpp"

#include <cmath>
#include <stdexcept>

#include "dcl/dinekf.hpp"

namespace dcl {

namespace {

constexpr double kQuatDrift = 1e-9;

Eigen::Quaterniond quat_exp(const Vec3& phi) {
  const double theta = phi.norm();
  const double half = 0.5 * theta;
  const double k = theta < 1e-8 ? 0.5 * (1.0 - theta * theta / 24.0) : std::sin(half) / theta;
  return {std::cos(half), k * phi.x(), k * phi.y(), k * phi.z()};
}

Eigen::Quaterniond renormalized(const Eigen::Quaterniond& q) {
  if (std::abs(q.norm() - 1.0) > kQuatDrift) return q.normalized();
  return q;
}

void note_clamp(Mat9& p, Diagnostics* diag) {
  if (sanitize_covariance(p) && diag) ++diag->clamped_covariances;
}

Vec3 range_unit(const Vec3& from, const Vec3& to) {
  const Vec3 d = from - to;
  const double n = d.norm();
  if (!(n > kRangeEpsilon)) throw CoincidentPositions("range: coincident positions");
  return d / n;
}

}  // namespace

QuatState QuatState::from_group(const GroupElement& x) {
  QuatState s;
  s.attitude = Eigen::Quaterniond(x.rotation).normalized();
  s.velocity = x.velocity;
  s.position = x.position;
  return s;
}

GroupElement QuatState::as_group() const {
  return {attitude.toRotationMatrix(), velocity, position};
}

Mat9 q_error_transition(const QuatState& state, const ImuSample& imu,
                        const WorldConstants& world) {
  const double dt = world.imu_dt;
  const Mat3 r = state.attitude.toRotationMatrix();
  const Mat3 coupling = -r * skew(imu.accel);
  Mat9 f = Mat9::Identity();
  f.block<3, 3>(kRotBlock, kRotBlock) = gamma(0, imu.omega * dt).transpose();
  f.block<3, 3>(kVelBlock, kRotBlock) = coupling * dt;
  f.block<3, 3>(kPosBlock, kRotBlock) = 0.5 * coupling * dt * dt;
  f.block<3, 3>(kPosBlock, kVelBlock) = Mat3::Identity() * dt;
  return f;
}

Mat9 q_noise_input(const QuatState& state) {
  Mat9 g = Mat9::Zero();
  g.block<3, 3>(kRotBlock, kRotBlock) = -Mat3::Identity();
  g.block<3, 3>(kVelBlock, kVelBlock) = -state.attitude.toRotationMatrix();
  return g;
}

QuatState q_integrate(const QuatState& state, const ImuSample& imu, const WorldConstants& world) {
  const GroupElement next = integrate_imu(state.as_group(), imu, world);
  QuatState out;
  out.attitude = renormalized(state.attitude * quat_exp(imu.omega * world.imu_dt));
  out.velocity = next.velocity;
  out.position = next.position;
  return out;
}

QuatEstimate q_propagate(const QuatEstimate& posterior, const ImuSample& imu,
                         const ImuNoiseSpec& noise, const WorldConstants& world,
                         Diagnostics* diag) {
  const double expected = static_cast<double>(posterior.timestep + 1) * world.imu_dt;
  if (std::abs(imu.timestamp - expected) > 1e-6 * world.imu_dt) {
    throw std::invalid_argument("q_propagate: IMU sample is not the next interval");
  }
  const Mat9 f = q_error_transition(posterior.state, imu, world);
  const Mat9 g = q_noise_input(posterior.state);
  QuatEstimate prior;
  prior.state = q_integrate(posterior.state, imu, world);
  prior.covariance = f * posterior.covariance * f.transpose() +
                     g * imu_noise_covariance(noise, world) * g.transpose() * world.imu_dt;
  note_clamp(prior.covariance, diag);
  prior.timestep = posterior.timestep + 1;
  return prior;
}

Row9 q_abs_range_jacobian(const QuatState& state, const Vec3& anchor) {
  Row9 row = Row9::Zero();
  row.segment<3>(kPosBlock) = range_unit(state.position, anchor).transpose();
  return row;
}

RelativeJacobians q_rel_range_jacobians(const QuatState& observer, const QuatState& target) {
  const Vec3 u = range_unit(observer.position, target.position);
  RelativeJacobians h{Row9::Zero(), Row9::Zero()};
  h.observer.segment<3>(kPosBlock) = u.transpose();
  h.target.segment<3>(kPosBlock) = -u.transpose();
  return h;
}

QuatState q_retract(const QuatState& state, const Vec9& delta) {
  QuatState out;
  out.attitude = renormalized(state.attitude * quat_exp(rot_part(delta)));
  out.velocity = state.velocity + vel_part(delta);
  out.position = state.position + pos_part(delta);
  return out;
}

Vec9 q_error(const GroupElement& truth, const QuatState& estimate) {
  const Mat3 r_hat = estimate.attitude.toRotationMatrix();
  return stack(so3_log(r_hat.transpose() * truth.rotation), truth.velocity - estimate.velocity,
               truth.position - estimate.position);
}

Mat9 invariant_to_decoupled(const GroupElement& estimate, const Mat9& p) {
  Mat9 j = Mat9::Identity();
  j.block<3, 3>(kRotBlock, kRotBlock) = estimate.rotation.transpose();
  j.block<3, 3>(kVelBlock, kRotBlock) = -skew(estimate.velocity);
  j.block<3, 3>(kPosBlock, kRotBlock) = -skew(estimate.position);
  Mat9 out = j * p * j.transpose();
  return 0.5 * (out + out.transpose());
}

QuatEstimate q_local_update(const QuatEstimate& prior,
                            std::span<const AbsoluteRangeMeasurement> measurements,
                            Diagnostics* diag) {
  QuatEstimate out = prior;
  if (measurements.empty()) return out;
  const auto m = static_cast<Eigen::Index>(measurements.size());
  Eigen::MatrixXd c(m, 9);
  Eigen::VectorXd residual(m);
  Eigen::VectorXd noise(m);
  Eigen::Index rows = 0;
  for (const auto& z : measurements) {
    try {
      c.row(rows) = q_abs_range_jacobian(prior.state, z.anchor_position);
    } catch (const CoincidentPositions&) {
      if (diag) ++diag->skipped_updates;
      continue;
    }
    residual(rows) = z.range - (prior.state.position - z.anchor_position).norm();
    noise(rows) = z.noise_var;
    ++rows;
  }
  if (rows == 0) return out;
  c.conservativeResize(rows, 9);
  residual.conservativeResize(rows);
  noise.conservativeResize(rows);
  const KalmanCorrection k = kalman_correction(prior.covariance, c, residual, noise);
  if (!k.ok) {
    if (diag) ++diag->skipped_updates;
    return out;
  }
  out.state = q_retract(prior.state, k.correction);
  out.covariance = k.covariance;
  note_clamp(out.covariance, diag);
  return out;
}

std::optional<CorrectionPair> q_build_correction_pair(const QuatEstimate& own,
                                                      const NeighborMessage& neighbor,
                                                      const RelativeRangeMeasurement& z,
                                                      Diagnostics* diag) {
  if (neighbor.timestep != own.timestep) {
    throw std::invalid_argument("q_build_correction_pair: neighbor message from another timestep");
  }
  if (z.target_id != neighbor.sender) {
    throw std::invalid_argument("q_build_correction_pair: measurement target is not the sender");
  }
  const QuatState other = QuatState::from_group(neighbor.estimate.state);
  RelativeJacobians h;
  try {
    h = q_rel_range_jacobians(own.state, other);
  } catch (const CoincidentPositions&) {
    if (diag) ++diag->rejected_pairs;
    return std::nullopt;
  }
  const double residual = z.range - (own.state.position - other.position).norm();
  const double r =
      z.noise_var + (h.target * neighbor.estimate.covariance * h.target.transpose())(0, 0);
  if (!(r > 0.0) || !std::isfinite(r)) {
    if (diag) ++diag->rejected_pairs;
    return std::nullopt;
  }
  CorrectionPair pair;
  pair.neighbor_id = neighbor.sender;
  pair.r = r;
  pair.s = h.observer.transpose() * h.observer / r;
  pair.y = h.observer.transpose() * (residual / r);
  return pair;
}

namespace {

QuatEstimate q_apply_fusion(const QuatEstimate& own, std::span<const CorrectionPair> pairs,
                            double alpha_self, std::span<const double> alpha_pairs,
                            Diagnostics* diag) {
  if (pairs.empty() && alpha_self == 1.0) return own;
  const FusedInformation fused = fuse_information(own.covariance, pairs, alpha_self, alpha_pairs);
  if (!fused.ok) {
    if (diag) ++diag->skipped_updates;
    return own;
  }
  QuatEstimate out = own;
  out.state = q_retract(own.state, fused.correction);
  out.covariance = fused.covariance;
  note_clamp(out.covariance, diag);
  return out;
}

}  // namespace

QuatEstimate q_ci_fuse(const QuatEstimate& own, std::span<const CorrectionPair> pairs,
                       const CiWeights& weights, Diagnostics* diag) {
  weights.validate_against(pairs);
  if (weights.alpha_self == 1.0) return own;
  std::vector<double> alphas;
  alphas.reserve(pairs.size());
  for (const auto& pair : pairs) alphas.push_back(weights.alpha_neighbor.at(pair.neighbor_id));
  return q_apply_fusion(own, pairs, weights.alpha_self, alphas, diag);
}

QuatEstimate q_naive_fuse(const QuatEstimate& own, std::span<const CorrectionPair> pairs,
                          Diagnostics* diag) {
  const std::vector<double> ones(pairs.size(), 1.0);
  return q_apply_fusion(own, pairs, 1.0, ones, diag);
}

QdekfEstimator::QdekfEstimator(RobotId id, QuatEstimate initial, FilterParams params)
    : id_(id), estimate_(std::move(initial)), params_(params) {
  params_.noise.validate();
  params_.world.validate();
  refresh(Stage::posterior);
}

void QdekfEstimator::refresh(Stage stage) {
  view_.state = estimate_.state.as_group();
  view_.covariance = estimate_.covariance;
  view_.stage = stage;
  view_.timestep = estimate_.timestep;
}

void QdekfEstimator::propagate(const ImuSample& imu) {
  estimate_ = q_propagate(estimate_, imu, params_.noise, params_.world, &diagnostics_);
  refresh(Stage::prior);
}

void QdekfEstimator::local_update(std::span<const AbsoluteRangeMeasurement> measurements) {
  estimate_ = q_local_update(estimate_, measurements, &diagnostics_);
  refresh(Stage::intermediate);
}

void QdekfEstimator::relative_update(std::span<const RelativeRangeMeasurement> measurements,
                                     std::span<const NeighborMessage> inbox) {
  std::vector<CorrectionPair> pairs;
  for (const auto& z : measurements) {
    if (z.observer_id != id_) continue;
    const NeighborMessage* msg = nullptr;
    for (const auto& m : inbox) {
      if (m.sender == z.target_id && m.timestep == estimate_.timestep) msg = &m;
    }
    if (!msg) {
      ++diagnostics_.missing_messages;
      continue;
    }
    if (auto pair = q_build_correction_pair(estimate_, *msg, z, &diagnostics_)) {
      pairs.push_back(*pair);
    }
  }
  if (params_.fusion == FusionMode::naive) {
    estimate_ = q_naive_fuse(estimate_, pairs, &diagnostics_);
  } else {
    estimate_ = q_ci_fuse(estimate_, pairs, select_ci_weights(estimate_.covariance, pairs),
                          &diagnostics_);
  }
  refresh(Stage::posterior);
}

}  // namespace dcl
