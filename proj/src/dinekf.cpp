#include "dcl/dinekf.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace dcl {

namespace {

constexpr int kNormalizeEvery = 1000;

void note_clamp(Mat9& p, Diagnostics* diag) {
  if (sanitize_covariance(p) && diag) ++diag->clamped_covariances;
}

}  // namespace

Mat9 state_transition(const WorldConstants& world) {
  Mat9 phi = Mat9::Identity();
  phi.block<3, 3>(kVelBlock, kRotBlock) = skew(world.gravity) * world.imu_dt;
  phi.block<3, 3>(kPosBlock, kVelBlock) = Mat3::Identity() * world.imu_dt;
  return phi;
}

Mat9 imu_noise_covariance(const ImuNoiseSpec& noise, const WorldConstants& world) {
  Mat9 w = Mat9::Zero();
  const double dt = world.imu_dt;
  w.block<3, 3>(kRotBlock, kRotBlock) =
      Mat3::Identity() * noise.gyro_noise_std * noise.gyro_noise_std * dt;
  w.block<3, 3>(kVelBlock, kVelBlock) =
      Mat3::Identity() * noise.accel_noise_std * noise.accel_noise_std * dt;
  return w;
}

ProcessNoise process_noise(const GroupElement& estimate, const ImuNoiseSpec& noise,
                           const WorldConstants& world) {
  ProcessNoise out;
  out.w_cov = imu_noise_covariance(noise, world);
  const Mat9 ad = adjoint(estimate);
  out.o_matrix = ad * out.w_cov * ad.transpose();
  return out;
}

GroupElement integrate_imu(const GroupElement& x, const ImuSample& imu,
                           const WorldConstants& world) {
  const double dt = world.imu_dt;
  const Vec3 phi = imu.omega * dt;
  const Vec3& g = world.gravity;
  GroupElement out;
  out.rotation = x.rotation * gamma(0, phi);
  out.velocity = x.velocity + g * dt + x.rotation * gamma(1, phi) * imu.accel * dt;
  out.position = x.position + x.velocity * dt + 0.5 * g * dt * dt +
                 x.rotation * gamma(2, phi) * imu.accel * (dt * dt);
  return out;
}

EstimatePair propagate(const EstimatePair& posterior, const ImuSample& imu,
                       const ImuNoiseSpec& noise, const WorldConstants& world,
                       Diagnostics* diag) {
  const double expected = static_cast<double>(posterior.timestep + 1) * world.imu_dt;
  if (std::abs(imu.timestamp - expected) > 1e-6 * world.imu_dt) {
    throw std::invalid_argument("propagate: IMU sample is not the next interval");
  }
  const Mat9 phi = state_transition(world);
  const ProcessNoise q = process_noise(posterior.state, noise, world);

  EstimatePair prior;
  prior.state = integrate_imu(posterior.state, imu, world);
  prior.covariance = phi * posterior.covariance * phi.transpose() +
                     phi * q.o_matrix * phi.transpose() * world.imu_dt;
  note_clamp(prior.covariance, diag);
  prior.stage = Stage::prior;
  prior.timestep = posterior.timestep + 1;
  return prior;
}

EstimatePair local_update(const EstimatePair& prior,
                          std::span<const AbsoluteRangeMeasurement> measurements,
                          Diagnostics* diag) {
  EstimatePair out = prior;
  out.stage = Stage::intermediate;
  if (measurements.empty()) return out;

  const RobotState state{0, prior.state};
  const auto m = static_cast<Eigen::Index>(measurements.size());
  Eigen::MatrixXd c(m, 9);
  Eigen::VectorXd residual(m);
  Eigen::VectorXd noise(m);
  Eigen::Index rows = 0;
  for (const auto& z : measurements) {
    try {
      c.row(rows) = abs_range_jacobian(state, z.anchor_position);
      residual(rows) = z.range - abs_range_predict(state, z.anchor_position);
    } catch (const CoincidentPositions&) {
      if (diag) ++diag->skipped_updates;
      continue;
    }
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
  out.state = compose(se23_exp(k.correction), prior.state);
  out.covariance = k.covariance;
  note_clamp(out.covariance, diag);
  return out;
}

std::optional<CorrectionPair> build_correction_pair(const EstimatePair& own,
                                                    const NeighborMessage& neighbor,
                                                    const RelativeRangeMeasurement& z,
                                                    Diagnostics* diag,
                                                    const RelativeModel& model) {
  if (neighbor.timestep != own.timestep) {
    throw std::invalid_argument("build_correction_pair: neighbor message from another timestep");
  }
  if (z.target_id != neighbor.sender) {
    throw std::invalid_argument("build_correction_pair: measurement target is not the sender");
  }
  const RobotState self{z.observer_id, own.state};
  const RobotState other{neighbor.sender, neighbor.estimate.state};
  RelativeJacobians h;
  double residual = 0.0;
  try {
    h = model.jacobians(self, other);
    residual = z.range - model.predict(self, other);
  } catch (const CoincidentPositions&) {
    if (diag) ++diag->rejected_pairs;
    return std::nullopt;
  }
  const double r = z.noise_var + (h.target * neighbor.estimate.covariance * h.target.transpose())(0, 0);
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

EstimatePair apply_fusion(const EstimatePair& own, std::span<const CorrectionPair> pairs,
                          double alpha_self, std::span<const double> alpha_pairs,
                          Diagnostics* diag) {
  EstimatePair out = own;
  out.stage = Stage::posterior;
  if (pairs.empty() && alpha_self == 1.0) return out;
  FusedInformation fused = fuse_information(own.covariance, pairs, alpha_self, alpha_pairs);
  if (!fused.ok) {
    if (diag) ++diag->skipped_updates;
    return out;
  }
  out.state = compose(se23_exp(fused.correction), own.state);
  out.covariance = fused.covariance;
  note_clamp(out.covariance, diag);
  return out;
}

}  // namespace

EstimatePair ci_fuse(const EstimatePair& own, std::span<const CorrectionPair> pairs,
                     const CiWeights& weights, Diagnostics* diag) {
  weights.validate_against(pairs);
  if (weights.alpha_self == 1.0) {
    EstimatePair out = own;
    out.stage = Stage::posterior;
    return out;
  }
  std::vector<double> alphas;
  alphas.reserve(pairs.size());
  for (const auto& pair : pairs) alphas.push_back(weights.alpha_neighbor.at(pair.neighbor_id));
  return apply_fusion(own, pairs, weights.alpha_self, alphas, diag);
}

EstimatePair naive_fuse(const EstimatePair& own, std::span<const CorrectionPair> pairs,
                        Diagnostics* diag) {
  const std::vector<double> ones(pairs.size(), 1.0);
  return apply_fusion(own, pairs, 1.0, ones, diag);
}

DinekfEstimator::DinekfEstimator(RobotId id, EstimatePair initial, FilterParams params)
    : id_(id), estimate_(std::move(initial)), params_(params) {
  params_.noise.validate();
  params_.world.validate();
}

void DinekfEstimator::count_compositions(int n) {
  compositions_ += n;
  if (compositions_ >= kNormalizeEvery) {
    estimate_.state = estimate_.state.normalized();
    compositions_ = 0;
  }
}

void DinekfEstimator::propagate(const ImuSample& imu) {
  estimate_ = dcl::propagate(estimate_, imu, params_.noise, params_.world, &diagnostics_);
  count_compositions(1);
}

void DinekfEstimator::local_update(std::span<const AbsoluteRangeMeasurement> measurements) {
  estimate_ = dcl::local_update(estimate_, measurements, &diagnostics_);
  if (!measurements.empty()) count_compositions(1);
}

void DinekfEstimator::relative_update(std::span<const RelativeRangeMeasurement> measurements,
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
    if (auto pair = build_correction_pair(estimate_, *msg, z, &diagnostics_)) {
      pairs.push_back(*pair);
    }
  }
  if (params_.fusion == FusionMode::naive) {
    estimate_ = naive_fuse(estimate_, pairs, &diagnostics_);
  } else {
    estimate_ = ci_fuse(estimate_, pairs, select_ci_weights(estimate_.covariance, pairs),
                        &diagnostics_);
  }
  if (!pairs.empty()) count_compositions(1);
}

}  // namespace dcl
