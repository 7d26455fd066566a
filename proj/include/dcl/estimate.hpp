#pragma once

#include <cstdint>

#include "dcl/lie.hpp"

namespace dcl {

enum class Stage { prior, intermediate, posterior };

/// State estimate plus 9x9 error covariance. For the invariant filter the
/// covariance lives in right-invariant tangent coordinates; for the
/// quaternion baseline it lives in its decoupled (dtheta, dv, dp) coordinates.
struct EstimatePair {
  GroupElement state;
  Mat9 covariance = Mat9::Identity();
  Stage stage = Stage::posterior;
  std::int64_t timestep = 0;
};

/// Counters for the numerical safeguards applied while filtering.
struct Diagnostics {
  std::int64_t clamped_covariances = 0;
  std::int64_t skipped_updates = 0;
  std::int64_t rejected_pairs = 0;
  std::int64_t missing_messages = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    clamped_covariances += o.clamped_covariances;
    skipped_updates += o.skipped_updates;
    rejected_pairs += o.rejected_pairs;
    missing_messages += o.missing_messages;
    return *this;
  }
  bool clean() const {
    return clamped_covariances == 0 && skipped_updates == 0 && rejected_pairs == 0 &&
           missing_messages == 0;
  }
};

inline constexpr double kEigenFloor = 1e-12;

/// Symmetrizes P and, when it is not numerically positive definite, clamps
/// its eigenvalues at kEigenFloor. Returns true if clamping was needed.
bool sanitize_covariance(Mat9& p);

bool is_symmetric(const Mat9& p, double tol = 1e-10);
bool is_positive_definite(const Mat9& p);

}  // namespace dcl
