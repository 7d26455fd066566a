#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcl/config_io.hpp"

namespace dcl {

struct CriterionResult {
  int id = 0;
  std::string name;
  std::string measured;
  std::string bound;
  bool value_ok = false;
  double seconds = 0.0;
  double time_limit = 0.0;

  bool pass() const { return value_ok && seconds < time_limit; }
};

/// "[PASS] 5 consistency ...: measured ... | bound ... | 12.3 s (limit 600 s)"
std::string format_result(const CriterionResult& r);

// Individual criteria. `config` supplies the simulation parameters; each
// check fixes the experiment design it needs on top of it.
CriterionResult check_lie_exactness(std::uint64_t seed);
CriterionResult check_jacobian_fidelity(std::uint64_t seed);
CriterionResult check_transition_independence(std::uint64_t seed);
CriterionResult check_noise_free(const ScenarioConfig& config);
CriterionResult check_ci_vs_naive(const ScenarioConfig& config, int threads);
CriterionResult check_synthetic_ci(std::uint64_t seed);
CriterionResult check_determinism(const ScenarioConfig& config, int threads);

/// Criteria 5 and 6 share one Monte-Carlo run (20 trials on each preset).
struct MonteCarloChecks {
  CriterionResult consistency;
  CriterionResult ordering;
};
MonteCarloChecks check_monte_carlo(const ScenarioConfig& config, int threads);

inline constexpr int kAcceptanceTrialsPerPreset = 20;

/// Runs the selected criteria (all when `selected` is empty), in order.
std::vector<CriterionResult> run_acceptance(const RunConfig& config,
                                            std::span<const int> selected = {});

}  // namespace dcl
