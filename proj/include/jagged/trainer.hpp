#pragma once

// Deterministic full-batch gradient descent with telemetry.

#include <cstddef>
#include <cstdint>
#include <optional>

#include "jagged/capabilities.hpp"
#include "jagged/interventions.hpp"
#include "jagged/numerics.hpp"
#include "jagged/objectives.hpp"
#include "jagged/telemetry.hpp"

namespace jagged {

/// eta_t = eta0 * decay^t.
struct EtaSchedule {
  double eta0 = 0.0;
  double decay = 1.0;

  double at(std::size_t t) const;
};

struct TrainerConfig {
  static constexpr std::size_t kMaxHorizon = 10'000'000;

  std::size_t horizon = 1;
  EtaSchedule eta;
  std::uint64_t seed = 0;
  std::optional<GovernancePolicy> governance;
  std::size_t record_coupling_every = 0;  // 0: final coupling only

  /// Throws UsageError on an out-of-range field.
  void validate() const;
};

struct TrainerState {
  Vector theta;
  std::size_t t = 0;
};

struct StepResult {
  TrainerState next;
  StepRecord record;
};

/// One update. Telemetry is measured on the raw gradient first; governance,
/// if configured, then replaces the direction that is actually applied.
StepResult step(const TrainerConfig& config, const TrainerState& state, const Objective& objective,
                const CapabilitySet& capabilities);

Trace run(const TrainerConfig& config, const Objective& objective,
          const CapabilitySet& capabilities, const Vector& theta0);

}  // namespace jagged
