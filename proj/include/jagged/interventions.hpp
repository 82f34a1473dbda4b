#pragma once

// Mechanisms that reshape where update energy goes: the energy-variance
// penalty, auxiliary objectives (see objectives.hpp) and share governance.

#include <cstddef>
#include <memory>

#include "jagged/capabilities.hpp"
#include "jagged/numerics.hpp"
#include "jagged/objectives.hpp"

namespace jagged {

/// lambda * Var(E_1, ..., E_m) where shares use the smoothed magnitude
/// sqrt(p^2 + eps_s^2). Only defined for a quadratic loss with linear
/// capabilities, where the projections p_i(theta) are affine.
class VarianceRegularizer {
 public:
  static constexpr double kDefaultSmoothing = 1e-6;

  VarianceRegularizer(double lambda, std::shared_ptr<const CapabilitySet> capabilities,
                      double smoothing = kDefaultSmoothing);

  double lambda() const noexcept { return lambda_; }
  double smoothing() const noexcept { return smoothing_; }
  const CapabilitySet& capabilities() const noexcept { return *capabilities_; }

 private:
  double lambda_;
  std::shared_ptr<const CapabilitySet> capabilities_;
  double smoothing_;
};

struct PenaltyValue {
  double value = 0.0;
  Vector gradient;
};

/// Penalty value and its exact gradient. Throws CapabilityError unless the
/// objective is a QuadraticObjective and every capability is linear.
PenaltyValue variance_penalty(const VarianceRegularizer& reg, const Objective& objective,
                              const Vector& theta);

/// Upper bound on the gradient-Lipschitz constant of the penalty (including
/// lambda) for the supported family.
double variance_penalty_lipschitz_bound(const VarianceRegularizer& reg,
                                        const QuadraticObjective& objective);

/// ||grad L(theta) + lambda grad Var(E(theta))||.
double stationarity_residual(const VarianceRegularizer& reg, const Objective& objective,
                             const Vector& theta);

/// The residual test used for reporting: residual <= 1e-6 (1 + ||grad L||).
bool is_stationary(const VarianceRegularizer& reg, const Objective& objective,
                   const Vector& theta);

/// Caps and floors on per-step energy shares.
class GovernancePolicy {
 public:
  static constexpr std::size_t kDefaultMaxIterations = 100;
  static constexpr double kTolerance = 1e-6;

  GovernancePolicy(Vector rho_max, Vector rho_min,
                   std::size_t max_iterations = kDefaultMaxIterations);
  static GovernancePolicy unconstrained(std::size_t m);

  const Vector& rho_max() const noexcept { return rho_max_; }
  const Vector& rho_min() const noexcept { return rho_min_; }
  std::size_t max_iterations() const noexcept { return max_iterations_; }
  std::size_t size() const noexcept { return rho_max_.size(); }

  /// True when shares satisfy every cap and floor within kTolerance.
  bool admits(const Vector& shares) const;

 private:
  Vector rho_max_;
  Vector rho_min_;
  std::size_t max_iterations_;
};

struct GovernanceResult {
  Vector controlled_gradient;
  Vector achieved_shares;
  std::size_t iterations = 0;
};

/// Reweights the capability-span part of g so the achieved shares honour the
/// policy. Each iteration asks for projections with the water-filling target
/// shares, the original signs and the original total |p| mass, and solves
/// the Gram system for the span coefficients. The out-of-span residual is
/// kept. If g already complies it is returned unchanged.
GovernanceResult apply_governance(const GovernancePolicy& policy, const CapabilitySet& capabilities,
                                  const Vector& theta, const Vector& gradient);

/// Shares closest (by common proportional rescaling) to `shares` that satisfy
/// the policy: t_i = clamp(mu * shares_i, rho_min_i, rho_max_i) with mu chosen
/// so the targets sum to one.
Vector governance_targets(const GovernancePolicy& policy, const Vector& shares);

/// Per-step first-order gain cap eta (delta + epsilon M) for a capability
/// under objective mismatch.
double underinvestment_cap(double delta, double epsilon, double m_bound, double eta);

}  // namespace jagged
