#pragma once

// Measurement layer: projections, energy shares, cumulative weights, budget,
// gains, jaggedness, coupling and the capability-span decomposition.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jagged/capabilities.hpp"
#include "jagged/numerics.hpp"

namespace jagged {

/// Everything measured at one optimisation step. The raw fields describe the
/// loss gradient g_t; the applied fields describe the direction actually
/// stepped along, which differs only when governance is active.
struct StepRecord {
  std::size_t t = 0;
  double eta = 0.0;
  double grad_norm = 0.0;
  Vector projections;        // <grad C_i(theta_t), g_t>
  Vector shares;             // E_i(t)
  Vector coeffs;             // a_j(t) in g_t = sum_j a_j grad C_j + r_t
  double residual_norm = 0.0;
  Vector capability_values;  // C_i(theta_t)

  double applied_norm = 0.0;
  Vector applied_projections;
  std::optional<Vector> achieved_shares;  // present only under governance
  Vector predicted_gain;                  // coupling-form first-order gain of the applied step
  bool flagged = false;                   // some <grad C_i, -applied> < -1e-12

  std::optional<Vector> prox_alignment;    // <grad C_i, -grad L_prox>
  std::optional<Vector> struct_alignment;  // <grad C_i, -grad L_struct>
  std::optional<Matrix> coupling;

  const Vector& applied_shares() const noexcept {
    return achieved_shares ? *achieved_shares : shares;
  }
};

struct Trace {
  std::vector<std::string> names;
  Vector lipschitz;  // per-capability gradient-Lipschitz constants
  Vector theta_initial;
  Vector theta_final;  // empty for truncated traces
  std::vector<StepRecord> steps;
  Vector capability_values_final;
  Matrix coupling_final;  // at theta_final; empty for truncated traces
  bool governance_active = false;

  std::size_t capability_count() const noexcept { return names.size(); }
  std::size_t horizon() const noexcept { return steps.size(); }
  /// C_i(theta_{t}) for t in [0, T]; t == T gives the final values.
  const Vector& capability_values_at(std::size_t t) const;
};

struct AllocationSummary {
  Vector weights;  // W_i(T)
  double budget = 0.0;  // B_T
  Vector cumulative_shares;  // Ebar_i(T)
  Vector gains;  // G_i(T)
  double jaggedness = 0.0;  // J(T)
  Matrix coupling;  // kappa at theta_T
};

/// E_i = |p_i| / sum_j |p_j|; uniform when sum_j |p_j| <= 1e-12 (1 + max|p_j|).
Vector energy_shares(const Vector& projections);

/// Population variance of the gains.
double jaggedness(const Vector& gains);

/// Cosine similarity of capability gradients; a pair with a gradient of norm
/// <= 1e-12 has coupling 0 (diagonal stays 1).
Matrix coupling_matrix(std::span<const Vector> gradients);
Matrix coupling_matrix(const CapabilitySet& capabilities, const Vector& theta);

/// Least-squares decomposition of g over the capability gradients at theta.
LeastSquaresResult decompose_gradient(const CapabilitySet& capabilities, const Vector& theta,
                                      const Vector& g);

/// Delta C_i ~ -eta sum_j a_j ||grad C_i|| ||grad C_j|| kappa_ij.
Vector predicted_gain(const CapabilitySet& capabilities, const Vector& theta, const Vector& g,
                      double eta);

AllocationSummary cumulative(const Trace& trace);

/// First `steps` steps of a trace, with final capability values taken from
/// the next step's record.
Trace prefix(const Trace& trace, std::size_t steps);

/// Length of the leading run of steps that satisfy positive alignment.
std::size_t unflagged_prefix_length(const Trace& trace);

std::size_t flagged_step_count(const Trace& trace);

}  // namespace jagged
