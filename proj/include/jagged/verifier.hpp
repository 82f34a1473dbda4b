#pragma once

// Numerical checks of the energy-to-gain bounds against recorded traces.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jagged/capabilities.hpp"
#include "jagged/numerics.hpp"
#include "jagged/objectives.hpp"
#include "jagged/telemetry.hpp"

namespace jagged {

/// Multiplier applied to c_T inside every check; recorded in report files.
inline constexpr double kRemainderInflation = 1.01;

/// Fraction of flagged steps above which a trace is assumption-limited.
inline constexpr double kAssumptionLimit = 0.05;

struct SensitivityEstimate {
  Vector alpha_i;
  Vector beta_i;
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t steps_used = 0;
};

struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double remainder_budget = 0.0;
  bool satisfied = false;
  double margin = 0.0;
  std::size_t steps_used = 0;
  std::size_t flagged_steps = 0;
  bool applicable = true;
};

/// Per-capability min/max of <grad C_i, -g> / (||g|| E_i) over unflagged
/// steps with nonzero gradient and E_i > 1e-12. Capabilities without an
/// eligible step get 0 for both. Throws DiagnosticError when no step is
/// eligible at all.
SensitivityEstimate estimate_sensitivity(const Trace& trace);

/// c_T = (L_*/2) sum_t eta_t^2 ||g_t||^2, L_* the largest capability
/// Lipschitz constant. Not inflated.
double remainder_budget(const Trace& trace);
double remainder_budget(const Trace& trace, const CapabilitySet& capabilities);

/// Two reports per capability: lower then upper side of the energy sandwich.
std::vector<BoundReport> check_prop1(const Trace& trace, const SensitivityEstimate& est);

/// J(T) >= alpha^2 Var(W) - K_T with the constructive K_T.
BoundReport check_thm1(const Trace& trace, const SensitivityEstimate& est);

/// The constructive K_T: 4 c (1/m) sum |Gt_i - mean Gt| + 4 c^2, Gt the
/// first-order gains and c the inflated remainder budget.
double concentration_remainder(const Trace& trace);

/// sum G_i <= beta B_T + m c_T and G_i >= alpha W_i - c_T for every i. The
/// report carries the total inequality; `satisfied` requires every per-i
/// bound too and `margin` is the smallest slack.
BoundReport check_thm2(const Trace& trace, const SensitivityEstimate& est);

/// Opportunity cost at matched budget: moving energy weight onto `focus`
/// lowers the summed lower bounds alpha W_j - c of the other capabilities by
/// at least alpha dW_focus - alpha |dB| - 2 (m - 1) max(c_a, c_b), alpha the
/// smaller of the two estimates. Throws UsageError when budgets differ by
/// more than 1%.
BoundReport check_thm2_tradeoff(const Trace& baseline, const Trace& steered, std::size_t focus);

/// Prefixes of the two traces whose budgets agree within 1%; the longer
/// budget is truncated. Throws UsageError when no such prefix exists.
std::pair<Trace, Trace> budget_matched_prefixes(const Trace& a, const Trace& b);

struct MismatchBounds {
  double delta = 0.0;  // max_t <grad C_i, -grad L_prox>
  double m_bound = 0.0;  // max_t <grad C_i, -grad L_struct>
};

/// Throws UsageError when the trace has no component-gradient records.
MismatchBounds measure_mismatch(const Trace& trace, std::size_t index);

/// Per step: dC_i <= eta (delta + eps M) + eta^2 (L_i/2) ||g||^2. lhs is G_i
/// and rhs the summed caps.
BoundReport check_prop2(const Trace& trace, std::size_t index, double delta, double epsilon,
                        double m_bound);

/// Per step and capability: |dC_i - predicted_i| within the second-order
/// budget plus 1e-9 (1 + |dC_i|). lhs is the worst excess, rhs is 0.
BoundReport check_prop5(const Trace& trace);

/// Applicable when the largest cumulative share exceeds 0.9 and some share
/// is below 0.1; then the floor alpha^2 Var(W) - K_T must be positive and
/// below J(T). Otherwise the report is satisfied and not applicable.
BoundReport check_corollary(const Trace& trace, const SensitivityEstimate& est);

struct GradientOracle {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

GradientOracle oracle_of(const Objective& objective);
GradientOracle oracle_of(const Capability& capability);

/// Worst ||fd - g||_inf / (1 + ||g||_inf) over the samples, with central
/// differences of step 1e-5 (1 + |theta_k|).
double finite_difference_audit(const GradientOracle& oracle, std::span<const Vector> samples);

bool assumption_limited(const Trace& trace);

/// The standard battery on the unflagged prefix of a trace. Mismatch checks
/// run when the trace carries component alignments, against `neglected`
/// (default: the capability with the smallest cumulative share) with the
/// given epsilon.
struct VerificationOptions {
  std::optional<std::size_t> neglected;
  std::optional<double> mismatch_epsilon;
};

struct VerificationResult {
  std::vector<BoundReport> reports;
  bool assumption_limited = false;
  std::size_t window = 0;  // steps in the verified prefix
};

VerificationResult verify_trace(const Trace& trace, const VerificationOptions& options = {});

}  // namespace jagged
