#include "jagged/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jagged/errors.hpp"

namespace jagged {

namespace {

constexpr double kCheckTolerance = 1e-8;

double population_variance(const Vector& x) { return jaggedness(x); }

double inflated_budget(const Trace& trace) { return kRemainderInflation * remainder_budget(trace); }

double max_lipschitz(const Trace& trace) {
  double l = 0.0;
  for (double v : trace.lipschitz) l = std::max(l, v);
  return l;
}

Vector first_order_gains(const Trace& trace) {
  Vector out = Vector::zeros(trace.capability_count());
  for (const StepRecord& s : trace.steps) out.axpy(-s.eta, s.applied_projections);
  return out;
}

void require_steps(const Trace& trace, const char* what) {
  if (trace.steps.empty()) throw UsageError(std::string(what) + ": trace has no steps");
}

}  // namespace

SensitivityEstimate estimate_sensitivity(const Trace& trace) {
  const std::size_t m = trace.capability_count();
  SensitivityEstimate est;
  est.alpha_i = Vector::zeros(m);
  est.beta_i = Vector::zeros(m);
  std::vector<double> lo(m, std::numeric_limits<double>::infinity());
  std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
  for (const StepRecord& s : trace.steps) {
    if (s.flagged || !(s.applied_norm > 0.0)) continue;
    const Vector& shares = s.applied_shares();
    bool used = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(shares[i] > 1e-12)) continue;
      const double ratio = std::max(0.0, -s.applied_projections[i] / (s.applied_norm * shares[i]));
      lo[i] = std::min(lo[i], ratio);
      hi[i] = std::max(hi[i], ratio);
      used = true;
    }
    if (used) ++est.steps_used;
  }
  if (est.steps_used == 0) {
    throw DiagnosticError("estimate_sensitivity: no unflagged step with nonzero shares");
  }
  est.alpha = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    if (std::isfinite(lo[i])) {
      est.alpha_i[i] = lo[i];
      est.beta_i[i] = hi[i];
    }
    est.alpha = std::min(est.alpha, est.alpha_i[i]);
    est.beta = std::max(est.beta, est.beta_i[i]);
  }
  return est;
}

double remainder_budget(const Trace& trace) {
  const double l = max_lipschitz(trace);
  if (l == 0.0) return 0.0;
  double s = 0.0;
  for (const StepRecord& st : trace.steps) s += st.eta * st.eta * st.applied_norm * st.applied_norm;
  return 0.5 * l * s;
}

double remainder_budget(const Trace& trace, const CapabilitySet& capabilities) {
  const double l = capabilities.max_lipschitz();
  if (l == 0.0) return 0.0;
  double s = 0.0;
  for (const StepRecord& st : trace.steps) s += st.eta * st.eta * st.applied_norm * st.applied_norm;
  return 0.5 * l * s;
}

std::vector<BoundReport> check_prop1(const Trace& trace, const SensitivityEstimate& est) {
  require_steps(trace, "check_prop1");
  const AllocationSummary sum = cumulative(trace);
  const double c = inflated_budget(trace);
  const std::size_t flagged = flagged_step_count(trace);
  std::vector<BoundReport> out;
  for (std::size_t i = 0; i < trace.capability_count(); ++i) {
    const double g = sum.gains[i];
    const double tol = kCheckTolerance * (1.0 + std::abs(g));
    BoundReport lower;
    lower.name = "prop1.lower[" + trace.names[i] + "]";
    lower.lhs = est.alpha_i[i] * sum.weights[i] - c;
    lower.rhs = g;
    lower.remainder_budget = c;
    lower.margin = lower.rhs - lower.lhs;
    lower.satisfied = lower.margin >= -tol;
    lower.steps_used = est.steps_used;
    lower.flagged_steps = flagged;

    BoundReport upper = lower;
    upper.name = "prop1.upper[" + trace.names[i] + "]";
    upper.lhs = g;
    upper.rhs = est.beta_i[i] * sum.weights[i] + c;
    upper.margin = upper.rhs - upper.lhs;
    upper.satisfied = upper.margin >= -tol;
    out.push_back(std::move(lower));
    out.push_back(std::move(upper));
  }
  return out;
}

double concentration_remainder(const Trace& trace) {
  const double c = inflated_budget(trace);
  if (c == 0.0) return 0.0;
  const Vector gt = first_order_gains(trace);
  const double m = static_cast<double>(gt.size());
  const double mean = sum(gt) / m;
  double spread = 0.0;
  for (double v : gt) spread += std::abs(v - mean);
  return 4.0 * c * spread / m + 4.0 * c * c;
}

BoundReport check_thm1(const Trace& trace, const SensitivityEstimate& est) {
  require_steps(trace, "check_thm1");
  const AllocationSummary sum = cumulative(trace);
  const double k = concentration_remainder(trace);
  BoundReport r;
  r.name = "thm1";
  r.lhs = sum.jaggedness;
  r.rhs = est.alpha * est.alpha * population_variance(sum.weights) - k;
  r.remainder_budget = k;
  r.margin = r.lhs - r.rhs;
  r.satisfied = r.margin >= -kCheckTolerance * (1.0 + std::abs(r.lhs));
  r.steps_used = est.steps_used;
  r.flagged_steps = flagged_step_count(trace);
  return r;
}

BoundReport check_thm2(const Trace& trace, const SensitivityEstimate& est) {
  require_steps(trace, "check_thm2");
  const AllocationSummary sum = cumulative(trace);
  const double c = inflated_budget(trace);
  const double m = static_cast<double>(trace.capability_count());
  BoundReport r;
  r.name = "thm2";
  r.lhs = jagged::sum(sum.gains);
  r.rhs = est.beta * sum.budget + m * c;
  r.remainder_budget = c;
  r.margin = r.rhs - r.lhs;
  bool ok = r.margin >= -kCheckTolerance * (1.0 + std::abs(r.lhs));
  for (std::size_t i = 0; i < trace.capability_count(); ++i) {
    const double slack = sum.gains[i] - (est.alpha * sum.weights[i] - c);
    r.margin = std::min(r.margin, slack);
    ok = ok && slack >= -kCheckTolerance * (1.0 + std::abs(sum.gains[i]));
  }
  r.satisfied = ok;
  r.steps_used = est.steps_used;
  r.flagged_steps = flagged_step_count(trace);
  return r;
}

std::pair<Trace, Trace> budget_matched_prefixes(const Trace& a, const Trace& b) {
  require_steps(a, "budget_matched_prefixes");
  require_steps(b, "budget_matched_prefixes");
  const double ba = cumulative(a).budget;
  const double bb = cumulative(b).budget;
  const bool a_longer = ba > bb;
  const Trace& longer = a_longer ? a : b;
  const double target = std::min(ba, bb);

  std::size_t n = longer.steps.size();
  double running = 0.0;
  for (std::size_t t = 0; t < longer.steps.size(); ++t) {
    const double next = running + longer.steps[t].eta * longer.steps[t].applied_norm;
    if (next >= target) {
      n = std::abs(next - target) <= std::abs(running - target) || t == 0 ? t + 1 : t;
      break;
    }
    running = next;
  }
  Trace cut = prefix(longer, n);
  const double bc = cumulative(cut).budget;
  if (std::abs(bc - target) > 0.01 * std::max(bc, target)) {
    throw UsageError("budget_matched_prefixes: budgets cannot be matched within 1%");
  }
  return a_longer ? std::pair<Trace, Trace>{std::move(cut), b} : std::pair<Trace, Trace>{a, std::move(cut)};
}

BoundReport check_thm2_tradeoff(const Trace& baseline, const Trace& steered, std::size_t focus) {
  require_steps(baseline, "check_thm2_tradeoff");
  require_steps(steered, "check_thm2_tradeoff");
  const std::size_t m = baseline.capability_count();
  if (steered.capability_count() != m || focus >= m) {
    throw UsageError("check_thm2_tradeoff: capability sets differ or focus out of range");
  }
  const AllocationSummary sa = cumulative(baseline);
  const AllocationSummary sb = cumulative(steered);
  if (std::abs(sa.budget - sb.budget) > 0.01 * std::max(sa.budget, sb.budget)) {
    throw UsageError("check_thm2_tradeoff: budgets differ by more than 1%");
  }
  const SensitivityEstimate ea = estimate_sensitivity(baseline);
  const SensitivityEstimate eb = estimate_sensitivity(steered);
  const double alpha = std::min(ea.alpha, eb.alpha);
  const double ca = inflated_budget(baseline);
  const double cb = inflated_budget(steered);

  double lower_a = 0.0;
  double lower_b = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == focus) continue;
    lower_a += alpha * sa.weights[j] - ca;
    lower_b += alpha * sb.weights[j] - cb;
  }
  const double dw = sb.weights[focus] - sa.weights[focus];
  const double db = sb.budget - sa.budget;
  BoundReport r;
  r.name = "thm2.tradeoff[" + baseline.names[focus] + "]";
  r.lhs = lower_a - lower_b;
  r.rhs = alpha * dw - alpha * std::abs(db) - 2.0 * static_cast<double>(m - 1) * std::max(ca, cb);
  r.remainder_budget = std::max(ca, cb);
  r.margin = r.lhs - r.rhs;
  r.satisfied = r.margin >= -kCheckTolerance * (1.0 + std::abs(r.lhs));
  r.steps_used = std::min(ea.steps_used, eb.steps_used);
  r.flagged_steps = flagged_step_count(baseline) + flagged_step_count(steered);
  return r;
}

MismatchBounds measure_mismatch(const Trace& trace, std::size_t index) {
  require_steps(trace, "measure_mismatch");
  if (index >= trace.capability_count()) throw UsageError("measure_mismatch: index out of range");
  MismatchBounds out{-std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
  for (const StepRecord& s : trace.steps) {
    if (!s.prox_alignment || !s.struct_alignment) {
      throw UsageError("measure_mismatch: trace lacks component-gradient records");
    }
    out.delta = std::max(out.delta, (*s.prox_alignment)[index]);
    out.m_bound = std::max(out.m_bound, (*s.struct_alignment)[index]);
  }
  return out;
}

BoundReport check_prop2(const Trace& trace, std::size_t index, double delta, double epsilon,
                        double m_bound) {
  require_steps(trace, "check_prop2");
  if (index >= trace.capability_count()) throw UsageError("check_prop2: index out of range");
  if (!trace.steps.front().prox_alignment) {
    throw UsageError("check_prop2: trace lacks component-gradient records");
  }
  const double li = trace.lipschitz[index];
  BoundReport r;
  r.name = "prop2[" + trace.names[index] + "]";
  r.margin = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const StepRecord& s = trace.steps[t];
    const double before = trace.capability_values_at(t)[index];
    const double gain = trace.capability_values_at(t + 1)[index] - before;
    const double second = s.eta * s.eta * 0.5 * li * s.applied_norm * s.applied_norm;
    const double cap = s.eta * (delta + epsilon * m_bound) + kRemainderInflation * second;
    const double slack = cap - gain;
    ok = ok && slack >= -1e-10 * (1.0 + std::abs(before));
    r.margin = std::min(r.margin, slack);
    r.lhs += gain;
    r.rhs += cap;
    r.remainder_budget += kRemainderInflation * second;
  }
  r.satisfied = ok;
  r.steps_used = trace.steps.size();
  r.flagged_steps = flagged_step_count(trace);
  return r;
}

BoundReport check_prop5(const Trace& trace) {
  require_steps(trace, "check_prop5");
  const std::size_t m = trace.capability_count();
  BoundReport r;
  r.name = "prop5";
  r.lhs = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const StepRecord& s = trace.steps[t];
    const Vector& before = trace.capability_values_at(t);
    const Vector& after = trace.capability_values_at(t + 1);
    for (std::size_t i = 0; i < m; ++i) {
      const double gain = after[i] - before[i];
      const double second =
          kRemainderInflation * s.eta * s.eta * 0.5 * trace.lipschitz[i] * s.applied_norm * s.applied_norm;
      const double excess = std::abs(gain - s.predicted_gain[i]) - second - 1e-9 * (1.0 + std::abs(gain));
      r.lhs = std::max(r.lhs, excess);
      r.remainder_budget = std::max(r.remainder_budget, second);
    }
  }
  r.rhs = 0.0;
  r.margin = r.rhs - r.lhs;
  r.satisfied = r.lhs <= 0.0;
  r.steps_used = trace.steps.size();
  r.flagged_steps = flagged_step_count(trace);
  return r;
}

BoundReport check_corollary(const Trace& trace, const SensitivityEstimate& est) {
  require_steps(trace, "check_corollary");
  const AllocationSummary sum = cumulative(trace);
  const Vector& e = sum.cumulative_shares;
  const double top = *std::max_element(e.begin(), e.end());
  const double bottom = *std::min_element(e.begin(), e.end());
  BoundReport r;
  r.name = "corollary";
  r.lhs = sum.jaggedness;
  r.steps_used = est.steps_used;
  r.flagged_steps = flagged_step_count(trace);
  if (!(top > 0.9 && bottom < 0.1)) {
    r.name += " [n/a]";
    r.applicable = false;
    r.satisfied = true;
    r.rhs = 0.0;
    r.margin = 0.0;
    return r;
  }
  const double k = concentration_remainder(trace);
  r.rhs = est.alpha * est.alpha * population_variance(sum.weights) - k;
  r.remainder_budget = k;
  r.margin = r.lhs - r.rhs;
  r.satisfied = r.rhs > 0.0 && r.margin >= -kCheckTolerance * (1.0 + std::abs(r.lhs));
  return r;
}

GradientOracle oracle_of(const Objective& objective) {
  return {[&objective](const Vector& x) { return objective.loss(x); },
          [&objective](const Vector& x) { return objective.gradient(x); }};
}

GradientOracle oracle_of(const Capability& capability) {
  return {[&capability](const Vector& x) { return capability.value(x); },
          [&capability](const Vector& x) { return capability.gradient(x); }};
}

double finite_difference_audit(const GradientOracle& oracle, std::span<const Vector> samples) {
  if (samples.empty()) throw UsageError("finite_difference_audit: no samples");
  double worst = 0.0;
  for (const Vector& theta : samples) {
    const Vector g = oracle.gradient(theta);
    double err = 0.0;
    Vector probe = theta;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double h = 1e-5 * (1.0 + std::abs(theta[k]));
      probe[k] = theta[k] + h;
      const double up = oracle.value(probe);
      probe[k] = theta[k] - h;
      const double down = oracle.value(probe);
      probe[k] = theta[k];
      // Dividing by the realised spacing removes the rounding of theta +- h.
      const double fd = (up - down) / ((theta[k] + h) - (theta[k] - h));
      err = std::max(err, std::abs(fd - g[k]));
    }
    worst = std::max(worst, err / (1.0 + max_abs(g)));
  }
  return worst;
}

bool assumption_limited(const Trace& trace) {
  if (trace.steps.empty()) return false;
  return static_cast<double>(flagged_step_count(trace)) >
         kAssumptionLimit * static_cast<double>(trace.steps.size());
}

VerificationResult verify_trace(const Trace& trace, const VerificationOptions& options) {
  require_steps(trace, "verify_trace");
  VerificationResult out;
  out.assumption_limited = assumption_limited(trace);
  out.window = unflagged_prefix_length(trace);
  if (out.window == 0) return out;
  const Trace window = prefix(trace, out.window);
  const std::size_t flagged = flagged_step_count(trace);

  const SensitivityEstimate est = estimate_sensitivity(window);
  out.reports = check_prop1(window, est);
  out.reports.push_back(check_thm1(window, est));
  out.reports.push_back(check_thm2(window, est));
  out.reports.push_back(check_prop5(window));
  out.reports.push_back(check_corollary(window, est));
  if (window.steps.front().prox_alignment && options.mismatch_epsilon) {
    std::size_t idx = 0;
    if (options.neglected) {
      idx = *options.neglected;
    } else {
      const Vector e = cumulative(window).cumulative_shares;
      idx = static_cast<std::size_t>(std::min_element(e.begin(), e.end()) - e.begin());
    }
    const MismatchBounds mb = measure_mismatch(window, idx);
    out.reports.push_back(check_prop2(window, idx, mb.delta, *options.mismatch_epsilon, mb.m_bound));
  }
  for (BoundReport& r : out.reports) r.flagged_steps = flagged;
  return out;
}

}  // namespace jagged
