#include "jagged/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include "jagged/errors.hpp"

namespace jagged {

const Vector& Trace::capability_values_at(std::size_t t) const {
  if (t < steps.size()) return steps[t].capability_values;
  if (t == steps.size()) return capability_values_final;
  throw UsageError("trace: step index out of range");
}

Vector energy_shares(const Vector& projections) {
  if (projections.empty()) throw UsageError("energy_shares: no projections");
  const std::size_t m = projections.size();
  double total = 0.0;
  double largest = 0.0;
  for (double p : projections) {
    total += std::abs(p);
    largest = std::max(largest, std::abs(p));
  }
  if (total <= 1e-12 * (1.0 + largest)) return Vector::filled(m, 1.0 / static_cast<double>(m));
  Vector shares = Vector::zeros(m);
  for (std::size_t i = 0; i < m; ++i) shares[i] = std::abs(projections[i]) / total;
  return shares;
}

double jaggedness(const Vector& gains) {
  if (gains.empty()) throw UsageError("jaggedness: no gains");
  const double mean = sum(gains) / static_cast<double>(gains.size());
  double s = 0.0;
  for (double g : gains) s += (g - mean) * (g - mean);
  return s / static_cast<double>(gains.size());
}

Matrix coupling_matrix(std::span<const Vector> gradients) {
  const std::size_t m = gradients.size();
  if (m == 0) throw UsageError("coupling_matrix: no gradients");
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) norms[i] = norm(gradients[i]);
  Matrix kappa = Matrix::identity(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      double k = 0.0;
      if (norms[i] > 1e-12 && norms[j] > 1e-12) {
        k = std::clamp(dot(gradients[i], gradients[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      }
      kappa(i, j) = k;
      kappa(j, i) = k;
    }
  }
  return kappa;
}

Matrix coupling_matrix(const CapabilitySet& capabilities, const Vector& theta) {
  const std::vector<Vector> grads = capabilities.gradients(theta);
  return coupling_matrix(grads);
}

LeastSquaresResult decompose_gradient(const CapabilitySet& capabilities, const Vector& theta,
                                      const Vector& g) {
  if (g.size() != capabilities.dimension()) {
    throw UsageError("decompose_gradient: gradient dimension mismatch");
  }
  const std::vector<Vector> grads = capabilities.gradients(theta);
  return least_squares(grads, g);
}

Vector predicted_gain(const CapabilitySet& capabilities, const Vector& theta, const Vector& g,
                      double eta) {
  if (!(eta > 0.0)) throw UsageError("predicted_gain: eta must be positive");
  const std::vector<Vector> grads = capabilities.gradients(theta);
  if (g.size() != capabilities.dimension()) {
    throw UsageError("predicted_gain: gradient dimension mismatch");
  }
  const LeastSquaresResult parts = least_squares(grads, g);
  const Matrix kappa = coupling_matrix(grads);
  const std::size_t m = grads.size();
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) norms[i] = norm(grads[i]);
  Vector gain = Vector::zeros(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s += parts.coefficients[j] * norms[i] * norms[j] * kappa(i, j);
    }
    gain[i] = -eta * s;
  }
  return gain;
}

AllocationSummary cumulative(const Trace& trace) {
  if (trace.steps.empty()) throw UsageError("cumulative: trace has no steps");
  const std::size_t m = trace.capability_count();
  AllocationSummary out;
  out.weights = Vector::zeros(m);
  for (const StepRecord& s : trace.steps) {
    const double mass = s.eta * s.applied_norm;
    out.budget += mass;
    out.weights.axpy(mass, s.applied_shares());
  }
  if (out.budget <= 1e-15) {
    out.cumulative_shares = Vector::filled(m, 1.0 / static_cast<double>(m));
  } else {
    out.cumulative_shares = out.weights;
    out.cumulative_shares *= 1.0 / out.budget;
  }
  out.gains = trace.capability_values_final - trace.steps.front().capability_values;
  out.jaggedness = jaggedness(out.gains);
  out.coupling = trace.coupling_final;
  return out;
}

Trace prefix(const Trace& trace, std::size_t steps) {
  if (steps > trace.steps.size()) throw UsageError("prefix: longer than trace");
  if (steps == trace.steps.size()) return trace;
  Trace out;
  out.names = trace.names;
  out.lipschitz = trace.lipschitz;
  out.theta_initial = trace.theta_initial;
  out.steps.assign(trace.steps.begin(), trace.steps.begin() + static_cast<std::ptrdiff_t>(steps));
  out.capability_values_final = trace.steps[steps].capability_values;
  if (trace.steps[steps].coupling) out.coupling_final = *trace.steps[steps].coupling;
  out.governance_active = trace.governance_active;
  return out;
}

std::size_t unflagged_prefix_length(const Trace& trace) {
  std::size_t n = 0;
  while (n < trace.steps.size() && !trace.steps[n].flagged) ++n;
  return n;
}

std::size_t flagged_step_count(const Trace& trace) {
  return static_cast<std::size_t>(std::count_if(trace.steps.begin(), trace.steps.end(),
                                                [](const StepRecord& s) { return s.flagged; }));
}

}  // namespace jagged
