#include "jagged/interventions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jagged/errors.hpp"
#include "jagged/telemetry.hpp"

namespace jagged {

namespace {

const QuadraticObjective& require_supported_family(const VarianceRegularizer& reg,
                                                   const Objective& objective) {
  const auto* quad = dynamic_cast<const QuadraticObjective*>(&objective);
  if (quad == nullptr) {
    throw CapabilityError(
        "variance penalty: closed form is only available for a quadratic loss");
  }
  if (!reg.capabilities().all_linear()) {
    throw CapabilityError(
        "variance penalty: closed form is only available for linear capabilities");
  }
  if (quad->dimension() != reg.capabilities().dimension()) {
    throw UsageError("variance penalty: objective and capability dimensions differ");
  }
  return *quad;
}

}  // namespace

VarianceRegularizer::VarianceRegularizer(double lambda,
                                         std::shared_ptr<const CapabilitySet> capabilities,
                                         double smoothing)
    : lambda_(lambda), capabilities_(std::move(capabilities)), smoothing_(smoothing) {
  if (!capabilities_) throw UsageError("variance regularizer: missing capability set");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw UsageError("variance regularizer: lambda must be finite and >= 0");
  }
  if (!(smoothing_ > 0.0) || !std::isfinite(smoothing_)) {
    throw UsageError("variance regularizer: smoothing must be finite and > 0");
  }
}

PenaltyValue variance_penalty(const VarianceRegularizer& reg, const Objective& objective,
                              const Vector& theta) {
  const QuadraticObjective& quad = require_supported_family(reg, objective);
  const CapabilitySet& caps = reg.capabilities();
  const std::size_t m = caps.size();
  const double md = static_cast<double>(m);

  // p_k(theta) = u_k . (H theta - A^T b) is affine, so dp_k/dtheta = H u_k.
  const Vector g = quad.gradient(theta);
  const double eps2 = reg.smoothing() * reg.smoothing();
  std::vector<double> p(m);
  std::vector<double> s(m);
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    p[k] = dot(caps[k].as_linear()->direction(), g);
    s[k] = std::sqrt(p[k] * p[k] + eps2);
    total += s[k];
  }
  std::vector<double> e(m);
  double mean = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    e[k] = s[k] / total;
    mean += e[k];
  }
  mean /= md;
  double var = 0.0;
  for (std::size_t k = 0; k < m; ++k) var += (e[k] - mean) * (e[k] - mean);
  var /= md;

  PenaltyValue out;
  out.value = reg.lambda() * var;
  out.gradient = Vector::zeros(theta.size());
  if (reg.lambda() == 0.0) return out;

  // dVar/dE_k = (2/m)(E_k - mean); dE_i/ds_k = (delta_ik - E_i)/S; ds_k/dp_k = p_k/s_k.
  std::vector<double> dvar(m);
  double inner = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    dvar[k] = 2.0 / md * (e[k] - mean);
    inner += dvar[k] * e[k];
  }
  Vector w = Vector::zeros(theta.size());
  for (std::size_t k = 0; k < m; ++k) {
    const double c = (p[k] / s[k]) / total * (dvar[k] - inner);
    w.axpy(c, caps[k].as_linear()->direction());
  }
  out.gradient = reg.lambda() * quad.hessian().multiply(w);
  return out;
}

double variance_penalty_lipschitz_bound(const VarianceRegularizer& reg,
                                        const QuadraticObjective& objective) {
  const double m = static_cast<double>(reg.capabilities().size());
  const double eps = reg.smoothing();
  const double rm = std::sqrt(m);
  // Hessian of Var(E(s)) in s is bounded by [(2/m)(1+sqrt m)^2 + 4(1+sqrt m)] / S^2,
  // the curvature of s(p) adds 4/(m S eps), and S >= m eps. The Jacobian of
  // p in theta is U^T H with ||U^T H|| <= sqrt(m) lambda_max(H).
  const double s_min = m * eps;
  const double h_s = (2.0 / m * (1.0 + rm) * (1.0 + rm) + 4.0 * (1.0 + rm)) / (s_min * s_min);
  const double h_p = h_s + 4.0 / (m * s_min * eps);
  const double lh = objective.lipschitz_bound();
  return reg.lambda() * m * lh * lh * h_p;
}

double stationarity_residual(const VarianceRegularizer& reg, const Objective& objective,
                             const Vector& theta) {
  const PenaltyValue pen = variance_penalty(reg, objective, theta);
  return norm(objective.gradient(theta) + pen.gradient);
}

bool is_stationary(const VarianceRegularizer& reg, const Objective& objective,
                   const Vector& theta) {
  return stationarity_residual(reg, objective, theta) <=
         1e-6 * (1.0 + norm(objective.gradient(theta)));
}

// ---------------------------------------------------------------------------

GovernancePolicy::GovernancePolicy(Vector rho_max, Vector rho_min, std::size_t max_iterations)
    : rho_max_(std::move(rho_max)), rho_min_(std::move(rho_min)), max_iterations_(max_iterations) {
  if (rho_max_.size() != rho_min_.size() || rho_max_.empty()) {
    throw UsageError("governance policy: caps and floors must have equal, non-zero length");
  }
  if (max_iterations_ == 0) throw UsageError("governance policy: max_iterations must be >= 1");
  for (std::size_t i = 0; i < rho_max_.size(); ++i) {
    if (!(rho_max_[i] > 0.0 && rho_max_[i] <= 1.0)) {
      throw UsageError("governance policy: rho_max must lie in (0, 1]");
    }
    if (!(rho_min_[i] >= 0.0 && rho_min_[i] < 1.0)) {
      throw UsageError("governance policy: rho_min must lie in [0, 1)");
    }
    if (rho_min_[i] > rho_max_[i]) {
      throw UsageError("governance policy: rho_min exceeds rho_max for coordinate " +
                       std::to_string(i));
    }
  }
  if (sum(rho_min_) > 1.0 + 1e-12) {
    throw UsageError("governance policy: infeasible, floors sum to more than 1");
  }
  if (sum(rho_max_) < 1.0 - 1e-12) {
    throw UsageError("governance policy: infeasible, caps sum to less than 1");
  }
}

GovernancePolicy GovernancePolicy::unconstrained(std::size_t m) {
  return GovernancePolicy(Vector::filled(m, 1.0), Vector::zeros(m));
}

bool GovernancePolicy::admits(const Vector& shares) const {
  if (shares.size() != size()) throw UsageError("governance policy: share count mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    if (shares[i] > rho_max_[i] + kTolerance || shares[i] < rho_min_[i] - kTolerance) return false;
  }
  return true;
}

Vector governance_targets(const GovernancePolicy& policy, const Vector& shares) {
  const std::size_t m = policy.size();
  if (shares.size() != m) throw UsageError("governance targets: share count mismatch");
  const Vector& hi = policy.rho_max();
  const Vector& lo = policy.rho_min();

  auto scaled = [&](double mu) {
    Vector t = Vector::zeros(m);
    for (std::size_t i = 0; i < m; ++i) t[i] = std::clamp(mu * shares[i], lo[i], hi[i]);
    return t;
  };

  double reachable = 0.0;
  for (std::size_t i = 0; i < m; ++i) reachable += shares[i] > 0.0 ? hi[i] : lo[i];

  if (reachable >= 1.0) {
    double a = 0.0;
    double b = 1.0;
    while (sum(scaled(b)) < 1.0) b *= 2.0;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      (sum(scaled(mid)) < 1.0 ? a : b) = mid;
    }
    return scaled(b);
  }

  // Coordinates with energy are all at their caps; lift the silent ones
  // uniformly above their floors.
  auto lifted = [&](double nu) {
    Vector t = Vector::zeros(m);
    for (std::size_t i = 0; i < m; ++i) {
      t[i] = shares[i] > 0.0 ? hi[i] : std::clamp(nu, lo[i], hi[i]);
    }
    return t;
  };
  double a = 0.0;
  double b = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    (sum(lifted(mid)) < 1.0 ? a : b) = mid;
  }
  return lifted(b);
}

GovernanceResult apply_governance(const GovernancePolicy& policy, const CapabilitySet& capabilities,
                                  const Vector& theta, const Vector& gradient) {
  const std::size_t m = capabilities.size();
  if (policy.size() != m) throw UsageError("apply_governance: policy size does not match capabilities");
  if (gradient.size() != capabilities.dimension()) {
    throw UsageError("apply_governance: gradient dimension mismatch");
  }
  const std::vector<Vector> grads = capabilities.gradients(theta);

  auto projections_of = [&](const Vector& direction) {
    Vector p = Vector::zeros(m);
    for (std::size_t i = 0; i < m; ++i) p[i] = dot(grads[i], direction);
    return p;
  };

  const Vector raw_projections = projections_of(gradient);
  const Vector raw_shares = energy_shares(raw_projections);
  if (policy.admits(raw_shares)) return {gradient, raw_shares, 0};

  const LeastSquaresResult parts = least_squares(grads, gradient);
  double total = 0.0;
  for (double p : raw_projections) total += std::abs(p);

  // Gram columns: the projections of sum_j a_j grad C_j are G a.
  std::vector<Vector> gram_columns;
  gram_columns.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    Vector col = Vector::zeros(m);
    for (std::size_t i = 0; i < m; ++i) col[i] = dot(grads[i], grads[j]);
    gram_columns.push_back(std::move(col));
  }
  // A capability with no projection is steered so that the step raises it.
  Vector signs = Vector::zeros(m);
  for (std::size_t i = 0; i < m; ++i) signs[i] = raw_projections[i] > 0.0 ? 1.0 : -1.0;

  Vector controlled = gradient;
  Vector shares = raw_shares;
  for (std::size_t it = 1; it <= policy.max_iterations(); ++it) {
    const Vector targets = governance_targets(policy, shares);
    Vector wanted = Vector::zeros(m);
    for (std::size_t i = 0; i < m; ++i) wanted[i] = signs[i] * targets[i] * total;
    const Vector coeffs = least_squares(gram_columns, wanted).coefficients;
    controlled = parts.residual;
    for (std::size_t j = 0; j < m; ++j) controlled.axpy(coeffs[j], grads[j]);
    shares = energy_shares(projections_of(controlled));
    if (policy.admits(shares)) return {controlled, shares, it};
  }
  throw ConvergenceError("apply_governance: constraints not met within " +
                             std::to_string(policy.max_iterations()) + " iterations",
                         controlled, shares);
}

double underinvestment_cap(double delta, double epsilon, double m_bound, double eta) {
  if (delta < 0.0 || epsilon < 0.0 || m_bound < 0.0 || eta < 0.0) {
    throw UsageError("underinvestment_cap: inputs must be non-negative");
  }
  return eta * (delta + epsilon * m_bound);
}

}  // namespace jagged
