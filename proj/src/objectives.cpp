#include "jagged/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "jagged/errors.hpp"
#include "jagged/interventions.hpp"

namespace jagged {

void Objective::require_dimension(const Vector& theta) const {
  if (theta.size() != dimension()) {
    throw UsageError("objective: expected parameter dimension " + std::to_string(dimension()) +
                     ", got " + std::to_string(theta.size()));
  }
}

double default_step_size(const Objective& objective) {
  const double l = objective.lipschitz_bound();
  if (!(l > 0.0)) throw UsageError("default step size: objective has zero curvature bound");
  return 0.5 / l;
}

// ---------------------------------------------------------------------------

QuadraticObjective::QuadraticObjective(Matrix a, Vector b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != b_.size()) {
    throw UsageError("quadratic objective: A has " + std::to_string(a_.rows()) +
                     " rows but b has " + std::to_string(b_.size()) + " entries");
  }
  hessian_ = a_.gram();
  atb_ = a_.transpose_multiply(b_);
  lipschitz_ = largest_eigenvalue_psd(hessian_);
}

double QuadraticObjective::loss(const Vector& theta) const {
  require_dimension(theta);
  const Vector r = a_.multiply(theta) - b_;
  return 0.5 * dot(r, r);
}

Vector QuadraticObjective::gradient(const Vector& theta) const {
  require_dimension(theta);
  return a_.transpose_multiply(a_.multiply(theta) - b_);
}

// ---------------------------------------------------------------------------

MismatchObjective::MismatchObjective(std::shared_ptr<const QuadraticObjective> prox,
                                     std::shared_ptr<const QuadraticObjective> structural,
                                     double epsilon)
    : prox_(std::move(prox)), struct_(std::move(structural)), epsilon_(epsilon) {
  if (!prox_ || !struct_) throw UsageError("mismatch objective: missing component");
  if (prox_->dimension() != struct_->dimension()) {
    throw UsageError("mismatch objective: component dimensions differ");
  }
  if (!(epsilon_ >= 0.0 && epsilon_ <= 1.0)) {
    throw UsageError("mismatch objective: epsilon must lie in [0, 1]");
  }
}

double MismatchObjective::loss(const Vector& theta) const {
  return prox_->loss(theta) + epsilon_ * struct_->loss(theta);
}

Vector MismatchObjective::gradient(const Vector& theta) const {
  Vector g = prox_->gradient(theta);
  g.axpy(epsilon_, struct_->gradient(theta));
  return g;
}

double MismatchObjective::lipschitz_bound() const {
  return prox_->lipschitz_bound() + epsilon_ * struct_->lipschitz_bound();
}

// ---------------------------------------------------------------------------

TanhRegressionObjective::TanhRegressionObjective(Matrix x, Vector y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() != y_.size()) {
    throw UsageError("tanh regression: X has " + std::to_string(x_.rows()) +
                     " rows but y has " + std::to_string(y_.size()) + " entries");
  }
  lipschitz_ = largest_eigenvalue_psd(x_.gram()) * (1.0 + 2.0 * max_abs(y_));
}

double TanhRegressionObjective::loss(const Vector& theta) const {
  require_dimension(theta);
  const Vector z = x_.multiply(theta);
  double s = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double e = std::tanh(z[k]) - y_[k];
    s += e * e;
  }
  return 0.5 * s;
}

Vector TanhRegressionObjective::gradient(const Vector& theta) const {
  require_dimension(theta);
  Vector w = x_.multiply(theta);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double t = std::tanh(w[k]);
    w[k] = (t - y_[k]) * (1.0 - t * t);
  }
  return x_.transpose_multiply(w);
}

double TanhRegressionObjective::lipschitz_bound() const { return lipschitz_; }

// ---------------------------------------------------------------------------

AuxiliaryObjective::AuxiliaryObjective(const Vector& direction, double target, double weight)
    : v_(direction), c_(target), gamma_(weight) {
  if (v_.empty()) throw UsageError("auxiliary objective: empty direction");
  const double n = norm(v_);
  if (!(n > 0.0)) throw UsageError("auxiliary objective: zero direction");
  v_ *= 1.0 / n;
  if (!std::isfinite(c_)) throw UsageError("auxiliary objective: target must be finite");
  if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) {
    throw UsageError("auxiliary objective: weight must be finite and >= 0");
  }
}

double AuxiliaryObjective::loss(const Vector& theta) const {
  require_dimension(theta);
  const double r = dot(v_, theta) - c_;
  return 0.5 * r * r;
}

Vector AuxiliaryObjective::gradient(const Vector& theta) const {
  require_dimension(theta);
  return (dot(v_, theta) - c_) * v_;
}

// ---------------------------------------------------------------------------

CompositeObjective::CompositeObjective(std::shared_ptr<const Objective> base,
                                       std::shared_ptr<const VarianceRegularizer> variance,
                                       std::vector<AuxiliaryObjective> aux_terms)
    : base_(std::move(base)), variance_(std::move(variance)), aux_(std::move(aux_terms)) {
  if (!base_) throw UsageError("composite objective: missing base loss");
  for (const auto& term : aux_) {
    if (term.dimension() != base_->dimension()) {
      throw UsageError("composite objective: auxiliary term dimension mismatch");
    }
  }
  if (variance_) {
    if (dynamic_cast<const QuadraticObjective*>(base_.get()) == nullptr) {
      throw CapabilityError(
          "composite objective: the variance penalty requires a quadratic base loss");
    }
    if (variance_->capabilities().dimension() != base_->dimension()) {
      throw UsageError("composite objective: regularizer capability dimension mismatch");
    }
  }
}

double CompositeObjective::loss(const Vector& theta) const {
  double value = base_->loss(theta);
  if (variance_) value += variance_penalty(*variance_, *base_, theta).value;
  for (const auto& term : aux_) value += term.weight() * term.loss(theta);
  return value;
}

Vector CompositeObjective::gradient(const Vector& theta) const {
  Vector g = base_->gradient(theta);
  if (variance_) g += variance_penalty(*variance_, *base_, theta).gradient;
  for (const auto& term : aux_) g.axpy(term.weight(), term.gradient(theta));
  return g;
}

double CompositeObjective::lipschitz_bound() const {
  double l = base_->lipschitz_bound();
  if (variance_) {
    l += variance_penalty_lipschitz_bound(
        *variance_, dynamic_cast<const QuadraticObjective&>(*base_));
  }
  for (const auto& term : aux_) l += term.weight() * term.lipschitz_bound();
  return l;
}

}  // namespace jagged
