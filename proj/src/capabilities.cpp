#include "jagged/capabilities.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "jagged/errors.hpp"

namespace jagged {

Capability::Capability(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw UsageError("capability name must not be empty");
}

void Capability::require_dimension(const Vector& theta) const {
  if (theta.size() != dimension()) {
    throw UsageError("capability '" + name() + "': expected dimension " +
                     std::to_string(dimension()) + ", got " + std::to_string(theta.size()));
  }
}

LinearCapability::LinearCapability(std::string name, const Vector& direction)
    : Capability(std::move(name)), u_(direction) {
  if (u_.empty()) throw UsageError("linear capability: empty direction");
  const double n = norm(u_);
  if (!(n > 0.0)) throw UsageError("linear capability '" + this->name() + "': zero direction");
  u_ *= 1.0 / n;
}

double LinearCapability::value(const Vector& theta) const {
  require_dimension(theta);
  return dot(u_, theta);
}

Vector LinearCapability::gradient(const Vector& theta) const {
  require_dimension(theta);
  return u_;
}

QuadraticCapability::QuadraticCapability(std::string name, Matrix q_matrix, Vector q_vector)
    : Capability(std::move(name)), q_matrix_(std::move(q_matrix)), q_vector_(std::move(q_vector)) {
  if (q_matrix_.rows() != q_matrix_.cols() || q_matrix_.rows() != q_vector_.size()) {
    throw UsageError("quadratic capability '" + this->name() + "': Q must be d x d with d = |q|");
  }
  if (!q_matrix_.is_symmetric()) {
    throw UsageError("quadratic capability '" + this->name() + "': Q must be symmetric");
  }
  lipschitz_ = spectral_norm(q_matrix_);
}

double QuadraticCapability::value(const Vector& theta) const {
  require_dimension(theta);
  return 0.5 * dot(theta, q_matrix_.multiply(theta)) + dot(q_vector_, theta);
}

Vector QuadraticCapability::gradient(const Vector& theta) const {
  require_dimension(theta);
  return q_matrix_.multiply(theta) + q_vector_;
}

CapabilitySet::CapabilitySet(std::vector<std::shared_ptr<const Capability>> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw UsageError("capability set: at least one capability required");
  if (members_.size() > kMaxMembers) {
    throw UsageError("capability set: at most " + std::to_string(kMaxMembers) +
                     " capabilities supported");
  }
  std::set<std::string> seen;
  for (const auto& c : members_) {
    if (!c) throw UsageError("capability set: null member");
    if (!seen.insert(c->name()).second) {
      throw UsageError("capability set: duplicate name '" + c->name() + "'");
    }
  }
  dimension_ = members_.front()->dimension();
  for (const auto& c : members_) {
    if (c->dimension() != dimension_) {
      throw UsageError("capability set: '" + c->name() + "' has dimension " +
                       std::to_string(c->dimension()) + ", expected " +
                       std::to_string(dimension_));
    }
  }
}

std::vector<std::string> CapabilitySet::names() const {
  std::vector<std::string> out;
  out.reserve(members_.size());
  for (const auto& c : members_) out.push_back(c->name());
  return out;
}

Vector CapabilitySet::values(const Vector& theta) const {
  Vector v = Vector::zeros(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = members_[i]->value(theta);
  return v;
}

std::vector<Vector> CapabilitySet::gradients(const Vector& theta) const {
  std::vector<Vector> out;
  out.reserve(size());
  for (const auto& c : members_) out.push_back(c->gradient(theta));
  return out;
}

Vector CapabilitySet::lipschitz_constants() const {
  Vector v = Vector::zeros(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = members_[i]->lipschitz_constant();
  return v;
}

double CapabilitySet::max_lipschitz() const noexcept {
  double l = 0.0;
  for (const auto& c : members_) l = std::max(l, c->lipschitz_constant());
  return l;
}

bool CapabilitySet::all_linear() const noexcept {
  return std::all_of(members_.begin(), members_.end(),
                     [](const auto& c) { return c->as_linear() != nullptr; });
}

}  // namespace jagged
