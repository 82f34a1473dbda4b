#pragma once

// Capability functionals: the coordinate system that every allocation
// measurement is reported in.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "jagged/numerics.hpp"

namespace jagged {

class LinearCapability;

class Capability {
 public:
  virtual ~Capability() = default;

  const std::string& name() const noexcept { return name_; }
  virtual std::size_t dimension() const noexcept = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& theta) const = 0;
  /// Lipschitz constant of the gradient.
  virtual double lipschitz_constant() const noexcept = 0;

  virtual const LinearCapability* as_linear() const noexcept { return nullptr; }

 protected:
  explicit Capability(std::string name);
  void require_dimension(const Vector& theta) const;

 private:
  std::string name_;
};

/// C(theta) = u . theta with ||u|| = 1. The direction is normalised on
/// construction; a zero direction is rejected.
class LinearCapability final : public Capability {
 public:
  LinearCapability(std::string name, const Vector& direction);

  const Vector& direction() const noexcept { return u_; }

  std::size_t dimension() const noexcept override { return u_.size(); }
  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  double lipschitz_constant() const noexcept override { return 0.0; }
  const LinearCapability* as_linear() const noexcept override { return this; }

 private:
  Vector u_;
};

/// C(theta) = 0.5 theta^T Q theta + q . theta with symmetric Q.
class QuadraticCapability final : public Capability {
 public:
  QuadraticCapability(std::string name, Matrix q_matrix, Vector q_vector);

  const Matrix& curvature() const noexcept { return q_matrix_; }
  const Vector& linear_term() const noexcept { return q_vector_; }

  std::size_t dimension() const noexcept override { return q_vector_.size(); }
  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  /// Spectral norm of Q, computed once at construction.
  double lipschitz_constant() const noexcept override { return lipschitz_; }

 private:
  Matrix q_matrix_;
  Vector q_vector_;
  double lipschitz_;
};

/// Ordered, named, dimension-consistent collection of capabilities.
class CapabilitySet {
 public:
  static constexpr std::size_t kMaxMembers = 64;

  explicit CapabilitySet(std::vector<std::shared_ptr<const Capability>> members);

  std::size_t size() const noexcept { return members_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const Capability& operator[](std::size_t i) const { return *members_[i]; }
  const std::vector<std::shared_ptr<const Capability>>& members() const noexcept {
    return members_;
  }

  std::vector<std::string> names() const;
  Vector values(const Vector& theta) const;
  std::vector<Vector> gradients(const Vector& theta) const;
  Vector lipschitz_constants() const;
  double max_lipschitz() const noexcept;
  bool all_linear() const noexcept;

 private:
  std::vector<std::shared_ptr<const Capability>> members_;
  std::size_t dimension_ = 0;
};

}  // namespace jagged
