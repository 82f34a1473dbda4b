#pragma once

// Training losses with exact gradients. All losses are deterministic
// full-batch sums.

#include <cstddef>
#include <memory>
#include <vector>

#include "jagged/numerics.hpp"

namespace jagged {

class MismatchObjective;
class VarianceRegularizer;

class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const noexcept = 0;
  virtual double loss(const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& theta) const = 0;
  /// Upper bound on the Lipschitz constant of the gradient.
  virtual double lipschitz_bound() const = 0;

  /// Non-null when the loss is a proxy/structural mixture, so the trainer can
  /// record per-component alignments.
  virtual const MismatchObjective* as_mismatch() const noexcept { return nullptr; }

 protected:
  void require_dimension(const Vector& theta) const;
};

/// L(theta) = 0.5 ||A theta - b||^2.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix a, Vector b);

  const Matrix& a() const noexcept { return a_; }
  const Vector& b() const noexcept { return b_; }
  /// A^T A, cached.
  const Matrix& hessian() const noexcept { return hessian_; }

  std::size_t dimension() const noexcept override { return a_.cols(); }
  double loss(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  /// Largest eigenvalue of A^T A.
  double lipschitz_bound() const override { return lipschitz_; }

 private:
  Matrix a_;
  Vector b_;
  Matrix hessian_;
  Vector atb_;
  double lipschitz_;
};

/// L = L_prox + epsilon * L_struct.
class MismatchObjective final : public Objective {
 public:
  MismatchObjective(std::shared_ptr<const QuadraticObjective> prox,
                    std::shared_ptr<const QuadraticObjective> structural, double epsilon);

  const QuadraticObjective& prox() const noexcept { return *prox_; }
  const QuadraticObjective& structural() const noexcept { return *struct_; }
  double epsilon() const noexcept { return epsilon_; }

  std::size_t dimension() const noexcept override { return prox_->dimension(); }
  double loss(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  double lipschitz_bound() const override;
  const MismatchObjective* as_mismatch() const noexcept override { return this; }

 private:
  std::shared_ptr<const QuadraticObjective> prox_;
  std::shared_ptr<const QuadraticObjective> struct_;
  double epsilon_;
};

/// L(theta) = 0.5 sum_k (tanh(x_k . theta) - y_k)^2 over the rows x_k of X.
class TanhRegressionObjective final : public Objective {
 public:
  TanhRegressionObjective(Matrix x, Vector y);

  std::size_t dimension() const noexcept override { return x_.cols(); }
  double loss(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  /// ||X||^2 (1 + 2 max|y_k|): the scalar second derivative of each summand
  /// is bounded by 1 + 2|y_k| in absolute value.
  double lipschitz_bound() const override;

 private:
  Matrix x_;
  Vector y_;
  double lipschitz_;
};

/// L_aux(theta) = 0.5 (v . theta - c)^2 with unit v. The weight gamma is
/// applied by CompositeObjective, `loss` and `gradient` are unweighted.
class AuxiliaryObjective final : public Objective {
 public:
  AuxiliaryObjective(const Vector& direction, double target, double weight);

  const Vector& direction() const noexcept { return v_; }
  double target() const noexcept { return c_; }
  double weight() const noexcept { return gamma_; }

  std::size_t dimension() const noexcept override { return v_.size(); }
  double loss(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  double lipschitz_bound() const override { return 1.0; }

 private:
  Vector v_;
  double c_;
  double gamma_;
};

/// L_tot = L_base + lambda Var(E(theta)) + sum_k gamma_k L_k^aux.
class CompositeObjective final : public Objective {
 public:
  CompositeObjective(std::shared_ptr<const Objective> base,
                     std::shared_ptr<const VarianceRegularizer> variance,
                     std::vector<AuxiliaryObjective> aux_terms);

  const Objective& base() const noexcept { return *base_; }
  const VarianceRegularizer* variance_term() const noexcept { return variance_.get(); }
  const std::vector<AuxiliaryObjective>& aux_terms() const noexcept { return aux_; }

  std::size_t dimension() const noexcept override { return base_->dimension(); }
  double loss(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  double lipschitz_bound() const override;

 private:
  std::shared_ptr<const Objective> base_;
  std::shared_ptr<const VarianceRegularizer> variance_;
  std::vector<AuxiliaryObjective> aux_;
};

/// 0.5 / lipschitz_bound, the step size used when none is configured.
double default_step_size(const Objective& objective);

}  // namespace jagged
