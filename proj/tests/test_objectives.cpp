#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "jagged/capabilities.hpp"
#include "jagged/errors.hpp"
#include "jagged/interventions.hpp"
#include "jagged/objectives.hpp"
#include "jagged/verifier.hpp"

using namespace jagged;

namespace {

Matrix random_matrix(SeededRng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

std::vector<Vector> samples(SeededRng& rng, std::size_t d, int n) {
  std::vector<Vector> out;
  for (int k = 0; k < n; ++k) out.push_back(gaussian_vector(rng, d));
  return out;
}

}  // namespace

TEST(Quadratic, ToyInstanceGradient) {
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {1, 1});
  const Vector g = q.gradient({0, 0});
  EXPECT_DOUBLE_EQ(g[0], -3.0);
  EXPECT_DOUBLE_EQ(g[1], -0.1);
  EXPECT_DOUBLE_EQ(q.loss({0, 0}), 1.0);
  EXPECT_NEAR(q.lipschitz_bound(), 9.0, 1e-9);
  EXPECT_THROW(q.gradient({1, 2, 3}), UsageError);
}

TEST(Quadratic, LipschitzIsLargestEigenvalue) {
  // A = [[1,1],[0,1]] -> A^T A = [[1,1],[1,2]], eigenvalues (3 +- sqrt 5)/2.
  QuadraticObjective q(Matrix::from_rows({{1, 1}, {0, 1}}), {0, 0});
  EXPECT_NEAR(q.lipschitz_bound(), (3 + std::sqrt(5.0)) / 2, 1e-9);
}

TEST(Mismatch, CombinesComponents) {
  auto p = std::make_shared<QuadraticObjective>(Matrix::diagonal({1, 0}), Vector{1, 0});
  auto s = std::make_shared<QuadraticObjective>(Matrix::diagonal({0, 1}), Vector{0, 1});
  MismatchObjective mix(p, s, 0.01);
  const Vector g = mix.gradient({0, 0});
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], -0.01);
  EXPECT_EQ(mix.as_mismatch(), &mix);
  EXPECT_THROW(MismatchObjective(p, s, 1.5), UsageError);
  EXPECT_THROW(MismatchObjective(p, s, -0.1), UsageError);
}

TEST(Auxiliary, LossAndGradient) {
  AuxiliaryObjective aux({0, 2}, 1.0, 3.0);
  EXPECT_DOUBLE_EQ(aux.direction()[1], 1.0);
  EXPECT_DOUBLE_EQ(aux.loss({0, 0.5}), 0.125);
  EXPECT_EQ(aux.gradient({0, 0.5}), (Vector{0, -0.5}));
  EXPECT_THROW(AuxiliaryObjective({0, 0}, 1.0, 1.0), UsageError);
  EXPECT_THROW(AuxiliaryObjective({1, 0}, 1.0, -1.0), UsageError);
}

TEST(Composite, SumsComponents) {
  auto base = std::make_shared<QuadraticObjective>(Matrix::diagonal({3, 0.1}), Vector{1, 1});
  std::vector<AuxiliaryObjective> aux{AuxiliaryObjective({0, 1}, 1.0, 2.0)};
  CompositeObjective c(base, nullptr, aux);
  const Vector theta{0.2, 0.3};
  const Vector expected = base->gradient(theta) + 2.0 * aux[0].gradient(theta);
  EXPECT_LE(norm(c.gradient(theta) - expected), 1e-15);
  EXPECT_DOUBLE_EQ(c.loss(theta), base->loss(theta) + 2.0 * aux[0].loss(theta));
  EXPECT_NEAR(c.lipschitz_bound(), 9.0 + 2.0, 1e-9);
}

TEST(Composite, VarianceTermNeedsQuadraticBase) {
  auto caps = std::make_shared<CapabilitySet>(std::vector<std::shared_ptr<const Capability>>{
      std::make_shared<LinearCapability>("a", Vector{1, 0}),
      std::make_shared<LinearCapability>("b", Vector{0, 1})});
  auto reg = std::make_shared<VarianceRegularizer>(1.0, caps);
  auto tanh = std::make_shared<TanhRegressionObjective>(Matrix::identity(2), Vector{0.1, 0.2});
  EXPECT_THROW(CompositeObjective(tanh, reg, {}), CapabilityError);
}

TEST(DefaultStep, HalfInverseLipschitz) {
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {1, 1});
  EXPECT_NEAR(default_step_size(q), 0.5 / 9.0, 1e-12);
}

// Gradient audits: every objective and capability type on 50 random instances.
TEST(GradientAudit, QuadraticIsExactToRoundoff) {
  SeededRng rng(101);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(1, 12));
    QuadraticObjective q(random_matrix(rng, d + 2, d), gaussian_vector(rng, d + 2));
    const auto xs = samples(rng, d, 3);
    EXPECT_LE(finite_difference_audit(oracle_of(q), xs), 1e-9);
  }
}

TEST(GradientAudit, TanhRegression) {
  SeededRng rng(102);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(1, 10));
    TanhRegressionObjective t(random_matrix(rng, 8, d), gaussian_vector(rng, 8));
    EXPECT_LE(finite_difference_audit(oracle_of(t), samples(rng, d, 3)), 1e-5);
  }
}

TEST(GradientAudit, ZeroFunction) {
  const GradientOracle zero{[](const Vector&) { return 0.0; },
                            [](const Vector& x) { return Vector::zeros(x.size()); }};
  const std::vector<Vector> xs{{1, 2}, {-3, 0.5}};
  EXPECT_EQ(finite_difference_audit(zero, xs), 0.0);
}

TEST(Tanh, LipschitzBoundDominatesHessianSamples) {
  SeededRng rng(103);
  for (int k = 0; k < 20; ++k) {
    const std::size_t d = 3;
    TanhRegressionObjective t(random_matrix(rng, 5, d), gaussian_vector(rng, 5));
    const double lb = t.lipschitz_bound();
    for (int s = 0; s < 20; ++s) {
      const Vector a = gaussian_vector(rng, d);
      const Vector b = a + 1e-3 * gaussian_vector(rng, d);
      EXPECT_LE(norm(t.gradient(a) - t.gradient(b)), lb * norm(a - b) * (1 + 1e-9));
    }
  }
}
