#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "jagged/capabilities.hpp"
#include "jagged/errors.hpp"
#include "jagged/interventions.hpp"
#include "jagged/objectives.hpp"
#include "jagged/telemetry.hpp"
#include "jagged/verifier.hpp"

using namespace jagged;

namespace {

using CapPtr = std::shared_ptr<const Capability>;

std::shared_ptr<CapabilitySet> axis_set() {
  return std::make_shared<CapabilitySet>(std::vector<CapPtr>{
      std::make_shared<LinearCapability>("u", Vector{1, 0}),
      std::make_shared<LinearCapability>("v", Vector{0, 1})});
}

std::shared_ptr<CapabilitySet> random_linear_set(SeededRng& rng, std::size_t d, std::size_t m) {
  std::vector<CapPtr> caps;
  for (std::size_t i = 0; i < m; ++i) {
    caps.push_back(std::make_shared<LinearCapability>("c" + std::to_string(i), gaussian_vector(rng, d)));
  }
  return std::make_shared<CapabilitySet>(caps);
}

std::shared_ptr<QuadraticObjective> random_quadratic(SeededRng& rng, std::size_t d) {
  Matrix a(d + 1, d);
  for (std::size_t i = 0; i < d + 1; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.normal();
  return std::make_shared<QuadraticObjective>(a, gaussian_vector(rng, d + 1));
}

}  // namespace

TEST(VariancePenalty, SymmetricInstanceIsFlat) {
  auto caps = axis_set();
  QuadraticObjective q(Matrix::identity(2), {1, 1});
  VarianceRegularizer reg(1.0, caps);
  const PenaltyValue p = variance_penalty(reg, q, {0, 0});
  EXPECT_EQ(p.value, 0.0);
  EXPECT_LE(norm(p.gradient), 1e-15);
}

TEST(VariancePenalty, ZeroLambda) {
  auto caps = axis_set();
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {1, 1});
  VarianceRegularizer reg(0.0, caps);
  const PenaltyValue p = variance_penalty(reg, q, {0.3, -0.2});
  EXPECT_EQ(p.value, 0.0);
  EXPECT_EQ(norm(p.gradient), 0.0);
}

TEST(VariancePenalty, UnsupportedFamilies) {
  auto caps = axis_set();
  TanhRegressionObjective t(Matrix::identity(2), {0.1, 0.2});
  VarianceRegularizer reg(1.0, caps);
  EXPECT_THROW(variance_penalty(reg, t, {0, 0}), CapabilityError);
  auto quad_caps = std::make_shared<CapabilitySet>(std::vector<CapPtr>{
      std::make_shared<QuadraticCapability>("q", Matrix::identity(2), Vector{1, 0})});
  QuadraticObjective q(Matrix::identity(2), {1, 1});
  VarianceRegularizer reg2(1.0, quad_caps);
  EXPECT_THROW(variance_penalty(reg2, q, {0, 0}), CapabilityError);
  EXPECT_THROW(VarianceRegularizer(-1.0, caps), UsageError);
  EXPECT_THROW(VarianceRegularizer(1.0, caps, 0.0), UsageError);
}

TEST(VariancePenalty, GradientMatchesCentralDifferences) {
  SeededRng rng(401);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(2, 8));
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(d)));
    auto obj = random_quadratic(rng, d);
    auto caps = random_linear_set(rng, d, m);
    VarianceRegularizer reg(rng.uniform(0.1, 3.0), caps, 0.05);
    const GradientOracle oracle{
        [&](const Vector& x) { return variance_penalty(reg, *obj, x).value; },
        [&](const Vector& x) { return variance_penalty(reg, *obj, x).gradient; }};
    const std::vector<Vector> xs{gaussian_vector(rng, d)};
    EXPECT_LE(finite_difference_audit(oracle, xs), 1e-5);
  }
}

TEST(VariancePenalty, PermutationInvariant) {
  SeededRng rng(402);
  auto obj = random_quadratic(rng, 4);
  std::vector<CapPtr> members;
  for (int i = 0; i < 3; ++i) {
    members.push_back(std::make_shared<LinearCapability>("c" + std::to_string(i), gaussian_vector(rng, 4)));
  }
  std::vector<CapPtr> swapped{members[2], members[0], members[1]};
  VarianceRegularizer a(1.0, std::make_shared<CapabilitySet>(members));
  VarianceRegularizer b(1.0, std::make_shared<CapabilitySet>(swapped));
  const Vector x = gaussian_vector(rng, 4);
  EXPECT_NEAR(variance_penalty(a, *obj, x).value, variance_penalty(b, *obj, x).value, 1e-15);
}

TEST(VariancePenalty, LambdaRaisesCompositeLoss) {
  auto caps = axis_set();
  auto base = std::make_shared<QuadraticObjective>(Matrix::diagonal({3, 0.1}), Vector{1, 1});
  const Vector x{0.1, 0.2};
  double previous = -1.0;
  for (double lambda : {0.0, 0.5, 1.0, 2.0}) {
    CompositeObjective c(base, std::make_shared<VarianceRegularizer>(lambda, caps), {});
    const double l = c.loss(x);
    EXPECT_GT(l, previous);
    previous = l;
  }
}

TEST(VariancePenalty, LipschitzBoundHoldsOnSamples) {
  SeededRng rng(403);
  for (int k = 0; k < 20; ++k) {
    const std::size_t d = 3;
    auto obj = random_quadratic(rng, d);
    auto caps = random_linear_set(rng, d, 2);
    VarianceRegularizer reg(1.0, caps, 0.05);
    const double bound = variance_penalty_lipschitz_bound(reg, *obj);
    for (int s = 0; s < 50; ++s) {
      const Vector a = 0.3 * gaussian_vector(rng, d);
      const Vector b = a + 1e-3 * gaussian_vector(rng, d);
      const double lhs = norm(variance_penalty(reg, *obj, a).gradient - variance_penalty(reg, *obj, b).gradient);
      EXPECT_LE(lhs, bound * norm(a - b));
    }
  }
}

TEST(Stationarity, Definitions) {
  auto caps = axis_set();
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {1, 1});
  VarianceRegularizer none(0.0, caps);
  const Vector minimiser{1.0 / 3.0, 10.0};
  EXPECT_LE(stationarity_residual(none, q, minimiser), 1e-12);
  EXPECT_TRUE(is_stationary(none, q, minimiser));
  auto base = std::make_shared<QuadraticObjective>(q);
  auto reg = std::make_shared<VarianceRegularizer>(1.0, caps);
  CompositeObjective c(base, reg, {});
  const Vector x{0.2, -0.4};
  EXPECT_NEAR(stationarity_residual(*reg, q, x), norm(c.gradient(x)), 1e-12);
}

TEST(Governance, PolicyValidation) {
  EXPECT_THROW(GovernancePolicy({1, 1}, {0.6, 0.6}), UsageError);
  EXPECT_THROW(GovernancePolicy({0.4, 0.4}, {0, 0}), UsageError);
  EXPECT_THROW(GovernancePolicy({0.5, 1}, {0.6, 0}), UsageError);
  EXPECT_THROW(GovernancePolicy({1.5, 1}, {0, 0}), UsageError);
  EXPECT_THROW(GovernancePolicy({1, 1}, {0, 0}, 0), UsageError);
  EXPECT_NO_THROW(GovernancePolicy({0.6, 1}, {0, 0}));
}

TEST(Governance, IdentityPolicyIsBitwiseIdentity) {
  SeededRng rng(404);
  for (int k = 0; k < 50; ++k) {
    auto caps = random_linear_set(rng, 5, 3);
    const Vector theta = gaussian_vector(rng, 5);
    const Vector g = gaussian_vector(rng, 5);
    const GovernanceResult r = apply_governance(GovernancePolicy::unconstrained(3), *caps, theta, g);
    EXPECT_EQ(r.controlled_gradient, g);
    EXPECT_EQ(r.iterations, 0u);
  }
}

TEST(Governance, TwoCapabilityCap) {
  auto caps = axis_set();
  const Vector g{-3, -0.1};
  GovernancePolicy policy({0.6, 1}, {0, 0});
  const GovernanceResult r = apply_governance(policy, *caps, {0, 0}, g);
  EXPECT_NEAR(r.achieved_shares[0], 0.6, 1e-6);
  EXPECT_NEAR(r.achieved_shares[1], 0.4, 1e-6);
  // Recompute shares from the controlled direction independently.
  const double p0 = std::abs(r.controlled_gradient[0]);
  const double p1 = std::abs(r.controlled_gradient[1]);
  EXPECT_NEAR(p0 / (p0 + p1), 0.6, 1e-6);
  EXPECT_LT(r.controlled_gradient[0], 0.0);
  EXPECT_LT(r.controlled_gradient[1], 0.0);
}

TEST(Governance, RandomPoliciesConvergeAndKeepResidual) {
  SeededRng rng(405);
  int converged = 0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(3, 10));
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(2, std::min<std::int64_t>(5, static_cast<std::int64_t>(d) - 1)));
    auto caps = random_linear_set(rng, d, m);
    const Vector theta = gaussian_vector(rng, d);
    const Vector g = gaussian_vector(rng, d);
    Vector hi = Vector::filled(m, 1.0);
    Vector lo = Vector::zeros(m);
    hi[0] = rng.uniform(1.0 / static_cast<double>(m), 0.9);
    lo[m - 1] = rng.uniform(0.0, 1.0 / static_cast<double>(m));
    GovernancePolicy policy(hi, lo);
    try {
      const GovernanceResult r = apply_governance(policy, *caps, theta, g);
      ++converged;
      EXPECT_TRUE(policy.admits(r.achieved_shares));
      EXPECT_LE(r.achieved_shares[0], hi[0] + 1e-6);
      EXPECT_GE(r.achieved_shares[m - 1], lo[m - 1] - 1e-6);
      const auto before = decompose_gradient(*caps, theta, g);
      const auto after = decompose_gradient(*caps, theta, r.controlled_gradient);
      EXPECT_LE(norm(after.residual - before.residual), 1e-9 * (1 + norm(before.residual)));
    } catch (const ConvergenceError& e) {
      ADD_FAILURE() << "case " << k << " shares " << e.last_shares()[0] << " " << e.last_shares()[m - 1]
                    << " hi " << hi[0] << " lo " << lo[m - 1] << " m " << m;
    }
  }
  EXPECT_EQ(converged, 200);
}

TEST(Governance, SilentCoordinateIsLifted) {
  auto caps = axis_set();
  GovernancePolicy policy({1, 1}, {0, 0.3});
  const GovernanceResult r = apply_governance(policy, *caps, {0, 0}, {-2, 0});
  EXPECT_NEAR(r.achieved_shares[1], 0.3, 1e-6);
  EXPECT_LT(r.controlled_gradient[1], 0.0);
}

TEST(Governance, UnreachableSharesRaiseConvergenceError) {
  // A zero step cannot be redistributed: shares stay uniform.
  auto caps = axis_set();
  GovernancePolicy policy({0.3, 1}, {0, 0}, 5);
  try {
    apply_governance(policy, *caps, {0, 0}, {0, 0});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().size(), 2u);
    EXPECT_EQ(e.last_shares().size(), 2u);
  }
}

TEST(Governance, TargetsAreWaterFilling) {
  GovernancePolicy policy({0.5, 1, 1}, {0, 0.2, 0});
  const Vector t = governance_targets(policy, {0.8, 0.05, 0.15});
  EXPECT_NEAR(sum(t), 1.0, 1e-12);
  EXPECT_NEAR(t[0], 0.5, 1e-12);
  EXPECT_NEAR(t[1], 0.2, 1e-12);
  EXPECT_NEAR(t[2], 0.3, 1e-12);
}

TEST(UnderinvestmentCap, Examples) {
  EXPECT_NEAR(underinvestment_cap(0.01, 0.01, 1, 0.1), 0.002, 1e-15);
  EXPECT_DOUBLE_EQ(underinvestment_cap(0.2, 0.0, 5.0, 0.1), 0.1 * 0.2);
  EXPECT_EQ(underinvestment_cap(0, 0.3, 0, 0.1), 0.0);
  EXPECT_THROW(underinvestment_cap(-1, 0, 0, 0.1), UsageError);
}
