#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "jagged/capabilities.hpp"
#include "jagged/errors.hpp"
#include "jagged/objectives.hpp"
#include "jagged/trainer.hpp"

using namespace jagged;

namespace {

using CapPtr = std::shared_ptr<const Capability>;

CapabilitySet axis_set() {
  return CapabilitySet({std::make_shared<LinearCapability>("u", Vector{1, 0}),
                        std::make_shared<LinearCapability>("v", Vector{0, 1})});
}

TrainerConfig constant(double eta, std::size_t horizon) {
  TrainerConfig cfg;
  cfg.horizon = horizon;
  cfg.eta.eta0 = eta;
  return cfg;
}

class Exploding final : public Objective {
 public:
  std::size_t dimension() const noexcept override { return 2; }
  double loss(const Vector&) const override { return 0.0; }
  Vector gradient(const Vector& theta) const override {
    Vector g = Vector::zeros(2);
    if (theta[0] > 0.5) g[0] = std::numeric_limits<double>::quiet_NaN();
    else g[0] = -1.0;
    return g;
  }
  double lipschitz_bound() const override { return 1.0; }
};

}  // namespace

TEST(Step, ToyInstanceByHand) {
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {1, 1});
  const CapabilitySet caps = axis_set();
  const StepResult r = step(constant(0.05, 1), {Vector{0, 0}, 0}, q, caps);
  // g = A^T (A 0 - b) = (-3, -0.1), theta_1 = -eta g.
  EXPECT_DOUBLE_EQ(r.next.theta[0], 0.15);
  EXPECT_DOUBLE_EQ(r.next.theta[1], 0.005);
  EXPECT_EQ(r.next.t, 1u);
  EXPECT_NEAR(r.record.shares[0], 3 / 3.1, 1e-15);
  EXPECT_DOUBLE_EQ(r.record.projections[0], -3.0);
  EXPECT_FALSE(r.record.flagged);
}

TEST(Step, ZeroGradientLeavesThetaAndGivesUniformShares) {
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {0, 0});
  const CapabilitySet caps = axis_set();
  const StepResult r = step(constant(0.05, 1), {Vector{0, 0}, 0}, q, caps);
  EXPECT_EQ(r.next.theta, (Vector{0, 0}));
  EXPECT_EQ(r.record.shares, (Vector{0.5, 0.5}));
}

TEST(Step, IdentityGovernanceIsBitwiseEqual) {
  QuadraticObjective q(Matrix::from_rows({{2, 0.3}, {0.1, 0.5}}), {1, -1});
  const CapabilitySet caps = axis_set();
  TrainerConfig plain = constant(0.05, 50);
  TrainerConfig governed = plain;
  governed.governance = GovernancePolicy::unconstrained(2);
  const Trace a = run(plain, q, caps, {0.1, 0.2});
  const Trace b = run(governed, q, caps, {0.1, 0.2});
  EXPECT_EQ(a.theta_final, b.theta_final);
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    EXPECT_EQ(a.steps[t].capability_values, b.steps[t].capability_values);
    EXPECT_EQ(a.steps[t].projections, b.steps[t].projections);
  }
}

TEST(Step, NonFiniteGradientAborts) {
  Exploding obj;
  const CapabilitySet caps = axis_set();
  try {
    run(constant(0.3, 10), obj, caps, {0, 0});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 2u);
    EXPECT_NEAR(e.theta()[0], 0.6, 1e-15);
  }
}

TEST(Run, SingleStepMatchesStep) {
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {1, 1});
  const CapabilitySet caps = axis_set();
  const Trace tr = run(constant(0.05, 1), q, caps, {0, 0});
  const StepResult r = step(constant(0.05, 1), {Vector{0, 0}, 0}, q, caps);
  EXPECT_EQ(tr.theta_final, r.next.theta);
  EXPECT_DOUBLE_EQ(tr.theta_final[1], 0.005);
  EXPECT_EQ(tr.horizon(), 1u);
}

TEST(Run, UpdateIdentityAndMonotoneLoss) {
  SeededRng rng(501);
  for (int k = 0; k < 20; ++k) {
    const std::size_t d = 4;
    Matrix a(5, d);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.normal();
    QuadraticObjective q(a, gaussian_vector(rng, 5));
    const CapabilitySet caps({std::make_shared<LinearCapability>("a", gaussian_vector(rng, d)),
                              std::make_shared<LinearCapability>("b", gaussian_vector(rng, d))});
    TrainerState state{gaussian_vector(rng, d), 0};
    const TrainerConfig cfg = constant(1.0 / q.lipschitz_bound(), 100);
    for (int t = 0; t < 100; ++t) {
      const Vector g = q.gradient(state.theta);
      const StepResult r = step(cfg, state, q, caps);
      EXPECT_EQ(r.next.theta, state.theta - cfg.eta.eta0 * g);
      EXPECT_LE(q.loss(r.next.theta), q.loss(state.theta) * (1 + 1e-15) + 1e-300);
      state = r.next;
    }
  }
}

TEST(Run, Deterministic) {
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {2, 0.02});
  const CapabilitySet caps = axis_set();
  const Trace a = run(constant(0.05, 200), q, caps, {0, 0});
  const Trace b = run(constant(0.05, 200), q, caps, {0, 0});
  EXPECT_EQ(a.theta_final, b.theta_final);
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    EXPECT_EQ(a.steps[t].projections, b.steps[t].projections);
  }
}

TEST(Run, ToyAnisotropicInstanceConcentrates) {
  QuadraticObjective q(Matrix::diagonal({3, 0.1}), {2, 0.02});
  const CapabilitySet caps = axis_set();
  const AllocationSummary s = cumulative(run(constant(0.05, 200), q, caps, {0, 0}));
  EXPECT_GT(s.cumulative_shares[0], 0.9);
  EXPECT_LT(s.cumulative_shares[1], 0.1);
  EXPECT_GT(s.jaggedness, 0.05);
}

TEST(Run, FlagsAssumptionViolations) {
  // The capability points against the loss gradient's descent direction.
  QuadraticObjective q(Matrix::identity(2), {1, 0});
  const CapabilitySet caps({std::make_shared<LinearCapability>("anti", Vector{-1, 0})});
  const Trace tr = run(constant(0.1, 5), q, caps, {0, 0});
  EXPECT_EQ(flagged_step_count(tr), 5u);
}

TEST(Run, MismatchAlignmentsAndCouplingCadence) {
  auto p = std::make_shared<QuadraticObjective>(Matrix::diagonal({1, 0}), Vector{1, 0});
  auto s = std::make_shared<QuadraticObjective>(Matrix::diagonal({0, 1}), Vector{0, 1});
  MismatchObjective mix(p, s, 0.01);
  const CapabilitySet caps = axis_set();
  TrainerConfig cfg = constant(0.1, 6);
  cfg.record_coupling_every = 3;
  const Trace tr = run(cfg, mix, caps, {0, 0});
  ASSERT_TRUE(tr.steps[0].prox_alignment.has_value());
  EXPECT_DOUBLE_EQ((*tr.steps[0].prox_alignment)[0], 1.0);
  EXPECT_DOUBLE_EQ((*tr.steps[0].struct_alignment)[1], 1.0);
  EXPECT_TRUE(tr.steps[0].coupling.has_value());
  EXPECT_FALSE(tr.steps[1].coupling.has_value());
  EXPECT_TRUE(tr.steps[3].coupling.has_value());
}

TEST(Config, Validation) {
  TrainerConfig cfg;
  cfg.eta.eta0 = 0.1;
  cfg.horizon = 0;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg.horizon = TrainerConfig::kMaxHorizon + 1;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg.horizon = 10;
  cfg.eta.decay = 1.5;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg.eta.decay = 0.5;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.eta.at(2), 0.025);
  cfg.eta.eta0 = 0;
  EXPECT_THROW(cfg.validate(), UsageError);
}
