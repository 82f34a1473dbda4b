#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "jagged/capabilities.hpp"
#include "jagged/errors.hpp"
#include "jagged/objectives.hpp"
#include "jagged/telemetry.hpp"
#include "jagged/trainer.hpp"

using namespace jagged;

namespace {

std::shared_ptr<CapabilitySet> random_linear_set(SeededRng& rng, std::size_t d, std::size_t m) {
  std::vector<std::shared_ptr<const Capability>> caps;
  for (std::size_t i = 0; i < m; ++i) {
    caps.push_back(std::make_shared<LinearCapability>("c" + std::to_string(i),
                                                      gaussian_vector(rng, d)));
  }
  return std::make_shared<CapabilitySet>(caps);
}

}  // namespace

TEST(EnergyShares, Examples) {
  const Vector e = energy_shares({-3, -0.1});
  EXPECT_NEAR(e[0], 3 / 3.1, 1e-15);
  EXPECT_NEAR(e[1], 0.1 / 3.1, 1e-15);
  EXPECT_EQ(energy_shares({0, 0, 0}), Vector::filled(3, 1.0 / 3.0));
  EXPECT_EQ(energy_shares({1e-14, 0}), Vector::filled(2, 0.5));
  const Vector s = energy_shares({2, -2});
  EXPECT_EQ(s, (Vector{0.5, 0.5}));
}

TEST(EnergyShares, SimplexOnRandomInputs) {
  SeededRng rng(301);
  for (int k = 0; k < 500; ++k) {
    const Vector p = gaussian_vector(rng, static_cast<std::size_t>(rng.uniform_int(1, 16)));
    const Vector e = energy_shares(p);
    for (double v : e) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_NEAR(sum(e), 1.0, 1e-12);
  }
}

TEST(Jaggedness, PopulationVariance) {
  EXPECT_EQ(jaggedness({1, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(jaggedness({0, 2}), 1.0);
  EXPECT_DOUBLE_EQ(jaggedness({1, 2, 3, 4}), 1.25);
}

TEST(Coupling, SymmetricUnitDiagonalBounded) {
  SeededRng rng(302);
  for (int k = 0; k < 100; ++k) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, 6));
    std::vector<Vector> g;
    for (std::size_t i = 0; i < m; ++i) g.push_back(gaussian_vector(rng, 5));
    const Matrix kappa = coupling_matrix(g);
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_EQ(kappa(i, i), 1.0);
      for (std::size_t j = 0; j < m; ++j) {
        EXPECT_EQ(kappa(i, j), kappa(j, i));
        EXPECT_LE(std::abs(kappa(i, j)), 1.0);
      }
    }
  }
  const std::vector<Vector> g{{1, 0}, {0, 0}, {1, 1}};
  const Matrix kappa = coupling_matrix(g);
  EXPECT_EQ(kappa(0, 1), 0.0);
  EXPECT_NEAR(kappa(0, 2), 1 / std::sqrt(2.0), 1e-15);
}

TEST(Decompose, Cases) {
  SeededRng rng(303);
  auto caps = random_linear_set(rng, 4, 2);
  const Vector theta = gaussian_vector(rng, 4);
  const auto grads = caps->gradients(theta);
  auto r = decompose_gradient(*caps, theta, grads[0]);
  EXPECT_NEAR(r.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(r.coefficients[1], 0.0, 1e-12);
  EXPECT_LE(norm(r.residual), 1e-12);

  const Vector g = gaussian_vector(rng, 4);
  r = decompose_gradient(*caps, theta, g);
  Vector rebuilt = r.residual;
  rebuilt.axpy(r.coefficients[0], grads[0]);
  rebuilt.axpy(r.coefficients[1], grads[1]);
  EXPECT_LE(norm(rebuilt - g), 1e-9);

  auto axis = std::make_shared<CapabilitySet>(std::vector<std::shared_ptr<const Capability>>{
      std::make_shared<LinearCapability>("a", Vector{1, 0, 0})});
  r = decompose_gradient(*axis, {0, 0, 0}, {0, 2, 3});
  EXPECT_NEAR(r.coefficients[0], 0.0, 1e-15);
  EXPECT_EQ(r.residual, (Vector{0, 2, 3}));
}

TEST(PredictedGain, MatchesInSpanIdentity) {
  SeededRng rng(304);
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(2, 10));
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(d)));
    auto caps = random_linear_set(rng, d, m);
    const Vector theta = gaussian_vector(rng, d);
    const Vector g = gaussian_vector(rng, d);
    const double eta = rng.uniform(0.01, 1.0);
    const Vector pred = predicted_gain(*caps, theta, g, eta);
    const auto parts = decompose_gradient(*caps, theta, g);
    const auto grads = caps->gradients(theta);
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_NEAR(pred[i], -eta * dot(grads[i], g - parts.residual), 1e-10);
    }
  }
  // m = 1, g = a grad C_1.
  auto one = std::make_shared<CapabilitySet>(std::vector<std::shared_ptr<const Capability>>{
      std::make_shared<LinearCapability>("a", Vector{0.6, 0.8})});
  const Vector pred = predicted_gain(*one, {0, 0}, {1.2, 1.6}, 0.1);
  EXPECT_NEAR(pred[0], -0.1 * 2.0 * 1.0, 1e-15);
}

TEST(Cumulative, BudgetConservationAndExactGain) {
  SeededRng rng(305);
  for (int k = 0; k < 30; ++k) {
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(2, 8));
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(d)));
    Matrix a(d, d);
    for (std::size_t i = 0; i < d; ++i) a(i, i) = rng.uniform(0.1, 3.0);
    auto obj = std::make_shared<QuadraticObjective>(a, gaussian_vector(rng, d));
    auto caps = random_linear_set(rng, d, m);
    TrainerConfig cfg;
    cfg.horizon = 60;
    cfg.eta.eta0 = default_step_size(*obj);
    const Trace tr = run(cfg, *obj, *caps, Vector::zeros(d));
    const AllocationSummary s = cumulative(tr);
    EXPECT_NEAR(sum(s.weights), s.budget, 1e-9 * s.budget);
    EXPECT_NEAR(sum(s.cumulative_shares), 1.0, 1e-9);
    for (std::size_t i = 0; i < m; ++i) {
      double first_order = 0.0;
      for (const StepRecord& st : tr.steps) first_order -= st.eta * st.projections[i];
      EXPECT_NEAR(s.gains[i], first_order, 1e-9 * (1 + std::abs(s.gains[i])));
    }
  }
}

TEST(Prefix, UsesNextStepValues) {
  auto obj = std::make_shared<QuadraticObjective>(Matrix::diagonal({3, 0.1}), Vector{1, 1});
  auto caps = std::make_shared<CapabilitySet>(std::vector<std::shared_ptr<const Capability>>{
      std::make_shared<LinearCapability>("u", Vector{1, 0}),
      std::make_shared<LinearCapability>("v", Vector{0, 1})});
  TrainerConfig cfg;
  cfg.horizon = 10;
  cfg.eta.eta0 = 0.05;
  const Trace tr = run(cfg, *obj, *caps, {0, 0});
  const Trace p = prefix(tr, 4);
  EXPECT_EQ(p.horizon(), 4u);
  EXPECT_EQ(p.capability_values_final, tr.steps[4].capability_values);
  EXPECT_TRUE(p.theta_final.empty());
  EXPECT_THROW(prefix(tr, 11), UsageError);
  EXPECT_EQ(prefix(tr, 10).capability_values_final, tr.capability_values_final);
}
