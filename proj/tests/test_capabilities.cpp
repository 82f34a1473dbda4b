#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "jagged/capabilities.hpp"
#include "jagged/errors.hpp"
#include "jagged/verifier.hpp"

using namespace jagged;

TEST(LinearCapability, NormalisesDirection) {
  LinearCapability c("u", {3, 4});
  EXPECT_NEAR(norm(c.direction()), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.value({1, 1}), 7.0 / 5.0);
  EXPECT_EQ(c.gradient({9, 9}), c.direction());
  EXPECT_EQ(c.lipschitz_constant(), 0.0);
  EXPECT_THROW(LinearCapability("z", {0, 0}), UsageError);
}

TEST(QuadraticCapability, ValueGradientLipschitz) {
  QuadraticCapability c("q", Matrix::from_rows({{2, 1}, {1, 2}}), {1, 0});
  EXPECT_DOUBLE_EQ(c.value({1, 1}), 0.5 * 6 + 1);
  EXPECT_EQ(c.gradient({1, 1}), (Vector{4, 3}));
  EXPECT_NEAR(c.lipschitz_constant(), 3.0, 1e-9);
  EXPECT_THROW(QuadraticCapability("bad", Matrix::from_rows({{1, 2}, {0, 1}}), {0, 0}), UsageError);
}

TEST(CapabilitySet, Validation) {
  using Ptr = std::shared_ptr<const Capability>;
  Ptr a = std::make_shared<LinearCapability>("a", Vector{1, 0});
  Ptr a2 = std::make_shared<LinearCapability>("a", Vector{0, 1});
  Ptr b3 = std::make_shared<LinearCapability>("b", Vector{0, 1, 0});
  EXPECT_THROW(CapabilitySet({}), UsageError);
  EXPECT_THROW(CapabilitySet({a, a2}), UsageError);
  EXPECT_THROW(CapabilitySet({a, b3}), UsageError);
  Ptr b = std::make_shared<LinearCapability>("b", Vector{0, 1});
  CapabilitySet s({a, b});
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.all_linear());
  EXPECT_EQ(s.names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(s.values({2, 3}), (Vector{2, 3}));
}

TEST(GradientAudit, CapabilityTypes) {
  SeededRng rng(201);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(1, 10));
    LinearCapability lin("l", gaussian_vector(rng, d) + Vector::filled(d, 1e-3));
    Matrix q(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j <= i; ++j) q(i, j) = q(j, i) = rng.normal();
    QuadraticCapability quad("q", q, gaussian_vector(rng, d));
    std::vector<Vector> xs{gaussian_vector(rng, d), gaussian_vector(rng, d)};
    EXPECT_LE(finite_difference_audit(oracle_of(lin), xs), 1e-9);
    EXPECT_LE(finite_difference_audit(oracle_of(quad), xs), 1e-8);
  }
}
