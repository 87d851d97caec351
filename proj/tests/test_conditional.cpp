#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "btrisk/conditional.hpp"
#include "btrisk/errors.hpp"
#include "btrisk/random.hpp"
#include "helpers.hpp"

using namespace btrisk;

namespace {

ConditionalFunction barrier_with(double base, std::vector<double> ps, FusionMode mode) {
  auto fn = test::constant_barrier(base);
  fn.fusion = mode;
  for (std::size_t i = 0; i < ps.size(); ++i)
    fn.factors.push_back(test::table("s" + std::to_string(i), {{"0", ps[i]}, {"1", ps[i]}}));
  return fn;
}

StateVector zeros(std::size_t n) {
  StateVector s;
  for (std::size_t i = 0; i < n; ++i) s["s" + std::to_string(i)] = std::string("0");
  return s;
}

}  // namespace

TEST(Barrier, SingleFactorIgnoresBase) {
  for (double base : {0.0, 0.1, 0.5, 1.0})
    for (auto mode : {FusionMode::raw_clamped, FusionMode::normalized})
      EXPECT_EQ(evaluate_barrier(barrier_with(base, {0.8}, mode), zeros(1)), 0.8);
}

TEST(Barrier, NoFactorsGivesBase) { EXPECT_EQ(evaluate_barrier(test::constant_barrier(0.37), {}), 0.37); }

TEST(Barrier, RawProductIsClamped) {
  EXPECT_DOUBLE_EQ(evaluate_barrier(barrier_with(0.5, {0.8, 0.8}, FusionMode::raw_clamped), zeros(2)), 1.0);
}

TEST(Barrier, NormalizedArithmetic) {
  EXPECT_NEAR(evaluate_barrier(barrier_with(0.5, {0.8, 0.8}, FusionMode::normalized), zeros(2)), 1.28 / 1.36, 1e-12);
}

// Exhaustive joint over (b, s1, s2) with s1, s2 independent given b:
// P(b) = 0.5, P(s=1 | b) = 0.8, P(s=1 | not b) = 0.2. The fused value from the
// single-variable conditionals must equal P(b | s1=1, s2=1) of the joint.
TEST(Barrier, NormalizedMatchesJointTable) {
  const double pb = 0.5;
  auto p_s = [](int s, int b) { return s ? (b ? 0.8 : 0.2) : (b ? 0.2 : 0.8); };
  double joint[2][2][2];
  for (int b = 0; b < 2; ++b)
    for (int s1 = 0; s1 < 2; ++s1)
      for (int s2 = 0; s2 < 2; ++s2) joint[b][s1][s2] = (b ? pb : 1 - pb) * p_s(s1, b) * p_s(s2, b);

  auto conditional = [&](int var, int value) {
    double num = 0.0, den = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
          if ((var == 1 ? s1 : s2) != value) continue;
          den += joint[b][s1][s2];
          if (b) num += joint[b][s1][s2];
        }
    return num / den;
  };
  const double truth = joint[1][1][1] / (joint[1][1][1] + joint[0][1][1]);

  auto fn = test::constant_barrier(pb);
  fn.fusion = FusionMode::normalized;
  fn.factors.push_back(test::table("s1", {{"0", conditional(1, 0)}, {"1", conditional(1, 1)}}));
  fn.factors.push_back(test::table("s2", {{"0", conditional(2, 0)}, {"1", conditional(2, 1)}}));
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2) {
      const double cell = joint[1][s1][s2] / (joint[1][s1][s2] + joint[0][s1][s2]);
      EXPECT_NEAR(evaluate_barrier(fn, {{"s1", std::to_string(s1)}, {"s2", std::to_string(s2)}}), cell, 1e-12);
    }
  EXPECT_NEAR(truth, 0.941176, 1e-6);
}

TEST(Barrier, NormalizedEqualsRawWhenConsistent) {
  // s0 carries no information about b (P(b|s0) = P(b)), so q1 + q0 = 1.
  for (double p : {0.1, 0.4, 0.7, 0.95}) {
    const double raw = evaluate_barrier(barrier_with(0.6, {0.6, p}, FusionMode::raw_clamped), zeros(2));
    const double norm = evaluate_barrier(barrier_with(0.6, {0.6, p}, FusionMode::normalized), zeros(2));
    EXPECT_NEAR(raw, p, 1e-12);
    EXPECT_NEAR(norm, raw, 1e-12);
  }
}

TEST(Barrier, Errors) {
  EXPECT_THROW(evaluate_barrier(barrier_with(0.5, {0.8}, FusionMode::raw_clamped), {}), IncompleteStateError);
  EXPECT_THROW(evaluate_barrier(barrier_with(1.0, {0.8, 0.8}, FusionMode::raw_clamped), zeros(2)), DomainError);
  EXPECT_THROW(evaluate_barrier(barrier_with(0.0, {0.8, 0.8}, FusionMode::normalized), zeros(2)), DomainError);
  EXPECT_THROW(evaluate_barrier(test::constant_rate(1.0), {}), DomainError);
}

TEST(Barrier, IncompleteStateNamesVariable) {
  try {
    evaluate_barrier(barrier_with(0.5, {0.8, 0.7}, FusionMode::raw_clamped), {{"s0", std::string("0")}});
    FAIL();
  } catch (const IncompleteStateError& e) {
    EXPECT_EQ(e.variable(), "s1");
  }
}

TEST(ThreatRate, Examples) {
  EXPECT_EQ(evaluate_threat_rate(test::constant_rate(1.0), {}), 1.0);

  auto one = test::constant_rate(0.7);
  one.factors.push_back(test::table("weather", {{"rain", 2.0}, {"clear", 0.5}}));
  EXPECT_EQ(evaluate_threat_rate(one, {{"weather", "rain"}}), 2.0);

  auto two = test::constant_rate(1.0);
  two.factors.push_back(test::table("a", {{"x", 2.0}}));
  two.factors.push_back(test::table("b", {{"y", 3.0}}));
  EXPECT_DOUBLE_EQ(evaluate_threat_rate(two, {{"a", "x"}, {"b", "y"}}), 6.0);

  two.base = 0.0;
  EXPECT_THROW(evaluate_threat_rate(two, {{"a", "x"}, {"b", "y"}}), DomainError);
}

TEST(Factors, SigmoidMonotoneWithSignOfAlpha) {
  for (double alpha : {-4.0, 2.5}) {
    const Factor f{"x", SigmoidForm{alpha, 1.0}};
    double prev = evaluate_factor(f, FunctionKind::barrier_probability, {{"x", 0.0}});
    for (int i = 1; i <= 100; ++i) {
      const double v = evaluate_factor(f, FunctionKind::barrier_probability, {{"x", i / 100.0}});
      if (alpha > 0) EXPECT_GT(v, prev);
      else EXPECT_LT(v, prev);
      prev = v;
    }
  }
  EXPECT_NEAR(evaluate_factor({"x", SigmoidForm{-4.0, 3.0}}, FunctionKind::barrier_probability, {{"x", 0.75}}), 0.5,
              1e-15);
}

TEST(Factors, ClampedLinear) {
  const Factor f{"p", ClampedLinearForm{-0.01, 0.9}};
  EXPECT_NEAR(evaluate_factor(f, FunctionKind::barrier_probability, {{"p", 10.0}}), 0.8, 1e-12);
  EXPECT_EQ(evaluate_factor(f, FunctionKind::barrier_probability, {{"p", 100.0}}), 0.0);
  const Factor g{"p", ClampedLinearForm{0.05, 0.9}};
  EXPECT_EQ(evaluate_factor(g, FunctionKind::barrier_probability, {{"p", 100.0}}), 1.0);
  EXPECT_NEAR(evaluate_factor(g, FunctionKind::threat_rate, {{"p", 100.0}}), 5.9, 1e-12);
}

TEST(Fuzz, BoundsPermutationAndIdentity) {
  Rng rng(2024, 0);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto m = static_cast<std::size_t>(rng.uniform_int(1, 7));
    const double base = rng.uniform(0.01, 0.99);
    std::vector<double> ps(m);
    for (auto& p : ps) p = rng.uniform();
    const auto state = zeros(m);
    for (auto mode : {FusionMode::raw_clamped, FusionMode::normalized}) {
      const double v = evaluate_barrier(barrier_with(base, ps, mode), state);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      if (m == 1) ASSERT_EQ(v, ps[0]);
      auto rotated = ps;
      std::rotate(rotated.begin(), rotated.begin() + 1, rotated.end());
      std::reverse(rotated.begin(), rotated.end());
      ASSERT_NEAR(evaluate_barrier(barrier_with(base, rotated, mode), state), v, 1e-12);
    }
    auto rate = test::constant_rate(rng.uniform(0.1, 3.0));
    for (std::size_t i = 0; i < m; ++i)
      rate.factors.push_back(test::table("s" + std::to_string(i), {{"0", rng.uniform(0.0, 5.0)}}));
    ASSERT_GE(evaluate_threat_rate(rate, state), 0.0);
  }
}

TEST(CheckFunction, ReportsProblems) {
  const std::vector<StateVariable> schema{test::boolean("f"),
                                          {"x", VariableCategory::monitor, ContinuousDomain{0.0, 1.0}}};
  auto fn = test::constant_barrier(0.5);
  fn.factors.push_back(test::table("f", {{"0", 0.5}, {"1", 0.5}}));
  EXPECT_TRUE(check_function(fn, schema).undeclared.empty());
  EXPECT_TRUE(check_function(fn, schema).invalid.empty());
  fn.factors.push_back({"x", TableForm{{{"0", 0.5}}}});
  fn.factors.push_back({"wind", SigmoidForm{1, 0}});
  const auto p = check_function(fn, schema);
  EXPECT_EQ(p.undeclared.size(), 1u);
  EXPECT_FALSE(p.invalid.empty());
}
