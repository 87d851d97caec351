#include <gtest/gtest.h>

#include <cmath>

#include "btrisk/errors.hpp"
#include "btrisk/io.hpp"
#include "btrisk/risk.hpp"
#include "helpers.hpp"

using namespace btrisk;

namespace {

StateVector nominal_roadway(const char* radar = "0") {
  return {{"radar_fault", radar},  {"blur_left", "0"},      {"blur_center", "0"},      {"blur_right", "0"},
          {"occlusion_left", "0"}, {"occlusion_center", "0"}, {"occlusion_right", "0"}, {"lec_ood", 0.1},
          {"precipitation", 10.0}};
}

// Four-cell grid over (a, b) where R(C | a, b) = 0.1 + 0.1 a + 0.2 b.
BowTie grid_model() {
  BowTie m = test::chain_model({{"T1", {}}, {"T2", {}}}, {{"C", {}}}, {test::boolean("a"), test::boolean("b")});
  auto t1 = test::constant_rate(0.15);
  t1.factors.push_back(test::table("a", {{"0", 0.1}, {"1", 0.2}}));
  auto t2 = test::constant_rate(0.1);
  t2.factors.push_back(test::table("b", {{"0", 0.0}, {"1", 0.2}}));
  test::set_function(m, "T1", t1);
  test::set_function(m, "T2", t2);
  return m;
}

StatePrior uniform_grid_prior() {
  StatePrior p;
  p.set("a", DiscreteMarginal{{{"0", 0.5}, {"1", 0.5}}});
  p.set("b", DiscreteMarginal{{{"0", 0.5}, {"1", 0.5}}});
  return p;
}

}  // namespace

TEST(Attenuate, Examples) {
  const double half[] = {0.5, 0.5};
  const double one[] = {1.0};
  EXPECT_DOUBLE_EQ(attenuate(1.0, half), 0.25);
  EXPECT_EQ(attenuate(1.0, one), 0.0);
  EXPECT_EQ(attenuate(2.0, {}), 2.0);
}

TEST(Engine, TwoThreatComposition) {
  const RiskEngine e(test::two_threat_shape(1.0, 1.0, 0.9, 0.9, 0.75));
  EXPECT_NEAR(e.top_event_rate({}), 0.2, 1e-12);
  EXPECT_NEAR(e.consequence_rate("C1", {}), 0.05, 1e-12);
  EXPECT_EQ(RiskEngine(test::two_threat_shape(1, 1, 1, 1, 0.75)).top_event_rate({}), 0.0);
  EXPECT_EQ(RiskEngine(test::two_threat_shape(1, 1, 0.9, 0.9, 1.0)).consequence_rate("C1", {}), 0.0);
  EXPECT_EQ(top_event_rate(test::chain_model({{"T", {}}}, {{"C", {}}}), {}), 1.0);
}

TEST(Engine, RadarFaultDisablesRecovery) {
  const RiskEngine e(load_model(test::fixture("roadway.btd.json")));
  const auto s = nominal_roadway("1");
  EXPECT_EQ(e.consequence_rate("C1", s), e.top_event_rate(s));
  EXPECT_LT(e.consequence_rate("C1", nominal_roadway("0")), e.consequence_rate("C1", s));
}

TEST(Engine, RateAdditivity) {
  const RiskEngine e(load_model(test::fixture("roadway.btd.json")));
  const auto s = nominal_roadway();
  EXPECT_NEAR(e.top_event_rate(s), e.threat_contribution("T1", s) + e.threat_contribution("T2", s), 1e-15);
}

TEST(Engine, MonotoneSafety) {
  // Inserting a barrier anywhere never increases a consequence rate.
  for (double p : {0.01, 0.3, 0.99}) {
    const double before = RiskEngine(test::two_threat_shape(0.7, 1.3, 0.6, 0.8, 0.5)).consequence_rate("C1", {});
    BowTie m = test::chain_model({{"T1", {"B1", "BX"}}, {"T2", {"B2"}}}, {{"C1", {"B3", "BY"}}});
    for (auto [id, fn] : {std::pair{"T1", test::constant_rate(0.7)}, {"T2", test::constant_rate(1.3)},
                          {"B1", test::constant_barrier(0.6)}, {"B2", test::constant_barrier(0.8)},
                          {"B3", test::constant_barrier(0.5)}, {"BX", test::constant_barrier(p)},
                          {"BY", test::constant_barrier(0.0)}})
      test::set_function(m, id, fn);
    EXPECT_LT(RiskEngine(m).consequence_rate("C1", {}), before);
  }
}

TEST(Engine, InvalidModelAndErrors) {
  BowTie bad = test::two_threat_shape(1, 1, 0.9, 0.9, 0.75);
  bad.connections.emplace_back("C1", "T1");
  EXPECT_THROW(RiskEngine{bad}, DomainError);
  const RiskEngine e(load_model(test::fixture("roadway.btd.json")));
  EXPECT_THROW(e.consequence_rate("C1", {}), IncompleteStateError);
  EXPECT_THROW(e.consequence_rate("T1", nominal_roadway()), LookupError);
}

TEST(Marginal, PointPriorEqualsKnownState) {
  BowTie m = test::chain_model({{"T", {"B"}}}, {{"C", {}}}, {test::boolean("f")});
  auto b = test::constant_barrier(0.5);
  b.factors.push_back(test::table("f", {{"0", 0.9}, {"1", 0.2}}));
  test::set_function(m, "B", b);
  const RiskEngine e(m);
  const auto prior = point_prior(m.state_schema, {{"f", "1"}});
  EXPECT_DOUBLE_EQ(marginal_consequence_rate(e, "C", prior, Exhaustive{}).rate, e.consequence_rate("C", {{"f", "1"}}));
}

TEST(Marginal, GridMean) {
  const RiskEngine e(grid_model());
  EXPECT_NEAR(e.consequence_rate("C", {{"a", "0"}, {"b", "0"}}), 0.1, 1e-12);
  EXPECT_NEAR(e.consequence_rate("C", {{"a", "1"}, {"b", "1"}}), 0.4, 1e-12);
  const auto r = marginal_consequence_rate(e, "C", uniform_grid_prior(), Exhaustive{});
  EXPECT_NEAR(r.rate, 0.25, 1e-12);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.samples, 4u);
}

TEST(Marginal, MonteCarloAgreesWithExhaustive) {
  const RiskEngine e(grid_model());
  const auto exact = marginal_consequence_rate(e, "C", uniform_grid_prior(), Exhaustive{});
  const auto mc = marginal_consequence_rate(e, "C", uniform_grid_prior(), MonteCarlo{100000, 17});
  EXPECT_GT(mc.standard_error, 0.0);
  EXPECT_LE(std::abs(mc.rate - exact.rate), 3 * mc.standard_error);
}

TEST(Marginal, ParallelMatchesSerialBitForBit) {
  const RiskEngine e(load_model(test::fixture("roadway.btd.json")));
  StatePrior prior;
  for (const auto& v : e.model().state_schema) {
    if (v.is_discrete()) prior.set(v.name, DiscreteMarginal{{{"0", 0.7}, {"1", 0.3}}});
    else prior.set(v.name, UniformMarginal{v.continuous().lower, v.continuous().upper});
  }
  const MonteCarlo mode{5000, 99};
  const auto par = marginal_consequence_rate(e, "C1", prior, mode);
  const auto ser = marginal_consequence_rate_serial(e, "C1", prior, mode);
  EXPECT_EQ(par.rate, ser.rate);
  EXPECT_EQ(par.standard_error, ser.standard_error);
  EXPECT_THROW(marginal_consequence_rate(e, "C1", prior, Exhaustive{}), DomainError);
}

TEST(Poisson, Likelihood) {
  EXPECT_EQ(poisson_likelihood(0.0, 3.0), 0.0);
  EXPECT_NEAR(poisson_likelihood(std::log(2.0), 1.0), 0.5, 1e-12);
  EXPECT_NEAR(poisson_likelihood(0.829, 1.0), 0.5635, 5e-5);
  double prev = -1.0;
  for (int i = 0; i <= 200; ++i) {
    const double v = poisson_likelihood(i * 0.05, 1.0);
    EXPECT_GT(v, prev);
    EXPECT_LT(v, 1.0);
    prev = v;
  }
}

TEST(MovingAverage, Examples) {
  const std::vector<double> c(30, 0.4);
  EXPECT_EQ(moving_average(c, 20), c);
  const std::vector<double> v{3, 1, 4, 1, 5};
  EXPECT_EQ(moving_average(v, 1), v);
  const std::vector<double> two{0, 1};
  EXPECT_EQ(moving_average(two, 2), (std::vector<double>{0, 0.5}));
  EXPECT_THROW(moving_average(v, 0), DomainError);
  const std::vector<double> expected{3, 2, 8.0 / 3, 2, 10.0 / 3};
  const auto got = moving_average(v, 3);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_DOUBLE_EQ(got[i], expected[i]);
}

namespace {

RiskTrace trace_of(const std::vector<std::pair<double, double>>& points) {
  RiskTrace t;
  for (const auto& [time, rate] : points) t.samples.push_back({time, "C", rate, rate, 0.0, Verdict::ok});
  return t;
}

}  // namespace

TEST(AverageRate, Examples) {
  EXPECT_DOUBLE_EQ(average_rate(trace_of({{0, 0.3}, {5, 0.3}, {10, 0.3}}), 0, 10, "C"), 0.3);
  EXPECT_DOUBLE_EQ(average_rate(trace_of({{0, 0}, {10, 1}}), 0, 10, "C"), 0.5);
  EXPECT_DOUBLE_EQ(average_rate(trace_of({{0, 0}, {4, 0.4}, {10, 1}}), 0, 10, "C"), 0.5);
  EXPECT_DOUBLE_EQ(average_rate(trace_of({{0, 0}, {10, 1}}), 2, 4, "C"), 0.3);
  EXPECT_THROW(average_rate(trace_of({{0, 0}, {10, 1}}), 4, 4, "C"), DomainError);
  EXPECT_THROW(average_rate(trace_of({{0, 0}, {10, 1}}), 4, 12, "C"), DomainError);
}

TEST(AverageRate, StepConvergesWithSampling) {
  double err = 1.0;
  for (int n = 10; n <= 100000 && err > 1e-3; n *= 10) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= n; ++i) {
      const double t = 60.0 * i / n;
      pts.emplace_back(t, t < 30.0 ? 0.0 : 2.0);
    }
    err = std::abs(average_rate(trace_of(pts), 0, 60, "C") - 1.0);
  }
  EXPECT_LE(err, 1e-3);
}

TEST(Stream, NominalTraceIsOk) {
  const RiskEngine e(load_model(test::fixture("roadway.btd.json")));
  std::vector<TimedState> states;
  for (int i = 0; i < 50; ++i) states.emplace_back(i, nominal_roadway());
  const auto trace = assess_stream(e, states, 20, 1.0);
  ASSERT_EQ(trace.samples.size(), 50u);
  for (const auto& s : trace.samples) {
    EXPECT_EQ(s.verdict, Verdict::ok);
    EXPECT_EQ(s.smoothed_rate, trace.samples.front().smoothed_rate);
    EXPECT_GE(s.likelihood, 0.0);
    EXPECT_LT(s.likelihood, 1.0);
  }
}

TEST(Stream, FaultFlipRaisesSmoothedRate) {
  const RiskEngine e(load_model(test::fixture("roadway.btd.json")));
  std::vector<TimedState> states;
  for (int i = 0; i < 60; ++i) states.emplace_back(i, nominal_roadway(i >= 27 ? "1" : "0"));
  const std::size_t window = 20;
  const auto trace = assess_stream(e, states, window, 1.0);
  for (std::size_t i = 27; i < 27 + window; ++i)
    EXPECT_GT(trace.samples[i].smoothed_rate, trace.samples[i - 1].smoothed_rate) << "sample " << i;
  EXPECT_EQ(trace.samples[26].verdict, Verdict::ok);
  EXPECT_EQ(trace.samples.back().verdict, Verdict::violated);
}

TEST(Stream, EmptyOrderAndIncompleteState) {
  const RiskEngine e(load_model(test::fixture("roadway.btd.json")));
  EXPECT_TRUE(assess_stream(e, std::vector<TimedState>{}, 20, 1.0).samples.empty());

  std::vector<TimedState> out_of_order{{1.0, nominal_roadway()}, {1.0, nominal_roadway()}};
  EXPECT_THROW(assess_stream(e, out_of_order, 20, 1.0), StreamError);

  auto partial = nominal_roadway();
  partial.erase("lec_ood");
  std::vector<TimedState> gaps{{0.0, nominal_roadway()}, {1.0, partial}, {2.0, nominal_roadway()}};
  const auto trace = assess_stream(e, gaps, 20, 1.0);
  EXPECT_EQ(trace.samples.size(), 2u);
  ASSERT_EQ(trace.errors.size(), 1u);
  EXPECT_EQ(trace.errors[0].timestamp, 1.0);
  EXPECT_NE(trace.errors[0].message.find("lec_ood"), std::string::npos);
}

TEST(Stream, StrictThreshold) {
  const RiskEngine e(test::two_threat_shape(1.0, 1.0, 0.9, 0.9, 0.75));
  const std::vector<TimedState> states{{0.0, {}}};
  EXPECT_EQ(assess_stream(e, states, 1, 1.0, {{"C1", 0.05}}).samples[0].verdict, Verdict::ok);
  EXPECT_EQ(assess_stream(e, states, 1, 1.0, {{"C1", 0.0499}}).samples[0].verdict, Verdict::violated);
}

TEST(Loglik, IdenticalScenesGiveZeroRatio) {
  // Every scene predicted at the pooled rate: both models coincide.
  const std::vector<double> rates(10, 2.0);
  const std::vector<std::uint64_t> counts{2, 1, 3, 2, 0, 4, 2, 2, 1, 3};
  const auto r = loglik_compare(rates, counts, 1.0);
  EXPECT_NEAR(r.ratio, 0.0, 1e-12);
  EXPECT_NEAR(r.static_rate, 2.0, 1e-12);
}

TEST(Loglik, TwoScenes) {
  const std::vector<double> rates{0.1, 2.0};
  const std::vector<std::uint64_t> counts{0, 2};
  const auto r = loglik_compare(rates, counts, 1.0);
  // Hand evaluation of both sums.
  const double dynamic = -0.1 + (2 * std::log(2.0) - 2.0 - std::log(2.0));
  const double stat = 2 * (-1.0) + (2 * std::log(1.0) - std::log(2.0));
  EXPECT_NEAR(r.dynamic_loglik, dynamic, 1e-12);
  EXPECT_NEAR(r.static_loglik, stat, 1e-12);
  EXPECT_GT(r.dynamic_loglik, r.static_loglik);
}

TEST(Loglik, ImpossibleScene) {
  const std::vector<double> rates{0.0, 1.0};
  const std::vector<std::uint64_t> counts{1, 1};
  const auto r = loglik_compare(rates, counts, 1.0);
  EXPECT_EQ(r.impossible_scenes, 1u);
  EXPECT_TRUE(std::isinf(r.dynamic_loglik));
  EXPECT_THROW(loglik_compare(rates, std::vector<std::uint64_t>{1}, 1.0), DomainError);
}
