#include <gtest/gtest.h>

#include <cmath>

#include "btrisk/errors.hpp"
#include "btrisk/evaluation.hpp"
#include "btrisk/io.hpp"
#include "btrisk/random.hpp"
#include "btrisk/trace_io.hpp"
#include "helpers.hpp"

using namespace btrisk;

TEST(LeastSquares, ExactLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  const auto fit = least_squares(x, y);
  ASSERT_TRUE(fit);
  EXPECT_NEAR(fit->slope, 2.0, 1e-12);
  EXPECT_NEAR(fit->intercept, 1.0, 1e-12);
  EXPECT_EQ(fit->points, 4u);
}

TEST(LeastSquares, Degenerate) {
  const std::vector<double> one{1.0}, flat{2, 2, 2}, y{1, 2, 3};
  EXPECT_FALSE(least_squares(one, one));
  EXPECT_FALSE(least_squares(flat, y));
  const std::vector<double> two_x{0, 1}, two_y{0.5, 2.5};
  const auto fit = least_squares(two_x, two_y);
  ASSERT_TRUE(fit);
  EXPECT_NEAR(fit->slope, 2.0, 1e-12);
}

TEST(Bins, PartitionRange) {
  std::vector<SceneOutcome> scenes;
  for (int i = 0; i <= 20; ++i) scenes.push_back({std::to_string(i), i * 0.05, static_cast<std::uint64_t>(i % 3)});
  const auto bins = bin_outcomes(scenes, 1.0, 0.25);
  std::size_t total = 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    total += bins[i].count;
    EXPECT_NEAR(bins[i].upper - bins[i].lower, 0.25, 1e-12);
    if (i) EXPECT_DOUBLE_EQ(bins[i].lower, bins[i - 1].upper);
  }
  EXPECT_EQ(total, scenes.size());
  EXPECT_LE(bins.front().lower, 0.0);
  EXPECT_GE(bins.back().upper, 1.0);
}

TEST(Bins, EmptyBinIsNaN) {
  const std::vector<SceneOutcome> scenes{{"a", 0.1, 0}, {"b", 0.9, 1}};
  const auto bins = bin_outcomes(scenes, 1.0, 0.25);
  ASSERT_EQ(bins.size(), 4u);
  EXPECT_TRUE(std::isnan(bins[1].mean_estimated));
  EXPECT_EQ(bins[3].count, 1u);
}

TEST(Evaluate, Errors) {
  EXPECT_THROW(evaluate_outcomes({}), DomainError);
  EXPECT_THROW(evaluate_outcomes({{"a", -1.0, 0}}), DomainError);
  EXPECT_THROW(evaluate_outcomes({{"a", 1.0, 0}}, 0.0), DomainError);
  EXPECT_THROW(evaluate_outcomes({{"a", 1.0, 0}}, 1.0, 0.0), DomainError);
  const std::vector<double> r{1.0, 2.0};
  const std::vector<std::uint64_t> k{1};
  EXPECT_THROW(pair_outcomes(r, k), DomainError);
}

TEST(Evaluate, CalibratedScenesHaveUnitSlope) {
  Rng rng(99, 0);
  std::vector<SceneOutcome> scenes;
  for (int i = 0; i < 500; ++i) {
    const double rate = rng.uniform(0.0, 3.0);
    scenes.push_back({std::to_string(i), rate, rng.poisson(rate * 10.0)});
  }
  const auto s = evaluate_outcomes(scenes, 10.0, 0.25, 1.0);
  ASSERT_TRUE(s.full_fit);
  EXPECT_GE(s.full_fit->slope, 0.8);
  EXPECT_LE(s.full_fit->slope, 1.2);
  ASSERT_TRUE(s.subset_fit);
  EXPECT_LT(s.subset_fit->points, 500u);
  EXPECT_GT(s.loglik.ratio, 0.0);
  for (auto fmt : {OutputFormat::text, OutputFormat::delimited}) EXPECT_FALSE(format_summary(s, fmt).empty());
  EXPECT_NE(format_summary(s, OutputFormat::delimited).find("# fits"), std::string::npos);
}

TEST(StateTraceIo, ParsesBooleansAndReportsProblems) {
  const BowTie m = test::chain_model({{"T", {"B"}}}, {{"C", {}}}, {test::boolean("f")});
  BowTie model = m;
  auto fn = test::constant_barrier(0.5);
  fn.factors.push_back(test::table("f", {{"0", 0.9}, {"1", 0.1}}));
  test::set_function(model, "B", fn);
  const auto t = parse_state_trace("timestamp,f,extra\n0,true,1\n1,0,2\n2,maybe,3\n", model);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(std::get<std::string>(t.rows[0].second.at("f")), "1");
  EXPECT_EQ(std::get<std::string>(t.rows[1].second.at("f")), "0");
  EXPECT_FALSE(t.rows[2].second.count("f"));
  EXPECT_GE(t.warnings.size(), 2u);
  try {
    parse_state_trace("timestamp,extra\n0,1\n", model);
    FAIL();
  } catch (const IncompleteStateError& e) {
    EXPECT_EQ(e.variable(), "f");
  }
  EXPECT_THROW(parse_state_trace("time,f\n0,1\n", model), ParseError);
}

TEST(StateTraceIo, RoundTrip) {
  const BowTie m = load_model(test::fixture("roadway.btd.json"));
  const auto t = load_state_trace(test::fixture("radar_fault_trace.csv"), m);
  EXPECT_EQ(t.rows.size(), 60u);
  EXPECT_TRUE(t.warnings.empty());
  const auto again = parse_state_trace(dump_state_trace(m.state_schema, t.rows), m);
  EXPECT_EQ(again.rows, t.rows);
}

TEST(RiskTraceIo, RoundTrip) {
  RiskTrace trace;
  trace.samples.push_back({0.0, "C1", 0.1, 0.1, 1 - std::exp(-0.1), Verdict::ok});
  trace.samples.push_back({0.5, "C1", 1.0 / 3.0, 0.2166, 0.3, Verdict::violated});
  const auto again = parse_risk_trace(dump_risk_trace(trace));
  ASSERT_EQ(again.samples.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(again.samples[i].timestamp, trace.samples[i].timestamp);
    EXPECT_EQ(again.samples[i].raw_rate, trace.samples[i].raw_rate);
    EXPECT_EQ(again.samples[i].likelihood, trace.samples[i].likelihood);
    EXPECT_EQ(again.samples[i].verdict, trace.samples[i].verdict);
  }
  EXPECT_THROW(parse_risk_trace("a,b\n1,2\n"), ParseError);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}
