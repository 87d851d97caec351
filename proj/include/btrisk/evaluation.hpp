#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "btrisk/risk.hpp"

namespace btrisk {

/// One scene: estimated average rate (per minute) against the observed count.
struct SceneOutcome {
  std::string scene_id;
  double estimated_rate = 0.0;
  std::uint64_t observed = 0;
};

/// Scenes with estimated rate in [lower, upper). The last bin is closed.
/// Means are NaN for an empty bin.
struct RateBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_estimated = 0.0;
  double mean_observed = 0.0;  // per minute of exposure
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept. nullopt with fewer than
/// two points or no spread in x.
std::optional<LinearFit> least_squares(std::span<const double> x, std::span<const double> y);

/// Bins of width `width` covering [min, max] of the estimated rates.
std::vector<RateBin> bin_outcomes(std::span<const SceneOutcome> scenes, double exposure_minutes, double width);

struct EvaluationSummary {
  std::vector<SceneOutcome> scenes;
  double exposure = 1.0;  // minutes per scene
  double bin_width = 0.25;
  double subset_max = 1.0;
  std::vector<RateBin> bins;
  /// Observed rate (count / exposure) against estimated rate.
  std::optional<LinearFit> full_fit;
  std::optional<LinearFit> subset_fit;  // scenes with estimated rate <= subset_max
  LikelihoodComparison loglik;
};

/// Throws DomainError for an empty input, a non-positive exposure or bin
/// width, or a negative or non-finite rate.
EvaluationSummary evaluate_outcomes(std::vector<SceneOutcome> scenes, double exposure_minutes = 1.0,
                                    double bin_width = 0.25, double subset_max = 1.0);

/// Pairs rates with counts; throws DomainError on a length mismatch.
std::vector<SceneOutcome> pair_outcomes(std::span<const double> rates, std::span<const std::uint64_t> counts);

enum class OutputFormat { text, delimited };

std::string format_summary(const EvaluationSummary& summary, OutputFormat format);

}  // namespace btrisk
