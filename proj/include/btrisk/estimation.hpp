#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "btrisk/conditional.hpp"
#include "btrisk/episode.hpp"
#include "btrisk/model.hpp"

namespace btrisk {

/// Laplace's rule of succession for barrier success:
/// 1 - (failures + 1) / (encounters + 2).
double laplace_success(std::uint64_t encounters, std::uint64_t failures);

/// Encounters of one barrier within one episode.
struct EncounterTally {
  std::size_t episode = 0;
  std::uint64_t encounters = 0;
  std::uint64_t failures = 0;
};

/// Per-episode encounter counts for `barrier`.
///
/// If the log carries per-encounter barrier outcome records for the barrier,
/// those are counted directly. Otherwise the counts come from the event
/// totals: threat occurrences and top events for a prevention barrier, top
/// events and consequence occurrences for a recovery barrier; this requires
/// the barrier to be alone on its chain.
///
/// Prevention barriers require the log to be isolated to the threat that
/// the barrier guards (ProtocolError otherwise).
std::vector<EncounterTally> barrier_encounters(const EpisodeLog& log, const BowTie& model,
                                               const std::string& barrier);

struct DiscreteEstimate {
  Factor factor;  // TableForm
  std::map<std::string, std::uint64_t> encounters;
  std::map<std::string, std::uint64_t> failures;
};

DiscreteEstimate estimate_discrete_factor(const EpisodeLog& log, const BowTie& model, const std::string& barrier,
                                          const std::string& variable);

struct SigmoidOptions {
  double l2_penalty = 1e-4;
  double gradient_tolerance = 1e-8;
  int max_iterations = 500;
};

struct SigmoidFit {
  Factor factor;  // SigmoidForm
  double alpha = 0.0;
  double beta = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::uint64_t encounters = 0;
  /// Penalized log-likelihood at the start and after every accepted step.
  std::vector<double> objective_history;
};

/// Bernoulli maximum-likelihood fit of p(x) = 1/(1+exp(-(alpha x + beta)))
/// with a small L2 penalty on (alpha, beta), by damped Newton iterations.
/// Throws DegenerateDataError if fewer than two encounters or no variation
/// in the outcomes.
SigmoidFit fit_sigmoid_factor(const EpisodeLog& log, const BowTie& model, const std::string& barrier,
                              const std::string& variable, const SigmoidOptions& options = {});

/// Same fit on explicit (x, successes, failures) data.
struct WeightedOutcome {
  double x = 0.0;
  double successes = 0.0;
  double failures = 0.0;
};
SigmoidFit fit_sigmoid(const std::vector<WeightedOutcome>& data, const std::string& variable,
                       const SigmoidOptions& options = {});

struct ThreatRateEstimate {
  std::optional<std::string> variable;
  /// Occurrences per minute by value; nullopt where there is no exposure.
  std::map<std::string, std::optional<double>> rates;
  std::map<std::string, double> exposure;
  std::map<std::string, std::uint64_t> occurrences;
  /// Pooled over the whole log; nullopt for an empty log.
  std::optional<double> pooled_rate;
  double total_exposure = 0.0;

  /// TableForm factor; throws DomainError if any value lacks exposure.
  Factor to_factor() const;
};

/// Exposure-weighted occurrence rate, optionally split by a discrete variable.
ThreatRateEstimate estimate_threat_rate(const EpisodeLog& log, const BowTie& model, const std::string& threat,
                                        const std::optional<std::string>& variable);

struct PooledBase {};
using BaseSource = std::variant<PooledBase, double>;

/// Fits f_b for `barrier`: a Laplace table per discrete variable, a sigmoid
/// per continuous variable, and the base P(b) (pooled Laplace estimate by
/// default).
ConditionalFunction fit_barrier(const EpisodeLog& log, const BowTie& model, const std::string& barrier,
                                const std::vector<std::string>& variables, const BaseSource& base = PooledBase{},
                                FusionMode fusion = FusionMode::raw_clamped, const SigmoidOptions& options = {});

/// Fits f_e for `threat`: pooled base rate and one rate table per variable.
ConditionalFunction fit_threat(const EpisodeLog& log, const BowTie& model, const std::string& threat,
                               const std::vector<std::string>& variables);

}  // namespace btrisk
