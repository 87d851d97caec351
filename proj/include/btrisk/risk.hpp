#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "btrisk/model.hpp"
#include "btrisk/state.hpp"

namespace btrisk {

/// rate * prod(1 - p_i): the rate surviving a chain of independent barriers.
double attenuate(double rate, std::span<const double> barrier_probs);

/// A validated bow tie with its chains resolved, for repeated evaluation.
/// Construction throws DomainError if validate() reports any violation.
class RiskEngine {
 public:
  explicit RiskEngine(BowTie model);

  const BowTie& model() const noexcept { return model_; }
  const std::vector<std::string>& consequences() const noexcept { return consequence_ids_; }
  const std::vector<std::string>& threats() const noexcept { return threat_ids_; }

  /// Rate of `threat` reaching the top event at `state`.
  double threat_contribution(const std::string& threat, const StateVector& state) const;
  double top_event_rate(const StateVector& state) const;
  double consequence_rate(const std::string& consequence, const StateVector& state) const;
  /// Consequence rates for every consequence, sharing one top-event rate.
  std::vector<double> consequence_rates(const StateVector& state) const;

 private:
  struct Chain {
    std::string head;  // threat id, or consequence id for recovery chains
    const ConditionalFunction* head_function = nullptr;
    std::vector<const ConditionalFunction*> barriers;
  };

  double survive(const Chain& chain, const StateVector& state) const;
  const Chain& find_chain(const std::vector<Chain>& chains, const std::string& id, const char* what) const;

  BowTie model_;
  std::vector<Chain> prevention_;
  std::vector<Chain> recovery_;
  std::vector<std::string> threat_ids_;
  std::vector<std::string> consequence_ids_;
};

double top_event_rate(const BowTie& model, const StateVector& state);
double consequence_rate(const BowTie& model, const std::string& consequence, const StateVector& state);

struct Exhaustive {};
struct MonteCarlo {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
};
using MarginalMode = std::variant<Exhaustive, MonteCarlo>;

struct MarginalResult {
  double rate = 0.0;
  double standard_error = 0.0;  // 0 for exhaustive
  std::size_t samples = 0;      // grid cells for exhaustive
  bool exact = false;
};

/// sum_s P(s) R(c | s). Exhaustive enumerates the grid of referenced
/// (discrete) variables; Monte-Carlo averages over prior draws, draw i
/// using stream i of the seed, evaluated in parallel.
MarginalResult marginal_consequence_rate(const RiskEngine& engine, const std::string& consequence,
                                         const StatePrior& prior, const MarginalMode& mode);
/// Sequential reference for the Monte-Carlo path; bit-identical results.
MarginalResult marginal_consequence_rate_serial(const RiskEngine& engine, const std::string& consequence,
                                                const StatePrior& prior, const MonteCarlo& mode);

/// 1 - exp(-rate * horizon)
double poisson_likelihood(double rate, double horizon_minutes);

/// Trailing mean over `window` samples, using the available prefix while
/// fewer than `window` samples have been seen.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

enum class Verdict { ok, violated };
std::string to_string(Verdict v);

struct RiskSample {
  double timestamp = 0.0;  // seconds
  std::string consequence;
  double raw_rate = 0.0;       // per minute
  double smoothed_rate = 0.0;  // per minute
  double likelihood = 0.0;     // over the horizon
  Verdict verdict = Verdict::ok;
};

struct SampleError {
  double timestamp = 0.0;
  std::string message;
};

struct RiskTrace {
  std::vector<RiskSample> samples;
  std::vector<SampleError> errors;

  /// Samples of one consequence, in time order.
  std::vector<RiskSample> for_consequence(const std::string& consequence) const;
};

/// Time-average of the raw rate over [t1, t2] (seconds) by the trapezoid
/// rule, interpolating linearly at the ends.
double average_rate(const RiskTrace& trace, double t1, double t2, const std::string& consequence);

/// Online assessor: one call per state sample, strictly increasing times.
class StreamAssessor {
 public:
  StreamAssessor(const RiskEngine& engine, std::size_t window, double horizon_minutes,
                 std::map<std::string, double> thresholds);

  /// Throws StreamError for a non-increasing timestamp; evaluation errors
  /// (incomplete state...) propagate and leave the smoothing windows intact.
  std::vector<RiskSample> push(double timestamp, const StateVector& state);

 private:
  const RiskEngine& engine_;
  std::size_t window_;
  double horizon_;
  std::map<std::string, double> thresholds_;
  std::vector<std::deque<double>> recent_;
  bool started_ = false;
  double last_time_ = 0.0;
};

/// Per-consequence thresholds f_a(f_s(c)) taken from the model.
std::map<std::string, double> model_thresholds(const BowTie& model);

using TimedState = std::pair<double, StateVector>;

RiskTrace assess_stream(const RiskEngine& engine, std::span<const TimedState> states, std::size_t window,
                        double horizon_minutes, const std::map<std::string, double>& thresholds);
RiskTrace assess_stream(const RiskEngine& engine, std::span<const TimedState> states, std::size_t window,
                        double horizon_minutes);

struct LikelihoodComparison {
  double dynamic_loglik = 0.0;
  double static_loglik = 0.0;
  double static_rate = 0.0;
  double ratio = 0.0;  // dynamic - static, log scale
  /// Scenes with predicted rate 0 but a nonzero count (dynamic loglik is -inf).
  std::size_t impossible_scenes = 0;
};

/// Poisson log-likelihood of per-scene counts under per-scene rates versus
/// the single posterior rate sum(k) / (n * exposure).
LikelihoodComparison loglik_compare(std::span<const double> rates, std::span<const std::uint64_t> counts,
                                    double exposure_minutes);

}  // namespace btrisk
