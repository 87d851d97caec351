#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "btrisk/conditional.hpp"
#include "btrisk/episode.hpp"
#include "btrisk/io.hpp"
#include "btrisk/model.hpp"
#include "btrisk/sdl.hpp"
#include "btrisk/state.hpp"

namespace btrisk {

/// Explicit value per combination of discrete labels, in `variables` order.
struct JointTable {
  std::vector<std::string> variables;
  std::map<std::vector<std::string>, double> values;
};

using TruthFunction = std::variant<ConditionalFunction, JointTable>;

/// Per-scene states from SDL samples: variable -> "entity.field".
struct SdlSampler {
  sdl::SceneModel scene;
  std::map<std::string, std::string> mapping;
};

using StateSampler = std::variant<StatePrior, SdlSampler>;

enum class OccurrenceModel { poisson, once_per_scene };

struct GroundTruth {
  std::vector<StateVariable> schema;
  StateSampler sampler;
  std::map<std::string, TruthFunction> threats;   // rate per minute
  std::map<std::string, TruthFunction> barriers;  // success probability
  double duration = 1.0;                          // minutes per scene
  OccurrenceModel occurrence = OccurrenceModel::poisson;
};

/// Throws DomainError for a missing table entry or a non-discrete value.
double evaluate_truth(const TruthFunction& fn, FunctionKind kind, const StateVector& state);

/// Draws the state of scene `index`.
StateVector draw_state(const GroundTruth& truth, std::uint64_t seed, std::uint64_t index);

/// Simulates `episodes` scenes. Episode i uses stream i of `seed`, so the
/// result does not depend on the thread count. Throws LookupError if
/// `isolate` is not a threat of `model`, DomainError if the model is invalid
/// or the truth does not cover its threats, barriers and variables.
EpisodeLog run_episodes(const GroundTruth& truth, const BowTie& model, std::size_t episodes, std::uint64_t seed,
                        const std::optional<std::string>& isolate = std::nullopt);
/// Sequential reference for run_episodes().
EpisodeLog run_episodes_serial(const GroundTruth& truth, const BowTie& model, std::size_t episodes,
                               std::uint64_t seed, const std::optional<std::string>& isolate = std::nullopt);

struct EventRate {
  double rate = 0.0;            // per minute
  double standard_error = 0.0;  // sqrt(count) / minutes
  std::uint64_t count = 0;
  /// One-sided 95% upper bound: -ln(0.05) / minutes when count is 0,
  /// rate + 1.96 se otherwise.
  double upper_bound_95 = 0.0;
};

struct BarrierTally {
  std::uint64_t encounters = 0;
  std::uint64_t failures = 0;
  double failure_fraction() const { return encounters ? static_cast<double>(failures) / encounters : 0.0; }
};

struct EmpiricalSummary {
  double exposure = 0.0;  // minutes
  std::map<std::string, EventRate> events;
  std::map<std::string, BarrierTally> barriers;
};

/// Throws DomainError for an empty log.
EmpiricalSummary empirical_rates(const EpisodeLog& log);

/// Ground-truth file (JSON): schema, state_sampler, threats, barriers,
/// occurrence_model, duration. `base_dir` resolves `sdl_file` paths.
GroundTruth truth_from_json(const json& doc, const std::filesystem::path& base_dir = {});
GroundTruth load_truth(const std::filesystem::path& path);

}  // namespace btrisk
