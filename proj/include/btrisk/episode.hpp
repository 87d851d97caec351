#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "btrisk/state.hpp"

namespace btrisk {

struct BarrierOutcome {
  std::string barrier;
  bool success = false;
  bool operator==(const BarrierOutcome&) const = default;
};

/// One scene: a constant state and the events counted during it.
struct Episode {
  std::string scene_id;
  double duration = 1.0;  // minutes
  StateVector state;
  std::map<std::string, std::uint64_t> threat_occurrences;
  std::uint64_t top_event_count = 0;
  std::map<std::string, std::uint64_t> consequence_counts;
  /// One record per barrier encounter, in the order the encounters happened.
  std::vector<BarrierOutcome> barrier_outcomes;

  bool operator==(const Episode&) const = default;
};

struct EpisodeLog {
  /// The single threat allowed to occur, when the log follows the
  /// isolation protocol.
  std::optional<std::string> isolate;
  std::string top_event = "TOP";
  std::vector<Episode> episodes;

  bool operator==(const EpisodeLog&) const = default;
};

/// Newline-delimited JSON: a header record then one record per episode.
std::string dump_log(const EpisodeLog& log);
/// Values in episode states are typed against `schema`; unknown variables,
/// negative counts and non-positive durations are parse errors.
EpisodeLog parse_log(std::string_view text, const std::vector<StateVariable>& schema);
EpisodeLog load_log(const std::filesystem::path& path, const std::vector<StateVariable>& schema);

/// Concatenates logs. The isolation flag survives only if all inputs agree.
EpisodeLog merge_logs(const std::vector<EpisodeLog>& logs);

}  // namespace btrisk
