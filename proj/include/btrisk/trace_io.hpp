#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "btrisk/model.hpp"
#include "btrisk/risk.hpp"

namespace btrisk {

/// Shortest text that parses back to the same double.
std::string format_number(double v);

/// State trace CSV: a `timestamp` column (seconds) followed by one column
/// per state variable. Booleans may be written 0/1 or true/false.
struct StateTrace {
  std::vector<TimedState> rows;
  /// Ignored columns and unreadable cells, which are left out of the state.
  std::vector<std::string> warnings;
};

/// Throws IncompleteStateError naming the first variable the model
/// references that has no column, ParseError for a malformed table.
StateTrace parse_state_trace(std::string_view csv, const BowTie& model);
StateTrace load_state_trace(const std::filesystem::path& path, const BowTie& model);

std::string dump_state_trace(const std::vector<StateVariable>& schema, const std::vector<TimedState>& rows);

/// Risk trace CSV: timestamp,consequence,raw_rate,smoothed_rate,likelihood,verdict
std::string dump_risk_trace(const RiskTrace& trace);
RiskTrace parse_risk_trace(std::string_view csv);
RiskTrace load_risk_trace(const std::filesystem::path& path);

}  // namespace btrisk
