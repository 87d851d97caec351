#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "btrisk/conditional.hpp"
#include "btrisk/model.hpp"
#include "btrisk/state.hpp"

namespace btrisk {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Parses JSON text; syntax errors become ParseError with line and column.
json parse_json(std::string_view text, const std::string& source = "input");

// Model file (keys: hazard, severity_classes, state_schema, nodes,
// connections, functions). Structural malformation (wrong JSON types,
// unknown enum strings, duplicate variables) throws ParseError; graph-level
// problems are left to validate().
BowTie model_from_json(const json& doc);
json model_to_json(const BowTie& model);
BowTie parse_model(std::string_view text);
BowTie load_model(const std::filesystem::path& path);
std::string dump_model(const BowTie& model);

ConditionalFunction function_from_json(const json& j, const std::string& where);
json function_to_json(const ConditionalFunction& fn);

std::vector<StateVariable> schema_from_json(const json& j);
json schema_to_json(const std::vector<StateVariable>& schema);

StateValue value_from_json(const json& j, const StateVariable& var);
json value_to_json(const StateValue& v);
StateVector state_from_json(const json& j, const std::vector<StateVariable>& schema);
json state_to_json(const StateVector& state);

StatePrior prior_from_json(const json& j, const std::vector<StateVariable>& schema);
json prior_to_json(const StatePrior& prior);

}  // namespace btrisk
