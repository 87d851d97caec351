#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

// Scenario description language.
//
//   scene     := "scene" IDENT "{" (type_decl | entity_decl)* instance? "}"
//   type_decl := "type" IDENT
//   entity    := "entity" IDENT "{" (IDENT ":" IDENT)* "}"
//   instance  := "instance" "{" (IDENT "." IDENT "=" value)* "}"
//   value     := NUMBER | STRING | "[" value ("," value)* "]"
//              | IDENT "(" (IDENT "=" value ("," IDENT "=" value)*)? ")"
//
// `#` starts a line comment. Entities named `uniform` and `choice` are
// distribution entities: a field whose type is one of them is sampled.
// uniform(low=, high=) is integer-valued (both bounds inclusive) when both
// of its declared fields are `int`, real-valued on [low, high) otherwise.
// choice(values=[...]) picks one listed scalar uniformly.

namespace btrisk::sdl {

struct Value {
  enum class Kind { integer, real, string, list, call };

  Kind kind = Kind::integer;
  std::int64_t integer = 0;
  double real = 0.0;
  std::string text;  // string literal, or the callee of a call
  std::vector<Value> items;
  std::vector<std::pair<std::string, Value>> args;

  static Value make_integer(std::int64_t v);
  static Value make_real(double v);
  static Value make_string(std::string v);

  bool is_number() const noexcept { return kind == Kind::integer || kind == Kind::real; }
  double number() const noexcept { return kind == Kind::integer ? static_cast<double>(integer) : real; }
  const Value* arg(const std::string& name) const;

  bool operator==(const Value&) const = default;
};

struct FieldDecl {
  std::string name;
  std::string type;
  bool operator==(const FieldDecl&) const = default;
};

struct EntityDecl {
  std::string name;
  std::vector<FieldDecl> fields;

  const FieldDecl* field(const std::string& n) const;
  bool operator==(const EntityDecl&) const = default;
};

struct Assignment {
  std::string entity;
  std::string field;
  Value value;
  bool operator==(const Assignment&) const = default;
};

struct SceneModel {
  std::string name;
  std::vector<std::string> types;
  std::vector<EntityDecl> entities;
  bool has_instance = false;
  std::vector<Assignment> instance;

  const EntityDecl* entity(const std::string& n) const;
  bool operator==(const SceneModel&) const = default;
};

bool is_distribution_entity(const std::string& name);

/// Parses and checks a scene. Throws ParseError with line and column.
SceneModel parse(std::string_view source);

/// Canonical source text; parse(print(m)) == m.
std::string print(const SceneModel& model);

using ConfigValue = std::variant<std::int64_t, double, std::string>;

struct SceneConfig {
  std::string model_name;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::map<std::string, ConfigValue> values;  // "entity.field" -> value

  bool operator==(const SceneConfig&) const = default;
};

/// Sample `index` of the run with `seed`. Independent of how many samples
/// the run draws. Throws DomainError for incomplete models or bad bounds.
SceneConfig sample_one(const SceneModel& model, std::uint64_t seed, std::uint64_t index);

/// `count` samples, generated in parallel by index.
std::vector<SceneConfig> sample(const SceneModel& model, std::size_t count, std::uint64_t seed);
/// Sequential reference for sample().
std::vector<SceneConfig> sample_serial(const SceneModel& model, std::size_t count, std::uint64_t seed);

/// One JSON record (no trailing newline).
std::string to_json_line(const SceneConfig& config);

}  // namespace btrisk::sdl
