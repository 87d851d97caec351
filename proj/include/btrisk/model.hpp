#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "btrisk/conditional.hpp"
#include "btrisk/state.hpp"

namespace btrisk {

/// Severity class and its maximum acceptable rate (occurrences per minute).
/// The class named "None" always has an infinite acceptable rate.
struct SeverityClass {
  std::string name;
  double max_acceptable_rate = 0.0;
  bool operator==(const SeverityClass&) const = default;
};

enum class NodeType { event, barrier };

/// `intermediate` exists only so that invalid diagrams can be represented
/// and reported; a valid single-scope diagram never contains one.
enum class EventRole { threat, top, consequence, intermediate };

struct Node {
  std::string id;
  NodeType type = NodeType::event;
  std::string description;
  EventRole role = EventRole::threat;  // events only
  std::string severity;                // events only
  std::optional<ConditionalFunction> function;

  bool is_event() const noexcept { return type == NodeType::event; }
  bool is_barrier() const noexcept { return type == NodeType::barrier; }
  bool operator==(const Node&) const = default;
};

using Connection = std::pair<std::string, std::string>;

struct BowTie {
  std::string hazard;
  std::vector<SeverityClass> severity_classes;
  std::vector<StateVariable> state_schema;
  std::vector<Node> nodes;
  std::vector<Connection> connections;

  const Node* find_node(const std::string& id) const;
  const Node& node(const std::string& id) const;  // throws LookupError
  const SeverityClass* find_severity(const std::string& name) const;

  std::vector<std::string> threats() const;
  std::vector<std::string> consequences() const;
  std::vector<std::string> barriers() const;
  /// Id of the first node with role top; throws LookupError if none.
  const std::string& top_event() const;

  /// f_a(f_s(event)). +inf for the None class or an unknown class.
  double acceptable_rate(const std::string& event_id) const;

  /// Variables referenced by any conditional function, in schema order.
  std::vector<std::string> referenced_variables() const;

  bool operator==(const BowTie&) const = default;
};

enum class ViolationCode {
  CYCLE,
  TOP_COUNT,
  NO_THREAT,
  NO_CONSEQUENCE,
  INTERMEDIATE_EVENT,
  MISPLACED_BARRIER,
  BRANCHING,
  DANGLING_REF,
  MISSING_FUNCTION,
  UNDECLARED_VARIABLE,
  DISCONNECTED_EVENT,
  INVALID_FUNCTION,
  UNKNOWN_SEVERITY,
  DUPLICATE_ID,
};

std::string to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string detail;
};

/// Violations in code order; at most one entry per code, with every
/// offending element listed in `detail`. Empty means valid.
using ValidationReport = std::vector<Violation>;

ValidationReport validate(const BowTie& model);

/// Distinct codes in `report`, in report order.
std::vector<ViolationCode> codes(const ValidationReport& report);

/// Barriers on the path threat -> ... -> top, in path order.
std::vector<std::string> prevention_chain(const BowTie& model, const std::string& threat);

/// Barriers on the path top -> ... -> consequence, in path order.
std::vector<std::string> recovery_chain(const BowTie& model, const std::string& consequence);

/// The threat whose prevention chain contains `barrier`, or nullopt for a
/// recovery barrier. Throws LookupError if `barrier` is not a barrier.
std::optional<std::string> guarding_threat(const BowTie& model, const std::string& barrier);

/// The consequence whose recovery chain contains `barrier`, or nullopt.
std::optional<std::string> guarded_consequence(const BowTie& model, const std::string& barrier);

}  // namespace btrisk
