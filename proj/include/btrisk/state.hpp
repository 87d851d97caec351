#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "btrisk/random.hpp"

namespace btrisk {

enum class VariableCategory { fault, environment, monitor };

struct DiscreteDomain {
  std::vector<std::string> values;
  bool operator==(const DiscreteDomain&) const = default;
};

struct ContinuousDomain {
  double lower = 0.0;
  double upper = 1.0;
  bool operator==(const ContinuousDomain&) const = default;
};

/// One component of the state S = (F, e, m).
struct StateVariable {
  std::string name;
  VariableCategory category = VariableCategory::environment;
  std::variant<DiscreteDomain, ContinuousDomain> domain;

  bool is_discrete() const noexcept { return std::holds_alternative<DiscreteDomain>(domain); }
  const DiscreteDomain& discrete() const { return std::get<DiscreteDomain>(domain); }
  const ContinuousDomain& continuous() const { return std::get<ContinuousDomain>(domain); }

  /// Throws DomainError when the domain itself is malformed.
  void check() const;

  bool operator==(const StateVariable&) const = default;
};

/// A discrete label or a real number.
using StateValue = std::variant<std::string, double>;

/// Concrete snapshot assignment, variable name -> value.
using StateVector = std::map<std::string, StateValue>;

/// Throws DomainError if `value` is not admissible for `var`.
void check_value(const StateVariable& var, const StateValue& value);

/// Returns the variable named `name`, or nullptr.
const StateVariable* find_variable(const std::vector<StateVariable>& schema,
                                   const std::string& name);

std::string to_string(const StateValue& value);
std::string to_string(VariableCategory category);
std::optional<VariableCategory> parse_category(const std::string& text);

/// Per-variable marginal. Discrete: probability mass per label.
/// Continuous: uniform density over [lower, upper].
struct DiscreteMarginal {
  std::map<std::string, double> mass;
  bool operator==(const DiscreteMarginal&) const = default;
};

struct UniformMarginal {
  double lower = 0.0;
  double upper = 1.0;
  bool operator==(const UniformMarginal&) const = default;
};

using Marginal = std::variant<DiscreteMarginal, UniformMarginal>;

/// Joint prior as a product of independent marginals.
class StatePrior {
 public:
  StatePrior() = default;

  void set(const std::string& variable, Marginal marginal);
  const Marginal* find(const std::string& variable) const;
  const std::map<std::string, Marginal>& marginals() const noexcept { return marginals_; }

  /// Checks masses sum to 1 (1e-9), labels are in the domain, and uniform
  /// bounds lie inside the variable bounds.
  void check(const std::vector<StateVariable>& schema) const;

  /// Product of the marginal masses of the discrete assignments in `state`.
  /// Continuous variables contribute density 1/(upper-lower).
  double joint_probability(const StateVector& state) const;

  /// Draws every variable in `order` from `rng`, in that order.
  StateVector draw(const std::vector<std::string>& order, Rng& rng) const;

 private:
  std::map<std::string, Marginal> marginals_;
};

/// A degenerate prior putting all mass on `state` (discrete variables only).
StatePrior point_prior(const std::vector<StateVariable>& schema, const StateVector& state);

}  // namespace btrisk
