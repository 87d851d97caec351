#include "btrisk/state.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "btrisk/errors.hpp"

namespace btrisk {

void StateVariable::check() const {
  if (name.empty()) throw DomainError("state variable with empty name");
  if (is_discrete()) {
    const auto& values = discrete().values;
    if (values.empty()) throw DomainError("variable '" + name + "': empty discrete domain");
    std::set<std::string> seen(values.begin(), values.end());
    if (seen.size() != values.size())
      throw DomainError("variable '" + name + "': duplicate discrete values");
  } else {
    const auto& c = continuous();
    if (!std::isfinite(c.lower) || !std::isfinite(c.upper) || !(c.lower < c.upper))
      throw DomainError("variable '" + name + "': continuous bounds must be finite with lower < upper");
  }
}

void check_value(const StateVariable& var, const StateValue& value) {
  if (var.is_discrete()) {
    const auto* label = std::get_if<std::string>(&value);
    if (!label) throw DomainError("variable '" + var.name + "' expects a discrete label");
    const auto& values = var.discrete().values;
    for (const auto& v : values)
      if (v == *label) return;
    throw DomainError("variable '" + var.name + "': value '" + *label + "' not in domain");
  }
  const auto* x = std::get_if<double>(&value);
  if (!x) throw DomainError("variable '" + var.name + "' expects a real value");
  const auto& c = var.continuous();
  if (!(*x >= c.lower && *x <= c.upper))
    throw DomainError("variable '" + var.name + "': value " + to_string(value) + " outside [" +
                      to_string(StateValue{c.lower}) + ", " + to_string(StateValue{c.upper}) + "]");
}

const StateVariable* find_variable(const std::vector<StateVariable>& schema,
                                   const std::string& name) {
  for (const auto& v : schema)
    if (v.name == name) return &v;
  return nullptr;
}

std::string to_string(const StateValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  std::ostringstream os;
  os.precision(17);
  os << std::get<double>(value);
  return os.str();
}

std::string to_string(VariableCategory category) {
  switch (category) {
    case VariableCategory::fault: return "fault";
    case VariableCategory::environment: return "environment";
    case VariableCategory::monitor: return "monitor";
  }
  return "environment";
}

std::optional<VariableCategory> parse_category(const std::string& text) {
  if (text == "fault") return VariableCategory::fault;
  if (text == "environment") return VariableCategory::environment;
  if (text == "monitor") return VariableCategory::monitor;
  return std::nullopt;
}

void StatePrior::set(const std::string& variable, Marginal marginal) {
  marginals_[variable] = std::move(marginal);
}

const Marginal* StatePrior::find(const std::string& variable) const {
  auto it = marginals_.find(variable);
  return it == marginals_.end() ? nullptr : &it->second;
}

void StatePrior::check(const std::vector<StateVariable>& schema) const {
  for (const auto& [name, marginal] : marginals_) {
    const StateVariable* var = find_variable(schema, name);
    if (!var) throw DomainError("prior names undeclared variable '" + name + "'");
    if (const auto* d = std::get_if<DiscreteMarginal>(&marginal)) {
      if (!var->is_discrete())
        throw DomainError("prior for '" + name + "' is discrete but the variable is continuous");
      double sum = 0.0;
      for (const auto& [label, p] : d->mass) {
        check_value(*var, StateValue{label});
        if (!(p >= 0.0)) throw DomainError("prior for '" + name + "': negative mass");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw DomainError("prior for '" + name + "': masses sum to " + to_string(StateValue{sum}));
    } else {
      const auto& u = std::get<UniformMarginal>(marginal);
      if (var->is_discrete())
        throw DomainError("prior for '" + name + "' is uniform but the variable is discrete");
      const auto& c = var->continuous();
      if (!(u.lower >= c.lower && u.upper <= c.upper && u.lower < u.upper))
        throw DomainError("prior for '" + name + "': uniform bounds outside variable bounds");
    }
  }
}

double StatePrior::joint_probability(const StateVector& state) const {
  double p = 1.0;
  for (const auto& [name, value] : state) {
    const Marginal* m = find(name);
    if (!m) continue;
    if (const auto* d = std::get_if<DiscreteMarginal>(m)) {
      const auto* label = std::get_if<std::string>(&value);
      if (!label) return 0.0;
      auto it = d->mass.find(*label);
      p *= it == d->mass.end() ? 0.0 : it->second;
    } else {
      const auto& u = std::get<UniformMarginal>(*m);
      const auto* x = std::get_if<double>(&value);
      if (!x || *x < u.lower || *x > u.upper) return 0.0;
      p /= (u.upper - u.lower);
    }
  }
  return p;
}

StateVector StatePrior::draw(const std::vector<std::string>& order, Rng& rng) const {
  StateVector state;
  for (const auto& name : order) {
    const Marginal* m = find(name);
    if (!m) throw DomainError("prior does not cover variable '" + name + "'");
    if (const auto* d = std::get_if<DiscreteMarginal>(m)) {
      const double u = rng.uniform();
      double acc = 0.0;
      const std::string* pick = nullptr;
      for (const auto& [label, p] : d->mass) {
        if (p <= 0.0) continue;
        pick = &label;
        acc += p;
        if (u < acc) break;
      }
      if (!pick) throw DomainError("prior for '" + name + "' has no positive mass");
      state[name] = *pick;
    } else {
      const auto& u = std::get<UniformMarginal>(*m);
      state[name] = rng.uniform(u.lower, u.upper);
    }
  }
  return state;
}

StatePrior point_prior(const std::vector<StateVariable>& schema, const StateVector& state) {
  StatePrior prior;
  for (const auto& [name, value] : state) {
    const StateVariable* var = find_variable(schema, name);
    if (!var) throw LookupError("unknown variable '" + name + "'");
    check_value(*var, value);
    if (!var->is_discrete())
      throw DomainError("point prior needs discrete variables; '" + name + "' is continuous");
    DiscreteMarginal d;
    for (const auto& label : var->discrete().values) d.mass[label] = 0.0;
    d.mass[std::get<std::string>(value)] = 1.0;
    prior.set(name, std::move(d));
  }
  return prior;
}

}  // namespace btrisk
