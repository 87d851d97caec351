#include "btrisk/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "btrisk/errors.hpp"

namespace btrisk {

namespace {

const StateValue& lookup(const StateVector& state, const std::string& variable) {
  auto it = state.find(variable);
  if (it == state.end()) throw IncompleteStateError(variable);
  return it->second;
}

double real_value(const StateValue& v, const std::string& variable) {
  if (const auto* x = std::get_if<double>(&v)) return *x;
  throw DomainError("variable '" + variable + "' has a discrete value but its factor is continuous");
}

double clamp_to_kind(double x, FunctionKind kind) {
  if (std::isnan(x)) return 0.0;
  if (kind == FunctionKind::barrier_probability) return std::clamp(x, 0.0, 1.0);
  return std::max(x, 0.0);
}

struct FactorVisitor {
  const std::string& variable;
  const StateValue& value;
  FunctionKind kind;

  double operator()(const TableForm& t) const {
    const auto* label = std::get_if<std::string>(&value);
    if (!label)
      throw DomainError("variable '" + variable + "' has a real value but its factor is a table");
    auto it = t.values.find(*label);
    if (it == t.values.end())
      throw DomainError("variable '" + variable + "': no table entry for '" + *label + "'");
    return clamp_to_kind(it->second, kind);
  }

  double operator()(const SigmoidForm& s) const {
    const double x = real_value(value, variable);
    return clamp_to_kind(1.0 / (1.0 + std::exp(-(s.alpha * x + s.beta))), kind);
  }

  double operator()(const ClampedLinearForm& l) const {
    const double x = real_value(value, variable);
    return clamp_to_kind(l.slope * x + l.intercept, kind);
  }
};

}  // namespace

double evaluate_factor(const Factor& factor, FunctionKind kind, const StateVector& state) {
  const StateValue& value = lookup(state, factor.variable);
  return std::visit(FactorVisitor{factor.variable, value, kind}, factor.form);
}

double evaluate_barrier(const ConditionalFunction& fn, const StateVector& state) {
  if (fn.kind != FunctionKind::barrier_probability)
    throw DomainError("evaluate_barrier called on a threat-rate function");
  const std::size_t m = fn.factors.size();
  if (m == 0) return std::clamp(fn.base, 0.0, 1.0);
  if (m == 1) return evaluate_factor(fn.factors.front(), fn.kind, state);
  if (!(fn.base > 0.0 && fn.base < 1.0))
    throw DomainError("degenerate base probability " + to_string(StateValue{fn.base}) +
                      " with multiple factors");

  double success = 1.0;
  double failure = 1.0;
  for (const auto& f : fn.factors) {
    const double p = evaluate_factor(f, fn.kind, state);
    success *= p;
    failure *= 1.0 - p;
  }
  const double exponent = static_cast<double>(m - 1);
  const double q1 = success / std::pow(fn.base, exponent);
  if (fn.fusion == FusionMode::raw_clamped) return std::clamp(q1, 0.0, 1.0);

  const double q0 = failure / std::pow(1.0 - fn.base, exponent);
  if (!(q1 + q0 > 0.0))
    throw DomainError("contradictory certain factors: one predicts success, another failure");
  return std::clamp(q1 / (q1 + q0), 0.0, 1.0);
}

double evaluate_threat_rate(const ConditionalFunction& fn, const StateVector& state) {
  if (fn.kind != FunctionKind::threat_rate)
    throw DomainError("evaluate_threat_rate called on a barrier function");
  const std::size_t m = fn.factors.size();
  if (m == 0) return std::max(fn.base, 0.0);
  if (m == 1) return evaluate_factor(fn.factors.front(), fn.kind, state);
  if (!(fn.base > 0.0))
    throw DomainError("degenerate base rate " + to_string(StateValue{fn.base}) +
                      " with multiple factors");
  double product = 1.0;
  for (const auto& f : fn.factors) product *= evaluate_factor(f, fn.kind, state);
  return std::max(product / std::pow(fn.base, static_cast<double>(m - 1)), 0.0);
}

double evaluate(const ConditionalFunction& fn, const StateVector& state) {
  return fn.kind == FunctionKind::barrier_probability ? evaluate_barrier(fn, state)
                                                      : evaluate_threat_rate(fn, state);
}

FunctionProblems check_function(const ConditionalFunction& fn,
                                const std::vector<StateVariable>& schema) {
  FunctionProblems out;
  const bool barrier = fn.kind == FunctionKind::barrier_probability;
  if (!std::isfinite(fn.base) || fn.base < 0.0 || (barrier && fn.base > 1.0))
    out.invalid.push_back("base " + to_string(StateValue{fn.base}) + " out of range");

  std::set<std::string> seen;
  for (const auto& f : fn.factors) {
    if (!seen.insert(f.variable).second)
      out.invalid.push_back("variable '" + f.variable + "' used by more than one factor");
    const StateVariable* var = find_variable(schema, f.variable);
    if (!var) {
      out.undeclared.push_back(f.variable);
      continue;
    }
    if (const auto* t = std::get_if<TableForm>(&f.form)) {
      if (!var->is_discrete()) {
        out.invalid.push_back("table factor on continuous variable '" + f.variable + "'");
        continue;
      }
      const auto& domain = var->discrete().values;
      std::set<std::string> keys;
      for (const auto& [label, value] : t->values) {
        keys.insert(label);
        if (!std::isfinite(value) || value < 0.0 || (barrier && value > 1.0))
          out.invalid.push_back("table value for '" + f.variable + "=" + label + "' out of range");
      }
      if (keys != std::set<std::string>(domain.begin(), domain.end()))
        out.invalid.push_back("table keys for '" + f.variable + "' do not match its domain");
    } else if (var->is_discrete()) {
      out.invalid.push_back("continuous factor form on discrete variable '" + f.variable + "'");
    }
  }
  return out;
}

std::string to_string(FunctionKind kind) {
  return kind == FunctionKind::barrier_probability ? "barrier_probability" : "threat_rate";
}

std::string to_string(FusionMode mode) {
  return mode == FusionMode::raw_clamped ? "raw_clamped" : "normalized";
}

}  // namespace btrisk
