#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "btrisk/state.hpp"

namespace btrisk {

enum class FunctionKind { barrier_probability, threat_rate };

/// How per-variable barrier factors are combined.
///
/// raw_clamped evaluates prod(p_j) / base^(m-1) and clamps to [0, 1].
/// normalized also evaluates the complementary product for barrier failure
/// and returns the two-class posterior q1 / (q1 + q0), which is the exact
/// naive-Bayes value and always lies in [0, 1].
enum class FusionMode { raw_clamped, normalized };

/// Discrete lookup: label -> probability (barriers) or rate (threats).
struct TableForm {
  std::map<std::string, double> values;
  bool operator==(const TableForm&) const = default;
};

/// 1 / (1 + exp(-(alpha * x + beta)))
struct SigmoidForm {
  double alpha = 0.0;
  double beta = 0.0;
  bool operator==(const SigmoidForm&) const = default;
};

/// slope * x + intercept, clamped to the admissible range of the function.
struct ClampedLinearForm {
  double slope = 0.0;
  double intercept = 0.0;
  bool operator==(const ClampedLinearForm&) const = default;
};

struct Factor {
  std::string variable;
  std::variant<TableForm, SigmoidForm, ClampedLinearForm> form;
  bool operator==(const Factor&) const = default;
};

/// f_b (barrier success probability) or f_e (threat rate, per minute).
struct ConditionalFunction {
  FunctionKind kind = FunctionKind::barrier_probability;
  double base = 0.0;
  std::vector<Factor> factors;
  FusionMode fusion = FusionMode::raw_clamped;

  bool operator==(const ConditionalFunction&) const = default;
};

/// Value of a single factor at `state`, before fusion. Clamped to [0, 1] for
/// barriers and to [0, inf) for threats.
double evaluate_factor(const Factor& factor, FunctionKind kind, const StateVector& state);

/// Fused barrier success probability in [0, 1].
double evaluate_barrier(const ConditionalFunction& fn, const StateVector& state);

/// Fused threat rate (occurrences per minute), >= 0.
double evaluate_threat_rate(const ConditionalFunction& fn, const StateVector& state);

/// Dispatches on fn.kind.
double evaluate(const ConditionalFunction& fn, const StateVector& state);

/// Structural problems of `fn` against `schema`, one message per problem.
/// Undeclared variables are reported separately from other problems so the
/// validator can map them onto distinct violation codes.
struct FunctionProblems {
  std::vector<std::string> undeclared;
  std::vector<std::string> invalid;
};
FunctionProblems check_function(const ConditionalFunction& fn,
                                const std::vector<StateVariable>& schema);

std::string to_string(FunctionKind kind);
std::string to_string(FusionMode mode);

}  // namespace btrisk
