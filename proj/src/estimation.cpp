#include "btrisk/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "btrisk/errors.hpp"

namespace btrisk {

double laplace_success(std::uint64_t encounters, std::uint64_t failures) {
  return 1.0 - (static_cast<double>(failures) + 1.0) / (static_cast<double>(encounters) + 2.0);
}

namespace {

std::uint64_t count_of(const std::map<std::string, std::uint64_t>& counts, const std::string& id) {
  auto it = counts.find(id);
  return it == counts.end() ? 0 : it->second;
}

const StateVariable& schema_variable(const BowTie& model, const std::string& name) {
  const StateVariable* var = find_variable(model.state_schema, name);
  if (!var) throw LookupError("undeclared state variable '" + name + "'");
  return *var;
}

const StateValue& episode_value(const Episode& e, const std::string& variable) {
  auto it = e.state.find(variable);
  if (it == e.state.end()) throw IncompleteStateError(variable);
  return it->second;
}

void check_isolation(const EpisodeLog& log, const BowTie& model, const std::string& threat) {
  if (log.isolate != threat)
    throw ProtocolError("log is not isolated to threat '" + threat + "' (isolate = " +
                        (log.isolate ? "'" + *log.isolate + "'" : std::string("none")) + ")");
  for (const auto& e : log.episodes)
    for (const auto& t : model.threats())
      if (t != threat && count_of(e.threat_occurrences, t) > 0)
        throw ProtocolError("scene '" + e.scene_id + "' has occurrences of threat '" + t +
                            "' in a log isolated to '" + threat + "'");
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct SigmoidState {
  double objective = 0.0;
  double grad_alpha = 0.0;
  double grad_beta = 0.0;
  double h_aa = 0.0;  // negated Hessian entries (positive definite)
  double h_ab = 0.0;
  double h_bb = 0.0;
};

SigmoidState sigmoid_objective(const std::vector<WeightedOutcome>& data, double alpha, double beta, double penalty,
                               bool derivatives) {
  SigmoidState s;
  for (const auto& d : data) {
    const double z = alpha * d.x + beta;
    s.objective -= d.successes * softplus(-z) + d.failures * softplus(z);
    if (!derivatives) continue;
    const double p = sigmoid(z);
    const double n = d.successes + d.failures;
    const double r = d.successes - n * p;
    s.grad_alpha += r * d.x;
    s.grad_beta += r;
    const double w = n * p * (1.0 - p);
    s.h_aa += w * d.x * d.x;
    s.h_ab += w * d.x;
    s.h_bb += w;
  }
  s.objective -= penalty * (alpha * alpha + beta * beta);
  s.grad_alpha -= 2.0 * penalty * alpha;
  s.grad_beta -= 2.0 * penalty * beta;
  s.h_aa += 2.0 * penalty;
  s.h_bb += 2.0 * penalty;
  return s;
}

DiscreteEstimate discrete_from_tallies(const EpisodeLog& log, const StateVariable& var,
                                       const std::vector<EncounterTally>& tallies) {
  DiscreteEstimate out;
  for (const auto& label : var.discrete().values) {
    out.encounters[label] = 0;
    out.failures[label] = 0;
  }
  for (const auto& t : tallies) {
    const auto* label = std::get_if<std::string>(&episode_value(log.episodes[t.episode], var.name));
    if (!label || !out.encounters.count(*label))
      throw DomainError("scene '" + log.episodes[t.episode].scene_id + "' has an invalid value for '" + var.name + "'");
    out.encounters[*label] += t.encounters;
    out.failures[*label] += t.failures;
  }
  TableForm table;
  for (const auto& label : var.discrete().values)
    table.values[label] = laplace_success(out.encounters[label], out.failures[label]);
  out.factor = Factor{var.name, std::move(table)};
  return out;
}

std::vector<WeightedOutcome> sigmoid_data(const EpisodeLog& log, const StateVariable& var,
                                          const std::vector<EncounterTally>& tallies) {
  std::vector<WeightedOutcome> data;
  for (const auto& t : tallies) {
    if (t.encounters == 0) continue;
    const auto* x = std::get_if<double>(&episode_value(log.episodes[t.episode], var.name));
    if (!x) throw DomainError("scene '" + log.episodes[t.episode].scene_id + "' has a non-real value for '" + var.name + "'");
    data.push_back({*x, static_cast<double>(t.encounters - t.failures), static_cast<double>(t.failures)});
  }
  return data;
}

}  // namespace

std::vector<EncounterTally> barrier_encounters(const EpisodeLog& log, const BowTie& model,
                                               const std::string& barrier) {
  const auto threat = guarding_threat(model, barrier);
  const auto consequence = threat ? std::nullopt : guarded_consequence(model, barrier);
  if (!threat && !consequence) throw LookupError("barrier '" + barrier + "' is on no chain");
  if (log.episodes.empty()) return {};
  if (threat) check_isolation(log, model, *threat);

  const bool has_records = std::any_of(log.episodes.begin(), log.episodes.end(), [&](const Episode& e) {
    return std::any_of(e.barrier_outcomes.begin(), e.barrier_outcomes.end(),
                       [&](const BarrierOutcome& o) { return o.barrier == barrier; });
  });

  if (!has_records) {
    const auto chain = threat ? prevention_chain(model, *threat) : recovery_chain(model, *consequence);
    if (chain.size() != 1)
      throw DomainError("log has no outcome records for barrier '" + barrier +
                        "' and event counts cannot separate it from the other barriers on its chain");
  }

  std::vector<EncounterTally> out;
  out.reserve(log.episodes.size());
  for (std::size_t i = 0; i < log.episodes.size(); ++i) {
    const Episode& e = log.episodes[i];
    EncounterTally t{i, 0, 0};
    if (has_records) {
      for (const auto& o : e.barrier_outcomes) {
        if (o.barrier != barrier) continue;
        ++t.encounters;
        if (!o.success) ++t.failures;
      }
    } else if (threat) {
      t.encounters = count_of(e.threat_occurrences, *threat);
      t.failures = e.top_event_count;
    } else {
      t.encounters = e.top_event_count;
      t.failures = count_of(e.consequence_counts, *consequence);
    }
    if (t.failures > t.encounters)
      throw DomainError("scene '" + e.scene_id + "' records more propagations past '" + barrier +
                        "' than encounters");
    out.push_back(t);
  }
  return out;
}

DiscreteEstimate estimate_discrete_factor(const EpisodeLog& log, const BowTie& model, const std::string& barrier,
                                          const std::string& variable) {
  const StateVariable& var = schema_variable(model, variable);
  if (!var.is_discrete()) throw DomainError("variable '" + variable + "' is continuous; use a sigmoid fit");
  return discrete_from_tallies(log, var, barrier_encounters(log, model, barrier));
}

SigmoidFit fit_sigmoid(const std::vector<WeightedOutcome>& data, const std::string& variable,
                       const SigmoidOptions& options) {
  double successes = 0.0, failures = 0.0;
  for (const auto& d : data) {
    successes += d.successes;
    failures += d.failures;
  }
  const auto n = static_cast<std::uint64_t>(successes + failures);
  const double constant = laplace_success(n, static_cast<std::uint64_t>(failures));
  if (n < 2) throw DegenerateDataError("fewer than two encounters for '" + variable + "'", constant);
  if (successes == 0.0 || failures == 0.0)
    throw DegenerateDataError("all encounters have the same outcome for '" + variable + "'", constant);

  SigmoidFit fit;
  fit.encounters = n;
  double alpha = 0.0, beta = 0.0;
  SigmoidState s = sigmoid_objective(data, alpha, beta, options.l2_penalty, true);
  fit.objective_history.push_back(s.objective);

  for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
    fit.gradient_norm = std::hypot(s.grad_alpha, s.grad_beta);
    if (fit.gradient_norm < options.gradient_tolerance) {
      fit.converged = true;
      break;
    }
    const double det = s.h_aa * s.h_bb - s.h_ab * s.h_ab;
    double da = (s.h_bb * s.grad_alpha - s.h_ab * s.grad_beta) / det;
    double db = (s.h_aa * s.grad_beta - s.h_ab * s.grad_alpha) / det;
    if (!std::isfinite(da) || !std::isfinite(db)) {
      da = s.grad_alpha;
      db = s.grad_beta;
    }

    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const double a = alpha + step * da;
      const double b = beta + step * db;
      const double trial = sigmoid_objective(data, a, b, options.l2_penalty, false).objective;
      if (trial >= s.objective) {
        alpha = a;
        beta = b;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    s = sigmoid_objective(data, alpha, beta, options.l2_penalty, true);
    fit.objective_history.push_back(s.objective);
  }
  fit.gradient_norm = std::hypot(s.grad_alpha, s.grad_beta);
  fit.converged = fit.gradient_norm < options.gradient_tolerance;
  fit.alpha = alpha;
  fit.beta = beta;
  fit.factor = Factor{variable, SigmoidForm{alpha, beta}};
  return fit;
}

SigmoidFit fit_sigmoid_factor(const EpisodeLog& log, const BowTie& model, const std::string& barrier,
                              const std::string& variable, const SigmoidOptions& options) {
  const StateVariable& var = schema_variable(model, variable);
  if (var.is_discrete()) throw DomainError("variable '" + variable + "' is discrete; use a table estimate");
  return fit_sigmoid(sigmoid_data(log, var, barrier_encounters(log, model, barrier)), variable, options);
}

Factor ThreatRateEstimate::to_factor() const {
  if (!variable) throw DomainError("pooled threat rate has no per-value table");
  TableForm table;
  for (const auto& [label, rate] : rates) {
    if (!rate) throw DomainError("no exposure for '" + *variable + "=" + label + "'; rate undefined");
    table.values[label] = *rate;
  }
  return Factor{*variable, std::move(table)};
}

ThreatRateEstimate estimate_threat_rate(const EpisodeLog& log, const BowTie& model, const std::string& threat,
                                        const std::optional<std::string>& variable) {
  const Node* n = model.find_node(threat);
  if (!n || !n->is_event() || n->role != EventRole::threat) throw LookupError("'" + threat + "' is not a threat");

  ThreatRateEstimate out;
  out.variable = variable;
  const StateVariable* var = nullptr;
  if (variable) {
    var = &schema_variable(model, *variable);
    if (!var->is_discrete()) throw DomainError("threat rates can only be split by discrete variables");
    for (const auto& label : var->discrete().values) {
      out.exposure[label] = 0.0;
      out.occurrences[label] = 0;
    }
  }

  std::uint64_t total = 0;
  for (const auto& e : log.episodes) {
    const std::uint64_t k = count_of(e.threat_occurrences, threat);
    total += k;
    out.total_exposure += e.duration;
    if (var) {
      const auto* label = std::get_if<std::string>(&episode_value(e, var->name));
      if (!label || !out.exposure.count(*label))
        throw DomainError("scene '" + e.scene_id + "' has an invalid value for '" + var->name + "'");
      out.exposure[*label] += e.duration;
      out.occurrences[*label] += k;
    }
  }
  if (out.total_exposure > 0.0) out.pooled_rate = static_cast<double>(total) / out.total_exposure;
  for (const auto& [label, exposure] : out.exposure)
    out.rates[label] = exposure > 0.0 ? std::optional<double>(static_cast<double>(out.occurrences[label]) / exposure)
                                      : std::nullopt;
  return out;
}

ConditionalFunction fit_barrier(const EpisodeLog& log, const BowTie& model, const std::string& barrier,
                                const std::vector<std::string>& variables, const BaseSource& base,
                                FusionMode fusion, const SigmoidOptions& options) {
  const auto tallies = barrier_encounters(log, model, barrier);
  std::uint64_t encounters = 0, failures = 0;
  for (const auto& t : tallies) {
    encounters += t.encounters;
    failures += t.failures;
  }
  if (encounters == 0) throw DegenerateDataError("no encounters of barrier '" + barrier + "'", 0.5);

  ConditionalFunction fn;
  fn.kind = FunctionKind::barrier_probability;
  fn.fusion = fusion;
  if (const double* given = std::get_if<double>(&base)) {
    if (!(*given >= 0.0 && *given <= 1.0)) throw DomainError("base probability must lie in [0, 1]");
    fn.base = *given;
  } else {
    fn.base = laplace_success(encounters, failures);
  }
  for (const auto& name : variables) {
    const StateVariable& var = schema_variable(model, name);
    if (var.is_discrete()) {
      fn.factors.push_back(discrete_from_tallies(log, var, tallies).factor);
    } else {
      fn.factors.push_back(fit_sigmoid(sigmoid_data(log, var, tallies), name, options).factor);
    }
  }
  return fn;
}

ConditionalFunction fit_threat(const EpisodeLog& log, const BowTie& model, const std::string& threat,
                               const std::vector<std::string>& variables) {
  const auto pooled = estimate_threat_rate(log, model, threat, std::nullopt);
  if (!pooled.pooled_rate) throw DegenerateDataError("no exposure for threat '" + threat + "'", 0.0);
  ConditionalFunction fn;
  fn.kind = FunctionKind::threat_rate;
  fn.base = *pooled.pooled_rate;
  for (const auto& name : variables) fn.factors.push_back(estimate_threat_rate(log, model, threat, name).to_factor());
  if (fn.factors.size() >= 2 && fn.base == 0.0)
    throw DegenerateDataError("threat '" + threat + "' never occurred; cannot fuse several factors", 0.0);
  return fn;
}

}  // namespace btrisk
