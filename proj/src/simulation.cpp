#include "btrisk/simulation.hpp"

#include <cmath>
#include <exception>

#include "btrisk/errors.hpp"
#include "btrisk/random.hpp"

namespace btrisk {

namespace {

// Keeps SDL draws off the episode streams, which use the same seed.
constexpr std::uint64_t kSdlSeedSalt = 0x53444c5f73636e65ULL;

const StateValue& lookup(const StateVector& state, const std::string& name) {
  auto it = state.find(name);
  if (it == state.end()) throw IncompleteStateError(name);
  return it->second;
}

StateValue config_to_value(const sdl::ConfigValue& v, const StateVariable& var) {
  if (var.is_discrete()) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw DomainError("state sampler: real value for discrete variable '" + var.name + "'");
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw DomainError("state sampler: string value for continuous variable '" + var.name + "'");
}

struct Chain {
  std::vector<std::string> barriers;
  std::vector<const TruthFunction*> truth;
};

// Everything run_episodes needs, resolved once before the episode loop.
struct Plan {
  std::vector<std::string> threats;
  std::vector<const TruthFunction*> threat_truth;
  std::vector<Chain> prevention;
  std::vector<std::string> consequences;
  std::vector<Chain> recovery;
  std::vector<bool> active;
};

const TruthFunction& truth_for(const std::map<std::string, TruthFunction>& fns, const std::string& id,
                               const char* what) {
  auto it = fns.find(id);
  if (it == fns.end()) throw DomainError(std::string("ground truth has no ") + what + " function for '" + id + "'");
  return it->second;
}

Plan make_plan(const GroundTruth& truth, const BowTie& model, const std::optional<std::string>& isolate) {
  if (isolate) {
    const Node* n = model.find_node(*isolate);
    if (!n || !n->is_event() || n->role != EventRole::threat) throw LookupError("isolate: '" + *isolate + "' is not a threat");
  }
  const auto report = validate(model);
  if (!report.empty()) {
    std::string msg = "model is not a valid bow tie:";
    for (const auto& v : report) msg += " " + to_string(v.code);
    throw DomainError(msg);
  }
  for (const auto& name : model.referenced_variables()) {
    const StateVariable* mine = find_variable(truth.schema, name);
    if (!mine) throw DomainError("ground truth schema lacks model variable '" + name + "'");
    const StateVariable* theirs = find_variable(model.state_schema, name);
    if (theirs && mine->domain != theirs->domain)
      throw DomainError("variable '" + name + "' has different domains in the ground truth and the model");
  }
  if (!(truth.duration > 0.0)) throw DomainError("ground truth duration must be > 0");

  Plan plan;
  plan.threats = model.threats();
  for (const auto& t : plan.threats) {
    plan.threat_truth.push_back(&truth_for(truth.threats, t, "threat"));
    Chain c;
    c.barriers = prevention_chain(model, t);
    for (const auto& b : c.barriers) c.truth.push_back(&truth_for(truth.barriers, b, "barrier"));
    plan.prevention.push_back(std::move(c));
    plan.active.push_back(!isolate || *isolate == t);
  }
  plan.consequences = model.consequences();
  for (const auto& con : plan.consequences) {
    Chain c;
    c.barriers = recovery_chain(model, con);
    for (const auto& b : c.barriers) c.truth.push_back(&truth_for(truth.barriers, b, "barrier"));
    plan.recovery.push_back(std::move(c));
  }
  return plan;
}

std::vector<double> chain_probs(const Chain& chain, const StateVector& state) {
  std::vector<double> p;
  p.reserve(chain.truth.size());
  for (std::size_t i = 0; i < chain.truth.size(); ++i) {
    const double v = evaluate_truth(*chain.truth[i], FunctionKind::barrier_probability, state);
    if (!(v >= 0.0 && v <= 1.0))
      throw DomainError("ground truth probability for '" + chain.barriers[i] + "' is outside [0, 1]");
    p.push_back(v);
  }
  return p;
}

// True if the event gets through every barrier of the chain.
bool traverse(const Chain& chain, const std::vector<double>& probs, Rng& rng, Episode& e) {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool success = rng.bernoulli(probs[i]);
    e.barrier_outcomes.push_back({chain.barriers[i], success});
    if (success) return false;
  }
  return true;
}

Episode simulate_one(const GroundTruth& truth, const Plan& plan, std::uint64_t seed, std::uint64_t index) {
  Episode e;
  e.scene_id = std::to_string(index);
  e.duration = truth.duration;
  e.state = draw_state(truth, seed, index);
  Rng rng(seed, index);

  for (std::size_t t = 0; t < plan.threats.size(); ++t) {
    std::uint64_t occurrences = 0;
    if (plan.active[t]) {
      if (truth.occurrence == OccurrenceModel::once_per_scene) {
        occurrences = 1;
      } else {
        const double rate = evaluate_truth(*plan.threat_truth[t], FunctionKind::threat_rate, e.state);
        if (!(rate >= 0.0) || !std::isfinite(rate))
          throw DomainError("ground truth rate for '" + plan.threats[t] + "' must be finite and >= 0");
        occurrences = rng.poisson(rate * truth.duration);
      }
    }
    e.threat_occurrences[plan.threats[t]] = occurrences;
    if (occurrences == 0) continue;
    const auto probs = chain_probs(plan.prevention[t], e.state);
    for (std::uint64_t k = 0; k < occurrences; ++k)
      if (traverse(plan.prevention[t], probs, rng, e)) ++e.top_event_count;
  }

  for (const auto& c : plan.consequences) e.consequence_counts[c] = 0;
  if (e.top_event_count == 0) return e;
  std::vector<std::vector<double>> recovery_probs;
  for (const auto& chain : plan.recovery) recovery_probs.push_back(chain_probs(chain, e.state));
  for (std::uint64_t k = 0; k < e.top_event_count; ++k)
    for (std::size_t c = 0; c < plan.consequences.size(); ++c)
      if (traverse(plan.recovery[c], recovery_probs[c], rng, e)) ++e.consequence_counts[plan.consequences[c]];
  return e;
}

EpisodeLog make_log(const BowTie& model, const std::optional<std::string>& isolate) {
  EpisodeLog log;
  log.isolate = isolate;
  log.top_event = model.top_event();
  return log;
}

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw ParseError("ground truth: " + where + ": " + msg);
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing '") + key + "'");
  return *it;
}

TruthFunction truth_function_from_json(const json& j, const std::string& where, const std::vector<StateVariable>& schema,
                                       FunctionKind kind) {
  if (!j.is_object()) fail(where, "expected an object");
  if (auto joint = j.find("joint"); joint != j.end()) {
    JointTable t;
    const json& vars = member(*joint, "variables", where);
    if (!vars.is_array()) fail(where + ".variables", "expected an array");
    for (const auto& v : vars) {
      if (!v.is_string()) fail(where + ".variables", "expected names");
      const StateVariable* var = find_variable(schema, v.get<std::string>());
      if (!var) fail(where + ".variables", "undeclared variable '" + v.get<std::string>() + "'");
      if (!var->is_discrete()) fail(where + ".variables", "'" + var->name + "' is not discrete");
      t.variables.push_back(var->name);
    }
    const json& entries = member(*joint, "entries", where);
    if (!entries.is_array()) fail(where + ".entries", "expected an array");
    for (const auto& e : entries) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_array() || !e[1].is_number() ||
          e[0].size() != t.variables.size())
        fail(where + ".entries", "expected [[labels...], value] with one label per variable");
      std::vector<std::string> key;
      for (std::size_t i = 0; i < e[0].size(); ++i) {
        if (!e[0][i].is_string()) fail(where + ".entries", "labels must be strings");
        key.push_back(e[0][i].get<std::string>());
        check_value(*find_variable(schema, t.variables[i]), key.back());
      }
      const double v = e[1].get<double>();
      if (kind == FunctionKind::barrier_probability ? !(v >= 0.0 && v <= 1.0) : !(v >= 0.0))
        fail(where + ".entries", "value out of range");
      t.values[key] = v;
    }
    return t;
  }
  auto fn = function_from_json(j, where);
  if (fn.kind != kind) fail(where, "function kind does not match the node");
  const auto problems = check_function(fn, schema);
  if (!problems.undeclared.empty()) fail(where, problems.undeclared.front());
  if (!problems.invalid.empty()) fail(where, problems.invalid.front());
  return fn;
}

}  // namespace

double evaluate_truth(const TruthFunction& fn, FunctionKind kind, const StateVector& state) {
  if (const auto* cf = std::get_if<ConditionalFunction>(&fn)) {
    if (cf->kind != kind) throw DomainError("ground truth function has the wrong kind");
    return evaluate(*cf, state);
  }
  const auto& table = std::get<JointTable>(fn);
  std::vector<std::string> key;
  key.reserve(table.variables.size());
  for (const auto& v : table.variables) {
    const auto* label = std::get_if<std::string>(&lookup(state, v));
    if (!label) throw DomainError("joint table variable '" + v + "' has a non-discrete value");
    key.push_back(*label);
  }
  auto it = table.values.find(key);
  if (it == table.values.end()) {
    std::string k;
    for (const auto& s : key) k += (k.empty() ? "" : ",") + s;
    throw DomainError("joint table has no entry for (" + k + ")");
  }
  return it->second;
}

StateVector draw_state(const GroundTruth& truth, std::uint64_t seed, std::uint64_t index) {
  if (const auto* prior = std::get_if<StatePrior>(&truth.sampler)) {
    std::vector<std::string> order;
    for (const auto& v : truth.schema)
      if (prior->find(v.name)) order.push_back(v.name);
    Rng rng(splitmix64(seed ^ kSdlSeedSalt), index);
    return prior->draw(order, rng);
  }
  const auto& s = std::get<SdlSampler>(truth.sampler);
  const auto config = sdl::sample_one(s.scene, splitmix64(seed ^ kSdlSeedSalt), index);
  StateVector state;
  for (const auto& [var, key] : s.mapping) {
    const StateVariable* decl = find_variable(truth.schema, var);
    if (!decl) throw DomainError("state sampler maps undeclared variable '" + var + "'");
    auto it = config.values.find(key);
    if (it == config.values.end()) throw DomainError("scene sample has no value '" + key + "'");
    StateValue v = config_to_value(it->second, *decl);
    check_value(*decl, v);
    state[var] = std::move(v);
  }
  return state;
}

EpisodeLog run_episodes(const GroundTruth& truth, const BowTie& model, std::size_t episodes, std::uint64_t seed,
                        const std::optional<std::string>& isolate) {
  const Plan plan = make_plan(truth, model, isolate);
  EpisodeLog log = make_log(model, isolate);
  log.episodes.resize(episodes);
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(episodes);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      log.episodes[static_cast<std::size_t>(i)] = simulate_one(truth, plan, seed, static_cast<std::uint64_t>(i));
    } catch (...) {
#pragma omp critical(btrisk_sim_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return log;
}

EpisodeLog run_episodes_serial(const GroundTruth& truth, const BowTie& model, std::size_t episodes,
                               std::uint64_t seed, const std::optional<std::string>& isolate) {
  const Plan plan = make_plan(truth, model, isolate);
  EpisodeLog log = make_log(model, isolate);
  log.episodes.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) log.episodes.push_back(simulate_one(truth, plan, seed, i));
  return log;
}

EmpiricalSummary empirical_rates(const EpisodeLog& log) {
  if (log.episodes.empty()) throw DomainError("empirical rates need a nonempty log");
  EmpiricalSummary out;
  std::map<std::string, std::uint64_t> counts;
  for (const auto& e : log.episodes) {
    out.exposure += e.duration;
    for (const auto& [id, k] : e.threat_occurrences) counts[id] += k;
    counts[log.top_event] += e.top_event_count;
    for (const auto& [id, k] : e.consequence_counts) counts[id] += k;
    for (const auto& b : e.barrier_outcomes) {
      auto& tally = out.barriers[b.barrier];
      ++tally.encounters;
      if (!b.success) ++tally.failures;
    }
  }
  for (const auto& [id, k] : counts) {
    EventRate r;
    r.count = k;
    r.rate = static_cast<double>(k) / out.exposure;
    r.standard_error = std::sqrt(static_cast<double>(k)) / out.exposure;
    r.upper_bound_95 = k == 0 ? std::log(20.0) / out.exposure : r.rate + 1.96 * r.standard_error;
    out.events[id] = r;
  }
  return out;
}

GroundTruth truth_from_json(const json& doc, const std::filesystem::path& base_dir) {
  GroundTruth truth;
  try {
    truth.schema = schema_from_json(member(doc, "schema", "document"));
  } catch (const ParseError& e) {
    fail("schema", e.what());
  }

  const json& sampler = member(doc, "state_sampler", "document");
  if (sampler.contains("prior")) {
    truth.sampler = prior_from_json(sampler["prior"], truth.schema);
  } else {
    SdlSampler s;
    std::string source;
    if (auto it = sampler.find("sdl"); it != sampler.end() && it->is_string()) {
      source = it->get<std::string>();
    } else if (auto f = sampler.find("sdl_file"); f != sampler.end() && f->is_string()) {
      source = read_file(base_dir / f->get<std::string>());
    } else {
      fail("state_sampler", "expected 'prior', 'sdl' or 'sdl_file'");
    }
    s.scene = sdl::parse(source);
    const json& mapping = member(sampler, "mapping", "state_sampler");
    if (!mapping.is_object()) fail("state_sampler.mapping", "expected an object");
    for (auto it = mapping.begin(); it != mapping.end(); ++it) {
      if (!it->is_string()) fail("state_sampler.mapping", "expected \"entity.field\" strings");
      if (!find_variable(truth.schema, it.key())) fail("state_sampler.mapping", "undeclared variable '" + it.key() + "'");
      s.mapping[it.key()] = it->get<std::string>();
    }
    truth.sampler = std::move(s);
  }

  for (const auto& [section, kind] : {std::pair{"threats", FunctionKind::threat_rate},
                                      std::pair{"barriers", FunctionKind::barrier_probability}}) {
    const json& fns = member(doc, section, "document");
    if (!fns.is_object()) fail(section, "expected an object");
    auto& target = kind == FunctionKind::threat_rate ? truth.threats : truth.barriers;
    for (auto it = fns.begin(); it != fns.end(); ++it)
      target[it.key()] = truth_function_from_json(*it, std::string(section) + "." + it.key(), truth.schema, kind);
  }

  if (auto it = doc.find("occurrence_model"); it != doc.end()) {
    if (*it == "poisson") truth.occurrence = OccurrenceModel::poisson;
    else if (*it == "once_per_scene") truth.occurrence = OccurrenceModel::once_per_scene;
    else fail("occurrence_model", "expected \"poisson\" or \"once_per_scene\"");
  }
  if (auto it = doc.find("duration"); it != doc.end()) {
    if (!it->is_number() || !(it->get<double>() > 0.0)) fail("duration", "expected minutes > 0");
    truth.duration = it->get<double>();
  }
  return truth;
}

GroundTruth load_truth(const std::filesystem::path& path) {
  try {
    return truth_from_json(parse_json(read_file(path), path.string()), path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace btrisk
