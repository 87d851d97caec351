#include "btrisk/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "btrisk/errors.hpp"

namespace btrisk {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return os.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path.string() + "'");
  }
}

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string msg = e.what();
    if (auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ParseError(source + ": " + msg, line, column);
  }
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing key '") + key + "'");
  return *it;
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::string opt_string(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  return it == j.end() ? std::string{} : get_string(*it, where + "." + key);
}

// Rates may be written as numbers, "inf", or null (infinite).
double get_rate(const json& j, const std::string& where) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string() && (j == "inf" || j == "infinity")) return std::numeric_limits<double>::infinity();
  return get_number(j, where);
}

json rate_to_json(double r) {
  if (std::isinf(r)) return "inf";
  return r;
}

}  // namespace

ConditionalFunction function_from_json(const json& j, const std::string& where) {
  ConditionalFunction fn;
  const std::string kind = get_string(member(j, "kind", where), where + ".kind");
  if (kind == "barrier_probability") {
    fn.kind = FunctionKind::barrier_probability;
  } else if (kind == "threat_rate") {
    fn.kind = FunctionKind::threat_rate;
  } else {
    fail(where + ".kind", "unknown kind '" + kind + "'");
  }
  fn.base = get_number(member(j, "base", where), where + ".base");
  if (auto it = j.find("fusion"); it != j.end()) {
    const std::string mode = get_string(*it, where + ".fusion");
    if (mode == "raw_clamped") fn.fusion = FusionMode::raw_clamped;
    else if (mode == "normalized") fn.fusion = FusionMode::normalized;
    else fail(where + ".fusion", "unknown fusion mode '" + mode + "'");
  }
  if (auto it = j.find("factors"); it != j.end()) {
    if (!it->is_array()) fail(where + ".factors", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& fj = (*it)[i];
      const std::string fw = where + ".factors[" + std::to_string(i) + "]";
      Factor f;
      f.variable = get_string(member(fj, "variable", fw), fw + ".variable");
      const std::string form = get_string(member(fj, "form", fw), fw + ".form");
      if (form == "table") {
        const json& values = member(fj, "values", fw);
        if (!values.is_object()) fail(fw + ".values", "expected an object");
        TableForm t;
        for (auto v = values.begin(); v != values.end(); ++v)
          t.values[v.key()] = get_number(v.value(), fw + ".values." + v.key());
        f.form = std::move(t);
      } else if (form == "sigmoid") {
        f.form = SigmoidForm{get_number(member(fj, "alpha", fw), fw + ".alpha"),
                             get_number(member(fj, "beta", fw), fw + ".beta")};
      } else if (form == "clamped_linear") {
        f.form = ClampedLinearForm{get_number(member(fj, "slope", fw), fw + ".slope"),
                                   get_number(member(fj, "intercept", fw), fw + ".intercept")};
      } else {
        fail(fw + ".form", "unknown factor form '" + form + "'");
      }
      fn.factors.push_back(std::move(f));
    }
  }
  return fn;
}

json function_to_json(const ConditionalFunction& fn) {
  json j;
  j["kind"] = to_string(fn.kind);
  j["base"] = fn.base;
  if (fn.kind == FunctionKind::barrier_probability) j["fusion"] = to_string(fn.fusion);
  json factors = json::array();
  for (const auto& f : fn.factors) {
    json fj;
    fj["variable"] = f.variable;
    if (const auto* t = std::get_if<TableForm>(&f.form)) {
      fj["form"] = "table";
      fj["values"] = json::object();
      for (const auto& [k, v] : t->values) fj["values"][k] = v;
    } else if (const auto* s = std::get_if<SigmoidForm>(&f.form)) {
      fj["form"] = "sigmoid";
      fj["alpha"] = s->alpha;
      fj["beta"] = s->beta;
    } else {
      const auto& l = std::get<ClampedLinearForm>(f.form);
      fj["form"] = "clamped_linear";
      fj["slope"] = l.slope;
      fj["intercept"] = l.intercept;
    }
    factors.push_back(std::move(fj));
  }
  j["factors"] = std::move(factors);
  return j;
}

std::vector<StateVariable> schema_from_json(const json& j) {
  if (!j.is_array()) fail("state_schema", "expected an array");
  std::vector<StateVariable> schema;
  std::set<std::string> names;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "state_schema[" + std::to_string(i) + "]";
    const json& vj = j[i];
    StateVariable v;
    v.name = get_string(member(vj, "name", where), where + ".name");
    const std::string category = get_string(member(vj, "category", where), where + ".category");
    auto cat = parse_category(category);
    if (!cat) fail(where + ".category", "unknown category '" + category + "'");
    v.category = *cat;
    const std::string kind = get_string(member(vj, "kind", where), where + ".kind");
    if (kind == "boolean") {
      v.domain = DiscreteDomain{{"0", "1"}};
    } else if (kind == "discrete") {
      const json& values = member(vj, "values", where);
      if (!values.is_array()) fail(where + ".values", "expected an array");
      DiscreteDomain d;
      for (const auto& x : values) d.values.push_back(get_string(x, where + ".values"));
      v.domain = std::move(d);
    } else if (kind == "continuous") {
      v.domain = ContinuousDomain{get_number(member(vj, "lower", where), where + ".lower"),
                                  get_number(member(vj, "upper", where), where + ".upper")};
    } else {
      fail(where + ".kind", "unknown kind '" + kind + "'");
    }
    try {
      v.check();
    } catch (const DomainError& e) {
      fail(where, e.what());
    }
    if (!names.insert(v.name).second) fail(where, "duplicate variable '" + v.name + "'");
    schema.push_back(std::move(v));
  }
  return schema;
}

json schema_to_json(const std::vector<StateVariable>& schema) {
  json out = json::array();
  for (const auto& v : schema) {
    json vj;
    vj["name"] = v.name;
    vj["category"] = to_string(v.category);
    if (v.is_discrete()) {
      vj["kind"] = "discrete";
      vj["values"] = v.discrete().values;
    } else {
      vj["kind"] = "continuous";
      vj["lower"] = v.continuous().lower;
      vj["upper"] = v.continuous().upper;
    }
    out.push_back(std::move(vj));
  }
  return out;
}

StateValue value_from_json(const json& j, const StateVariable& var) {
  const std::string where = "value of '" + var.name + "'";
  if (var.is_discrete()) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_boolean()) return std::string(j.get<bool>() ? "1" : "0");
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    fail(where, "expected a discrete label");
  }
  return get_number(j, where);
}

json value_to_json(const StateValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

StateVector state_from_json(const json& j, const std::vector<StateVariable>& schema) {
  if (!j.is_object()) fail("state", "expected an object");
  StateVector state;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const StateVariable* var = find_variable(schema, it.key());
    if (!var) fail("state", "undeclared variable '" + it.key() + "'");
    StateValue v = value_from_json(it.value(), *var);
    try {
      check_value(*var, v);
    } catch (const DomainError& e) {
      fail("state", e.what());
    }
    state.emplace(it.key(), std::move(v));
  }
  return state;
}

json state_to_json(const StateVector& state) {
  json j = json::object();
  for (const auto& [k, v] : state) j[k] = value_to_json(v);
  return j;
}

StatePrior prior_from_json(const json& j, const std::vector<StateVariable>& schema) {
  if (!j.is_object()) fail("prior", "expected an object");
  StatePrior prior;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string where = "prior." + it.key();
    const StateVariable* var = find_variable(schema, it.key());
    if (!var) fail(where, "undeclared variable");
    const json& mj = it.value();
    if (var->is_discrete()) {
      if (!mj.is_object()) fail(where, "expected label -> probability object");
      DiscreteMarginal d;
      for (auto m = mj.begin(); m != mj.end(); ++m) d.mass[m.key()] = get_number(m.value(), where);
      prior.set(it.key(), std::move(d));
    } else {
      UniformMarginal u{var->continuous().lower, var->continuous().upper};
      if (mj.is_array()) {
        if (mj.size() != 2) fail(where, "expected [lower, upper]");
        u.lower = get_number(mj[0], where);
        u.upper = get_number(mj[1], where);
      } else if (!(mj.is_string() && mj == "uniform")) {
        fail(where, "expected \"uniform\" or [lower, upper]");
      }
      prior.set(it.key(), u);
    }
  }
  try {
    prior.check(schema);
  } catch (const DomainError& e) {
    fail("prior", e.what());
  }
  return prior;
}

json prior_to_json(const StatePrior& prior) {
  json j = json::object();
  for (const auto& [name, m] : prior.marginals()) {
    if (const auto* d = std::get_if<DiscreteMarginal>(&m)) {
      j[name] = json::object();
      for (const auto& [label, p] : d->mass) j[name][label] = p;
    } else {
      const auto& u = std::get<UniformMarginal>(m);
      j[name] = json::array({u.lower, u.upper});
    }
  }
  return j;
}

BowTie model_from_json(const json& doc) {
  if (!doc.is_object()) fail("model", "expected an object");
  BowTie model;
  model.hazard = get_string(member(doc, "hazard", "model"), "hazard");

  const json& classes = member(doc, "severity_classes", "model");
  if (!classes.is_array()) fail("severity_classes", "expected an array");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string where = "severity_classes[" + std::to_string(i) + "]";
    SeverityClass s;
    s.name = get_string(member(classes[i], "name", where), where + ".name");
    const auto rate = classes[i].find("max_acceptable_rate");
    s.max_acceptable_rate = rate == classes[i].end() ? std::numeric_limits<double>::infinity()
                                                     : get_rate(*rate, where + ".max_acceptable_rate");
    if (!(s.max_acceptable_rate >= 0.0)) fail(where, "max_acceptable_rate must be >= 0");
    if (s.name == "None" && !std::isinf(s.max_acceptable_rate))
      fail(where, "the None class must have an infinite acceptable rate");
    model.severity_classes.push_back(std::move(s));
  }

  model.state_schema = schema_from_json(member(doc, "state_schema", "model"));

  const json& nodes = member(doc, "nodes", "model");
  if (!nodes.is_array()) fail("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const json& nj = nodes[i];
    Node n;
    n.id = get_string(member(nj, "id", where), where + ".id");
    const std::string type = get_string(member(nj, "type", where), where + ".type");
    if (type == "event") n.type = NodeType::event;
    else if (type == "barrier") n.type = NodeType::barrier;
    else fail(where + ".type", "unknown node type '" + type + "'");
    n.description = opt_string(nj, "description", where);
    if (n.is_event()) {
      const std::string role = get_string(member(nj, "role", where), where + ".role");
      if (role == "threat") n.role = EventRole::threat;
      else if (role == "top") n.role = EventRole::top;
      else if (role == "consequence") n.role = EventRole::consequence;
      else if (role == "intermediate") n.role = EventRole::intermediate;
      else fail(where + ".role", "unknown role '" + role + "'");
      n.severity = opt_string(nj, "severity", where);
    }
    model.nodes.push_back(std::move(n));
  }

  const json& conns = member(doc, "connections", "model");
  if (!conns.is_array()) fail("connections", "expected an array");
  for (std::size_t i = 0; i < conns.size(); ++i) {
    const std::string where = "connections[" + std::to_string(i) + "]";
    const json& c = conns[i];
    if (!c.is_array() || c.size() != 2) fail(where, "expected [source, destination]");
    model.connections.emplace_back(get_string(c[0], where), get_string(c[1], where));
  }

  if (auto it = doc.find("functions"); it != doc.end()) {
    if (!it->is_object()) fail("functions", "expected an object keyed by node id");
    for (auto f = it->begin(); f != it->end(); ++f) {
      const std::string where = "functions." + f.key();
      auto fn = function_from_json(f.value(), where);
      Node* target = nullptr;
      for (auto& n : model.nodes)
        if (n.id == f.key()) target = &n;
      if (!target) fail(where, "function for undeclared node '" + f.key() + "'");
      target->function = std::move(fn);
    }
  }
  return model;
}

json model_to_json(const BowTie& model) {
  json doc;
  doc["hazard"] = model.hazard;
  doc["severity_classes"] = json::array();
  for (const auto& s : model.severity_classes)
    doc["severity_classes"].push_back({{"name", s.name}, {"max_acceptable_rate", rate_to_json(s.max_acceptable_rate)}});
  doc["state_schema"] = schema_to_json(model.state_schema);
  doc["nodes"] = json::array();
  doc["functions"] = json::object();
  for (const auto& n : model.nodes) {
    json nj;
    nj["id"] = n.id;
    nj["type"] = n.is_event() ? "event" : "barrier";
    if (!n.description.empty()) nj["description"] = n.description;
    if (n.is_event()) {
      static const char* roles[] = {"threat", "top", "consequence", "intermediate"};
      nj["role"] = roles[static_cast<int>(n.role)];
      nj["severity"] = n.severity;
    }
    doc["nodes"].push_back(std::move(nj));
    if (n.function) doc["functions"][n.id] = function_to_json(*n.function);
  }
  doc["connections"] = json::array();
  for (const auto& [a, b] : model.connections) doc["connections"].push_back({a, b});
  return doc;
}

BowTie parse_model(std::string_view text) { return model_from_json(parse_json(text, "model")); }

BowTie load_model(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return model_from_json(parse_json(text, path.string()));
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string dump_model(const BowTie& model) { return model_to_json(model).dump(2) + "\n"; }

}  // namespace btrisk
