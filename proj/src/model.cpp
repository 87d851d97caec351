#include "btrisk/model.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "btrisk/errors.hpp"

namespace btrisk {

const Node* BowTie::find_node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

const Node& BowTie::node(const std::string& id) const {
  const Node* n = find_node(id);
  if (!n) throw LookupError("unknown node '" + id + "'");
  return *n;
}

const SeverityClass* BowTie::find_severity(const std::string& name) const {
  for (const auto& s : severity_classes)
    if (s.name == name) return &s;
  return nullptr;
}

namespace {

std::vector<std::string> events_with_role(const BowTie& model, EventRole role) {
  std::vector<std::string> out;
  for (const auto& n : model.nodes)
    if (n.is_event() && n.role == role) out.push_back(n.id);
  return out;
}

}  // namespace

std::vector<std::string> BowTie::threats() const { return events_with_role(*this, EventRole::threat); }

std::vector<std::string> BowTie::consequences() const {
  return events_with_role(*this, EventRole::consequence);
}

std::vector<std::string> BowTie::barriers() const {
  std::vector<std::string> out;
  for (const auto& n : nodes)
    if (n.is_barrier()) out.push_back(n.id);
  return out;
}

const std::string& BowTie::top_event() const {
  for (const auto& n : nodes)
    if (n.is_event() && n.role == EventRole::top) return n.id;
  throw LookupError("model has no top event");
}

double BowTie::acceptable_rate(const std::string& event_id) const {
  const Node& n = node(event_id);
  const SeverityClass* s = find_severity(n.severity);
  if (!s || s->name == "None") return std::numeric_limits<double>::infinity();
  return s->max_acceptable_rate;
}

std::vector<std::string> BowTie::referenced_variables() const {
  std::set<std::string> used;
  for (const auto& n : nodes)
    if (n.function)
      for (const auto& f : n.function->factors) used.insert(f.variable);
  std::vector<std::string> out;
  for (const auto& v : state_schema)
    if (used.count(v.name)) out.push_back(v.name);
  return out;
}

std::string to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::CYCLE: return "CYCLE";
    case ViolationCode::TOP_COUNT: return "TOP_COUNT";
    case ViolationCode::NO_THREAT: return "NO_THREAT";
    case ViolationCode::NO_CONSEQUENCE: return "NO_CONSEQUENCE";
    case ViolationCode::INTERMEDIATE_EVENT: return "INTERMEDIATE_EVENT";
    case ViolationCode::MISPLACED_BARRIER: return "MISPLACED_BARRIER";
    case ViolationCode::BRANCHING: return "BRANCHING";
    case ViolationCode::DANGLING_REF: return "DANGLING_REF";
    case ViolationCode::MISSING_FUNCTION: return "MISSING_FUNCTION";
    case ViolationCode::UNDECLARED_VARIABLE: return "UNDECLARED_VARIABLE";
    case ViolationCode::DISCONNECTED_EVENT: return "DISCONNECTED_EVENT";
    case ViolationCode::INVALID_FUNCTION: return "INVALID_FUNCTION";
    case ViolationCode::UNKNOWN_SEVERITY: return "UNKNOWN_SEVERITY";
    case ViolationCode::DUPLICATE_ID: return "DUPLICATE_ID";
  }
  return "UNKNOWN";
}

namespace {

class Graph {
 public:
  explicit Graph(std::size_t n) : succ_(n), pred_(n) {}

  void add(std::size_t a, std::size_t b) {
    succ_[a].push_back(b);
    pred_[b].push_back(a);
  }

  std::size_t size() const { return succ_.size(); }
  const std::vector<std::size_t>& succ(std::size_t i) const { return succ_[i]; }
  const std::vector<std::size_t>& pred(std::size_t i) const { return pred_[i]; }

  bool acyclic() const {
    std::vector<std::size_t> indeg(size());
    for (std::size_t i = 0; i < size(); ++i) indeg[i] = pred_[i].size();
    std::queue<std::size_t> ready;
    for (std::size_t i = 0; i < size(); ++i)
      if (indeg[i] == 0) ready.push(i);
    std::size_t visited = 0;
    while (!ready.empty()) {
      const std::size_t i = ready.front();
      ready.pop();
      ++visited;
      for (std::size_t j : succ_[i])
        if (--indeg[j] == 0) ready.push(j);
    }
    return visited == size();
  }

  /// Nodes reachable from `from` by one or more steps.
  std::vector<bool> reachable(std::size_t from, bool forward) const {
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack{from};
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j : forward ? succ_[i] : pred_[i]) {
        if (!seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    return seen;
  }

 private:
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
};

class ReportBuilder {
 public:
  void add(ViolationCode code, const std::string& detail) {
    auto& d = details_[code];
    if (!d.empty()) d += "; ";
    d += detail;
  }

  ValidationReport finish() const {
    ValidationReport out;
    for (const auto& [code, detail] : details_) out.push_back({code, detail});
    return out;
  }

 private:
  std::map<ViolationCode, std::string> details_;
};

}  // namespace

ValidationReport validate(const BowTie& model) {
  ReportBuilder report;

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    if (!index.emplace(model.nodes[i].id, i).second)
      report.add(ViolationCode::DUPLICATE_ID, "node '" + model.nodes[i].id + "' declared twice");
  }
  {
    std::set<std::string> names;
    for (const auto& s : model.severity_classes)
      if (!names.insert(s.name).second)
        report.add(ViolationCode::DUPLICATE_ID, "severity class '" + s.name + "' declared twice");
    names.clear();
    for (const auto& v : model.state_schema)
      if (!names.insert(v.name).second)
        report.add(ViolationCode::DUPLICATE_ID, "state variable '" + v.name + "' declared twice");
  }

  Graph graph(model.nodes.size());
  for (const auto& [src, dst] : model.connections) {
    auto a = index.find(src);
    auto b = index.find(dst);
    if (a == index.end() || b == index.end()) {
      report.add(ViolationCode::DANGLING_REF,
                 "connection " + src + " -> " + dst + " references an undeclared node");
      continue;
    }
    graph.add(a->second, b->second);
  }

  std::vector<std::size_t> tops, threats, consequences;
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const Node& n = model.nodes[i];
    if (!n.is_event()) continue;
    switch (n.role) {
      case EventRole::top: tops.push_back(i); break;
      case EventRole::threat: threats.push_back(i); break;
      case EventRole::consequence: consequences.push_back(i); break;
      case EventRole::intermediate:
        report.add(ViolationCode::INTERMEDIATE_EVENT, "event '" + n.id + "' is neither threat, top nor consequence");
        break;
    }
    if (!model.find_severity(n.severity))
      report.add(ViolationCode::UNKNOWN_SEVERITY,
                 "event '" + n.id + "' has undeclared severity '" + n.severity + "'");
  }

  if (tops.size() != 1)
    report.add(ViolationCode::TOP_COUNT, std::to_string(tops.size()) + " top events declared");
  if (threats.empty()) report.add(ViolationCode::NO_THREAT, "no threat events");
  if (consequences.empty()) report.add(ViolationCode::NO_CONSEQUENCE, "no consequence events");

  if (!graph.acyclic()) report.add(ViolationCode::CYCLE, "connections contain a cycle");

  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const Node& n = model.nodes[i];
    const bool is_top = n.is_event() && n.role == EventRole::top;
    if (is_top) continue;
    if (graph.pred(i).size() > 1) report.add(ViolationCode::BRANCHING, "'" + n.id + "' is joined");
    if (graph.succ(i).size() > 1) report.add(ViolationCode::BRANCHING, "'" + n.id + "' branches");
    if (n.is_event() && n.role == EventRole::threat && !graph.pred(i).empty())
      report.add(ViolationCode::BRANCHING, "threat '" + n.id + "' has an incoming connection");
    if (n.is_event() && n.role == EventRole::consequence && !graph.succ(i).empty())
      report.add(ViolationCode::BRANCHING, "consequence '" + n.id + "' has an outgoing connection");
  }

  // Reachability relative to the set of declared top events.
  if (!tops.empty()) {
    std::vector<bool> to_top(model.nodes.size(), false), from_top(model.nodes.size(), false);
    for (std::size_t t : tops) {
      const auto up = graph.reachable(t, false);
      const auto down = graph.reachable(t, true);
      for (std::size_t i = 0; i < model.nodes.size(); ++i) {
        to_top[i] = to_top[i] || up[i];
        from_top[i] = from_top[i] || down[i];
      }
    }
    for (std::size_t t : threats)
      if (!to_top[t])
        report.add(ViolationCode::DISCONNECTED_EVENT,
                   "threat '" + model.nodes[t].id + "' does not lead to the top event");
    for (std::size_t c : consequences)
      if (!from_top[c])
        report.add(ViolationCode::DISCONNECTED_EVENT,
                   "consequence '" + model.nodes[c].id + "' is not reached from the top event");

    for (std::size_t i = 0; i < model.nodes.size(); ++i) {
      if (!model.nodes[i].is_barrier()) continue;
      const auto ancestors = graph.reachable(i, false);
      const auto descendants = graph.reachable(i, true);
      const bool prevention =
          to_top[i] && std::any_of(threats.begin(), threats.end(), [&](std::size_t t) { return ancestors[t]; });
      const bool recovery = from_top[i] && std::any_of(consequences.begin(), consequences.end(),
                                                       [&](std::size_t c) { return descendants[c]; });
      if (!prevention && !recovery)
        report.add(ViolationCode::MISPLACED_BARRIER,
                   "barrier '" + model.nodes[i].id + "' is not between a threat and the top event or the top event and a consequence");
    }
  }

  for (const auto& n : model.nodes) {
    const bool needs_function = n.is_barrier() || n.role == EventRole::threat;
    if (!needs_function) {
      if (n.function)
        report.add(ViolationCode::INVALID_FUNCTION, "event '" + n.id + "' must not carry a conditional function");
      continue;
    }
    if (!n.function) {
      report.add(ViolationCode::MISSING_FUNCTION, "'" + n.id + "' has no conditional function");
      continue;
    }
    const FunctionKind expected = n.is_barrier() ? FunctionKind::barrier_probability : FunctionKind::threat_rate;
    if (n.function->kind != expected)
      report.add(ViolationCode::INVALID_FUNCTION,
                 "'" + n.id + "' needs a " + to_string(expected) + " function");
    const auto problems = check_function(*n.function, model.state_schema);
    for (const auto& v : problems.undeclared)
      report.add(ViolationCode::UNDECLARED_VARIABLE, "'" + n.id + "' references undeclared variable '" + v + "'");
    for (const auto& p : problems.invalid)
      report.add(ViolationCode::INVALID_FUNCTION, "'" + n.id + "': " + p);
  }

  return report.finish();
}

std::vector<ViolationCode> codes(const ValidationReport& report) {
  std::vector<ViolationCode> out;
  for (const auto& v : report)
    if (std::find(out.begin(), out.end(), v.code) == out.end()) out.push_back(v.code);
  return out;
}

namespace {

const Node& require_role(const BowTie& model, const std::string& id, EventRole role, const char* what) {
  const Node* n = model.find_node(id);
  if (!n || !n->is_event() || n->role != role) throw LookupError("'" + id + "' is not a " + what);
  return *n;
}

std::vector<std::string> walk_chain(const BowTie& model, const std::string& start, bool forward) {
  std::vector<std::string> chain;
  std::string current = start;
  for (std::size_t step = 0; step <= model.nodes.size(); ++step) {
    const std::string* next = nullptr;
    for (const auto& [src, dst] : model.connections) {
      if (forward && src == current) next = &dst;
      if (!forward && dst == current) next = &src;
      if (next) break;
    }
    if (!next) throw DomainError("'" + start + "' is not connected to the top event");
    const Node& n = model.node(*next);
    if (n.is_event()) {
      if (n.role != EventRole::top)
        throw DomainError("path from '" + start + "' reaches event '" + n.id + "' before the top event");
      if (!forward) std::reverse(chain.begin(), chain.end());
      return chain;
    }
    chain.push_back(n.id);
    current = n.id;
  }
  throw DomainError("path from '" + start + "' does not terminate");
}

}  // namespace

std::vector<std::string> prevention_chain(const BowTie& model, const std::string& threat) {
  require_role(model, threat, EventRole::threat, "threat");
  return walk_chain(model, threat, true);
}

std::vector<std::string> recovery_chain(const BowTie& model, const std::string& consequence) {
  require_role(model, consequence, EventRole::consequence, "consequence");
  return walk_chain(model, consequence, false);
}

std::optional<std::string> guarding_threat(const BowTie& model, const std::string& barrier) {
  const Node* n = model.find_node(barrier);
  if (!n || !n->is_barrier()) throw LookupError("'" + barrier + "' is not a barrier");
  for (const auto& t : model.threats()) {
    const auto chain = prevention_chain(model, t);
    if (std::find(chain.begin(), chain.end(), barrier) != chain.end()) return t;
  }
  return std::nullopt;
}

std::optional<std::string> guarded_consequence(const BowTie& model, const std::string& barrier) {
  const Node* n = model.find_node(barrier);
  if (!n || !n->is_barrier()) throw LookupError("'" + barrier + "' is not a barrier");
  for (const auto& c : model.consequences()) {
    const auto chain = recovery_chain(model, c);
    if (std::find(chain.begin(), chain.end(), barrier) != chain.end()) return c;
  }
  return std::nullopt;
}

}  // namespace btrisk
