#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "btrisk/conditional.hpp"
#include "btrisk/model.hpp"

namespace btrisk::test {

inline std::string fixture(const std::string& rel) { return std::string(BTRISK_FIXTURE_DIR) + "/" + rel; }

inline ConditionalFunction constant_barrier(double p) {
  ConditionalFunction f;
  f.kind = FunctionKind::barrier_probability;
  f.base = p;
  return f;
}

inline ConditionalFunction constant_rate(double r) {
  ConditionalFunction f;
  f.kind = FunctionKind::threat_rate;
  f.base = r;
  return f;
}

inline Factor table(const std::string& variable, std::map<std::string, double> values) {
  return Factor{variable, TableForm{std::move(values)}};
}

inline StateVariable boolean(const std::string& name, VariableCategory c = VariableCategory::fault) {
  return StateVariable{name, c, DiscreteDomain{{"0", "1"}}};
}

using ChainSpec = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// threat -> barriers -> TOP and TOP -> barriers -> consequence chains.
/// Every threat and barrier gets a constant function (rate 1, probability 0.5).
inline BowTie chain_model(const ChainSpec& prevention, const ChainSpec& recovery,
                          std::vector<StateVariable> schema = {}) {
  BowTie m;
  m.hazard = "test";
  m.severity_classes = {{"None", std::numeric_limits<double>::infinity()}, {"Minor", 1.0}, {"Catastrophic", 0.02}};
  m.state_schema = std::move(schema);
  Node top;
  top.id = "TOP";
  top.role = EventRole::top;
  top.severity = "Minor";
  m.nodes.push_back(top);
  auto add_barriers = [&](const std::vector<std::string>& bs) {
    for (const auto& b : bs) {
      Node n;
      n.id = b;
      n.type = NodeType::barrier;
      n.function = constant_barrier(0.5);
      m.nodes.push_back(n);
    }
  };
  for (const auto& [t, bs] : prevention) {
    Node n;
    n.id = t;
    n.role = EventRole::threat;
    n.severity = "None";
    n.function = constant_rate(1.0);
    m.nodes.push_back(n);
    add_barriers(bs);
    std::string prev = t;
    for (const auto& b : bs) {
      m.connections.emplace_back(prev, b);
      prev = b;
    }
    m.connections.emplace_back(prev, "TOP");
  }
  for (const auto& [c, bs] : recovery) {
    Node n;
    n.id = c;
    n.role = EventRole::consequence;
    n.severity = "Catastrophic";
    m.nodes.push_back(n);
    add_barriers(bs);
    std::string prev = "TOP";
    for (const auto& b : bs) {
      m.connections.emplace_back(prev, b);
      prev = b;
    }
    m.connections.emplace_back(prev, c);
  }
  return m;
}

inline void set_function(BowTie& m, const std::string& id, ConditionalFunction fn) {
  for (auto& n : m.nodes)
    if (n.id == id) n.function = std::move(fn);
}

/// {T1 -> B1 -> TOP, T2 -> B2 -> TOP, TOP -> B3 -> C1} with constant functions.
inline BowTie two_threat_shape(double t1, double t2, double b1, double b2, double b3) {
  BowTie m = chain_model({{"T1", {"B1"}}, {"T2", {"B2"}}}, {{"C1", {"B3"}}});
  set_function(m, "T1", constant_rate(t1));
  set_function(m, "T2", constant_rate(t2));
  set_function(m, "B1", constant_barrier(b1));
  set_function(m, "B2", constant_barrier(b2));
  set_function(m, "B3", constant_barrier(b3));
  return m;
}

}  // namespace btrisk::test
