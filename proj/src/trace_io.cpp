#include "btrisk/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <optional>

#include "btrisk/errors.hpp"
#include "btrisk/io.hpp"

namespace btrisk {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Calls fn(line_no, cells) for every non-blank line after the header.
template <typename Fn>
std::vector<std::string_view> for_each_row(std::string_view csv, const char* what, Fn&& fn) {
  std::vector<std::string_view> header;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (!have_header) {
      header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != header.size())
      throw ParseError(std::string(what) + ": expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       line_no, 1);
    fn(line_no, header, cells);
  }
  if (!have_header) throw ParseError(std::string(what) + ": missing header row", 1, 1);
  return header;
}

std::vector<std::string_view> header_of(std::string_view csv) {
  std::size_t pos = 0;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = csv.substr(pos, end - pos);
    pos = end + 1;
    if (!trim(line).empty()) return split_row(line);
  }
  return {};
}

bool is_boolean(const StateVariable& v) {
  return v.is_discrete() && v.discrete().values == std::vector<std::string>{"0", "1"};
}

std::optional<StateValue> read_cell(const StateVariable& var, std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  StateValue value;
  if (var.is_discrete()) {
    std::string label(cell);
    if (is_boolean(var)) {
      if (label == "true") label = "1";
      else if (label == "false") label = "0";
    }
    value = label;
  } else {
    auto d = parse_double(cell);
    if (!d) return std::nullopt;
    value = *d;
  }
  try {
    check_value(var, value);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

StateTrace parse_state_trace(std::string_view csv, const BowTie& model) {
  const auto header = header_of(csv);
  if (header.empty() || header.front() != "timestamp")
    throw ParseError("state trace: first column must be 'timestamp'", 1, 1);

  StateTrace out;
  std::vector<const StateVariable*> columns(header.size(), nullptr);
  for (std::size_t i = 1; i < header.size(); ++i) {
    columns[i] = find_variable(model.state_schema, std::string(header[i]));
    if (!columns[i]) out.warnings.push_back("ignoring column '" + std::string(header[i]) + "' (not a state variable)");
  }
  for (const auto& name : model.referenced_variables()) {
    bool found = false;
    for (std::size_t i = 1; i < header.size(); ++i) found = found || header[i] == name;
    if (!found) throw IncompleteStateError(name);
  }

  for_each_row(csv, "state trace", [&](std::size_t line_no, const auto&, const auto& cells) {
    auto t = parse_double(cells[0]);
    if (!t || !std::isfinite(*t)) throw ParseError("state trace: invalid timestamp", line_no, 1);
    StateVector state;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (!columns[i]) continue;
      if (auto v = read_cell(*columns[i], cells[i])) {
        state[columns[i]->name] = std::move(*v);
      } else {
        out.warnings.push_back("line " + std::to_string(line_no) + ": no usable value for '" + columns[i]->name + "'");
      }
    }
    out.rows.emplace_back(*t, std::move(state));
  });
  return out;
}

StateTrace load_state_trace(const std::filesystem::path& path, const BowTie& model) {
  try {
    return parse_state_trace(read_file(path), model);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string dump_state_trace(const std::vector<StateVariable>& schema, const std::vector<TimedState>& rows) {
  std::string out = "timestamp";
  for (const auto& v : schema) out += "," + v.name;
  out += "\n";
  for (const auto& [t, state] : rows) {
    out += format_number(t);
    for (const auto& v : schema) {
      out += ",";
      auto it = state.find(v.name);
      if (it == state.end()) continue;
      if (const auto* d = std::get_if<double>(&it->second)) out += format_number(*d);
      else out += std::get<std::string>(it->second);
    }
    out += "\n";
  }
  return out;
}

std::string dump_risk_trace(const RiskTrace& trace) {
  std::string out = "timestamp,consequence,raw_rate,smoothed_rate,likelihood,verdict\n";
  for (const auto& s : trace.samples) {
    out += format_number(s.timestamp) + "," + s.consequence + "," + format_number(s.raw_rate) + "," +
           format_number(s.smoothed_rate) + "," + format_number(s.likelihood) + "," + to_string(s.verdict) + "\n";
  }
  return out;
}

RiskTrace parse_risk_trace(std::string_view csv) {
  static const std::vector<std::string_view> expected = {"timestamp", "raw_rate", "smoothed_rate", "likelihood"};
  RiskTrace trace;
  const auto header = header_of(csv);
  const std::vector<std::string_view> want = {"timestamp",     "consequence", "raw_rate",
                                              "smoothed_rate", "likelihood",  "verdict"};
  if (header != want)
    throw ParseError("risk trace: header must be timestamp,consequence,raw_rate,smoothed_rate,likelihood,verdict", 1, 1);
  for_each_row(csv, "risk trace", [&](std::size_t line_no, const auto&, const auto& cells) {
    RiskSample s;
    double* targets[] = {&s.timestamp, &s.raw_rate, &s.smoothed_rate, &s.likelihood};
    const std::size_t idx[] = {0, 2, 3, 4};
    for (std::size_t k = 0; k < 4; ++k) {
      auto v = parse_double(cells[idx[k]]);
      if (!v) throw ParseError("risk trace: invalid " + std::string(expected[k]), line_no, idx[k] + 1);
      *targets[k] = *v;
    }
    s.consequence = std::string(cells[1]);
    if (cells[5] == "ok") s.verdict = Verdict::ok;
    else if (cells[5] == "violated") s.verdict = Verdict::violated;
    else throw ParseError("risk trace: verdict must be ok or violated", line_no, 6);
    trace.samples.push_back(std::move(s));
  });
  return trace;
}

RiskTrace load_risk_trace(const std::filesystem::path& path) {
  try {
    return parse_risk_trace(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace btrisk
