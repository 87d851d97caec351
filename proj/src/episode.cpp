#include "btrisk/episode.hpp"

#include <sstream>

#include "btrisk/errors.hpp"
#include "btrisk/io.hpp"

namespace btrisk {

namespace {

json counts_to_json(const std::map<std::string, std::uint64_t>& counts) {
  json j = json::object();
  for (const auto& [k, v] : counts) j[k] = v;
  return j;
}

std::map<std::string, std::uint64_t> counts_from_json(const json& j, const std::string& where, std::size_t line) {
  if (!j.is_object()) throw ParseError(where + ": expected an object", line, 1);
  std::map<std::string, std::uint64_t> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it->is_number_unsigned()) throw ParseError(where + "." + it.key() + ": expected a count >= 0", line, 1);
    out[it.key()] = it->get<std::uint64_t>();
  }
  return out;
}

}  // namespace

std::string dump_log(const EpisodeLog& log) {
  std::string out;
  json header;
  header["isolate"] = log.isolate ? json(*log.isolate) : json(nullptr);
  header["top_event"] = log.top_event;
  header["episodes"] = log.episodes.size();
  out += json{{"header", header}}.dump() + "\n";
  for (const auto& e : log.episodes) {
    json j;
    j["scene_id"] = e.scene_id;
    j["duration"] = e.duration;
    j["state"] = state_to_json(e.state);
    j["threats"] = counts_to_json(e.threat_occurrences);
    j["top"] = e.top_event_count;
    j["consequences"] = counts_to_json(e.consequence_counts);
    json barriers = json::array();
    for (const auto& b : e.barrier_outcomes) barriers.push_back(json::array({b.barrier, b.success}));
    j["barriers"] = std::move(barriers);
    out += j.dump() + "\n";
  }
  return out;
}

EpisodeLog parse_log(std::string_view text, const std::vector<StateVariable>& schema) {
  EpisodeLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool first_record = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json j;
    try {
      j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("episode log: ") + e.what(), line_no, e.byte);
    }
    const std::string where = "episode log record";
    if (!j.is_object()) throw ParseError(where + ": expected an object", line_no, 1);

    if (auto h = j.find("header"); h != j.end()) {
      if (!first_record) throw ParseError("episode log: header must be the first record", line_no, 1);
      if (auto iso = h->find("isolate"); iso != h->end() && !iso->is_null()) {
        if (!iso->is_string()) throw ParseError("episode log: isolate must be a string", line_no, 1);
        log.isolate = iso->get<std::string>();
      }
      if (auto top = h->find("top_event"); top != h->end() && top->is_string()) log.top_event = top->get<std::string>();
      first_record = false;
      continue;
    }
    first_record = false;

    Episode e;
    try {
      e.scene_id = j.value("scene_id", std::to_string(log.episodes.size()));
      e.duration = j.at("duration").get<double>();
      if (!(e.duration > 0.0)) throw ParseError(where + ": duration must be > 0", line_no, 1);
      e.state = state_from_json(j.at("state"), schema);
      if (auto t = j.find("threats"); t != j.end()) e.threat_occurrences = counts_from_json(*t, "threats", line_no);
      if (auto t = j.find("top"); t != j.end()) {
        if (!t->is_number_unsigned()) throw ParseError(where + ": top must be a count >= 0", line_no, 1);
        e.top_event_count = t->get<std::uint64_t>();
      }
      if (auto c = j.find("consequences"); c != j.end())
        e.consequence_counts = counts_from_json(*c, "consequences", line_no);
      if (auto b = j.find("barriers"); b != j.end()) {
        if (!b->is_array()) throw ParseError(where + ": barriers must be an array", line_no, 1);
        for (const auto& rec : *b) {
          if (!rec.is_array() || rec.size() != 2 || !rec[0].is_string() || !rec[1].is_boolean())
            throw ParseError(where + ": barrier outcome must be [id, true|false]", line_no, 1);
          e.barrier_outcomes.push_back({rec[0].get<std::string>(), rec[1].get<bool>()});
        }
      }
    } catch (const ParseError& err) {
      if (err.line() != 0) throw;
      throw ParseError(std::string("episode log: ") + err.what(), line_no, 1);
    } catch (const json::exception& err) {
      throw ParseError(std::string("episode log: ") + err.what(), line_no, 1);
    }
    log.episodes.push_back(std::move(e));
  }
  return log;
}

EpisodeLog load_log(const std::filesystem::path& path, const std::vector<StateVariable>& schema) {
  try {
    return parse_log(read_file(path), schema);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

EpisodeLog merge_logs(const std::vector<EpisodeLog>& logs) {
  EpisodeLog out;
  if (logs.empty()) return out;
  out.isolate = logs.front().isolate;
  out.top_event = logs.front().top_event;
  for (const auto& log : logs) {
    if (log.isolate != logs.front().isolate) out.isolate.reset();
    out.episodes.insert(out.episodes.end(), log.episodes.begin(), log.episodes.end());
  }
  return out;
}

}  // namespace btrisk
