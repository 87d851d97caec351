// btrisk: command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 validation or domain failure,
// 3 I/O or parse error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "btrisk/episode.hpp"
#include "btrisk/errors.hpp"
#include "btrisk/estimation.hpp"
#include "btrisk/evaluation.hpp"
#include "btrisk/io.hpp"
#include "btrisk/model.hpp"
#include "btrisk/risk.hpp"
#include "btrisk/sdl.hpp"
#include "btrisk/simulation.hpp"
#include "btrisk/trace_io.hpp"

namespace fs = std::filesystem;
using namespace btrisk;

namespace {

enum Exit { kOk = 0, kUsage = 1, kDomain = 2, kIo = 3 };

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "text";
};

OutputFormat output_format(const Globals& g) {
  return g.format == "delimited" ? OutputFormat::delimited : OutputFormat::text;
}

// --out wins; otherwise BTRISK_OUT_DIR/<default_name>; otherwise stdout.
std::optional<fs::path> output_path(const Globals& g, const char* default_name) {
  if (!g.out.empty()) return fs::path(g.out);
  if (const char* dir = std::getenv("BTRISK_OUT_DIR"); dir && *dir) return fs::path(dir) / default_name;
  return std::nullopt;
}

void emit(const Globals& g, const char* default_name, const std::string& content) {
  if (auto path = output_path(g, default_name)) {
    write_file_atomic(*path, content);
    std::cerr << "wrote " << path->string() << "\n";
  } else {
    std::cout << content;
  }
}

int cmd_validate(const Globals& g, const std::string& path) {
  const BowTie model = load_model(path);
  const auto report = validate(model);
  const bool delimited = output_format(g) == OutputFormat::delimited;
  if (report.empty()) {
    if (!delimited) std::cout << path << ": ok\n";
    return kOk;
  }
  for (const auto& v : report) {
    if (delimited) std::cout << to_string(v.code) << "," << v.detail << "\n";
    else std::cout << to_string(v.code) << ": " << v.detail << "\n";
  }
  return kDomain;
}

int cmd_sample(const Globals& g, const std::string& path, std::size_t count) {
  const auto scene = sdl::parse(read_file(path));
  std::string out;
  for (const auto& cfg : sdl::sample(scene, count, g.seed)) out += sdl::to_json_line(cfg) + "\n";
  emit(g, "scenes.ndjson", out);
  return kOk;
}

int cmd_simulate(const Globals& g, const std::string& truth_path, const std::string& model_path,
                 std::size_t episodes, const std::string& isolate) {
  const GroundTruth truth = load_truth(truth_path);
  const BowTie model = load_model(model_path);
  std::optional<std::string> iso;
  if (!isolate.empty()) iso = isolate;
  const EpisodeLog log = run_episodes(truth, model, episodes, g.seed, iso);
  emit(g, "episodes.ndjson", dump_log(log));
  if (!log.episodes.empty()) {
    const auto summary = empirical_rates(log);
    for (const auto& [id, r] : summary.events)
      std::cerr << id << ": " << r.count << " events, " << format_number(r.rate) << "/min\n";
  }
  return kOk;
}

std::vector<std::string> factor_variables(const Node& node) {
  std::vector<std::string> vars;
  if (node.function)
    for (const auto& f : node.function->factors) vars.push_back(f.variable);
  return vars;
}

int cmd_fit(const Globals& g, const std::string& model_path, const std::vector<std::string>& log_paths,
            const std::string& fusion_flag) {
  BowTie model = load_model(model_path);
  if (const auto report = validate(model); !report.empty()) {
    for (const auto& v : report) std::cerr << to_string(v.code) << ": " << v.detail << "\n";
    return kDomain;
  }
  std::vector<EpisodeLog> logs;
  for (const auto& p : log_paths) {
    logs.push_back(load_log(p, model.state_schema));
    if (logs.back().top_event != model.top_event())
      throw DomainError(p + ": log top event '" + logs.back().top_event + "' does not match model top event '" +
                        model.top_event() + "'");
  }
  auto select = [&](auto&& keep) {
    std::vector<EpisodeLog> chosen;
    for (const auto& l : logs)
      if (keep(l)) chosen.push_back(l);
    return merge_logs(chosen);
  };

  std::vector<std::string> problems;
  for (auto& node : model.nodes) {
    try {
      if (node.is_barrier()) {
        FusionMode fusion = node.function ? node.function->fusion : FusionMode::raw_clamped;
        if (fusion_flag == "normalized") fusion = FusionMode::normalized;
        else if (fusion_flag == "raw_clamped") fusion = FusionMode::raw_clamped;
        EpisodeLog log;
        if (auto threat = guarding_threat(model, node.id)) {
          // Logs isolated to the guarded threat; without any, the protocol
          // check in the estimator reports the problem.
          log = select([&](const EpisodeLog& l) { return l.isolate == *threat; });
          if (log.episodes.empty()) log = select([](const EpisodeLog&) { return true; });
        } else {
          log = select([](const EpisodeLog&) { return true; });
        }
        node.function = fit_barrier(log, model, node.id, factor_variables(node), PooledBase{}, fusion);
      } else if (node.role == EventRole::threat) {
        const EpisodeLog log = select([&](const EpisodeLog& l) { return !l.isolate || *l.isolate == node.id; });
        node.function = fit_threat(log, model, node.id, factor_variables(node));
      }
    } catch (const DomainError& e) {
      problems.push_back(node.id + ": " + e.what());
    } catch (const ProtocolError& e) {
      problems.push_back(node.id + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "fit failed for " << p << "\n";
    return kDomain;
  }
  emit(g, "fitted.btd.json", dump_model(model));
  return kOk;
}

int cmd_assess(const Globals& g, const std::string& model_path, const std::string& trace_path, std::size_t window,
               double horizon) {
  const RiskEngine engine(load_model(model_path));
  const StateTrace states = load_state_trace(trace_path, engine.model());
  for (const auto& w : states.warnings) std::cerr << "warning: " << w << "\n";
  const RiskTrace trace = assess_stream(engine, states.rows, window, horizon);
  for (const auto& e : trace.errors) std::cerr << "t=" << format_number(e.timestamp) << ": " << e.message << "\n";
  emit(g, "risk_trace.csv", dump_risk_trace(trace));
  std::size_t violated = 0;
  for (const auto& s : trace.samples) violated += s.verdict == Verdict::violated;
  std::cerr << trace.samples.size() << " samples, " << violated << " over threshold, " << trace.errors.size()
            << " skipped\n";
  return kOk;
}

// Columns: scene_id, observed, and estimated_rate or trace (a risk trace
// path, relative to the CSV). With two files the first holds the estimates
// and the second the observed counts, matched by scene_id.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& source) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ParseError(source + ": missing column '" + name + "'");
  }
  bool has(const std::string& name) const { return std::find(header.begin(), header.end(), name) != header.end(); }
};

Table read_table(const std::string& path) {
  Table t;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) throw ParseError(path + ": wrong number of cells", line_no, 1);
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw ParseError(path + ": empty table");
  return t;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("invalid " + what + " '" + s + "'");
}

std::uint64_t to_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError("invalid " + what + " '" + s + "'");
  return std::stoull(s);
}

double trace_average(const fs::path& path, const std::string& consequence_flag) {
  const RiskTrace trace = load_risk_trace(path);
  std::string consequence = consequence_flag;
  if (consequence.empty()) {
    for (const auto& s : trace.samples) {
      if (consequence.empty()) consequence = s.consequence;
      else if (consequence != s.consequence)
        throw DomainError(path.string() + ": several consequences; choose one with --consequence");
    }
  }
  const auto samples = trace.for_consequence(consequence);
  if (samples.empty()) throw DomainError(path.string() + ": no samples for consequence '" + consequence + "'");
  if (samples.size() == 1) return samples.front().raw_rate;
  return average_rate(trace, samples.front().timestamp, samples.back().timestamp, consequence);
}

int cmd_evaluate(const Globals& g, const std::vector<std::string>& inputs, const std::string& consequence,
                 double exposure, double bin_width, double subset_max) {
  const Table est = read_table(inputs.front());
  const fs::path base = fs::path(inputs.front()).parent_path();
  const std::size_t id_col = est.column("scene_id", inputs.front());

  std::vector<double> rates;
  std::vector<std::string> ids;
  for (const auto& row : est.rows) {
    ids.push_back(row[id_col]);
    if (est.has("estimated_rate")) {
      rates.push_back(to_double(row[est.column("estimated_rate", inputs.front())], "estimated_rate"));
    } else {
      rates.push_back(trace_average(base / row[est.column("trace", inputs.front())], consequence));
    }
  }

  const Table obs = inputs.size() > 1 ? read_table(inputs[1]) : est;
  const std::string& obs_source = inputs.size() > 1 ? inputs[1] : inputs.front();
  const std::size_t obs_col = obs.column("observed", obs_source);
  const std::size_t obs_id = obs.column("scene_id", obs_source);
  std::vector<std::uint64_t> counts;
  for (const auto& row : obs.rows) counts.push_back(to_count(row[obs_col], "observed count"));

  auto scenes = pair_outcomes(rates, counts);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (obs.rows[i][obs_id] != ids[i])
      throw DomainError("scene " + std::to_string(i + 1) + ": id '" + ids[i] + "' in the estimates but '" +
                        obs.rows[i][obs_id] + "' in the observations");
    scenes[i].scene_id = ids[i];
  }
  const auto summary = evaluate_outcomes(std::move(scenes), exposure, bin_width, subset_max);
  emit(g, "evaluation.txt", format_summary(summary, output_format(g)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic bow-tie risk assessment"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->default_val(0);
  app.add_option("--out", g.out, "Output file (default: $BTRISK_OUT_DIR/<name>, else stdout)");
  app.add_option("--format", g.format, "Summary format")->check(CLI::IsMember({"text", "delimited"}));

  std::string model_path, input_path, truth_path, isolate, fusion, consequence;
  std::vector<std::string> paths;
  std::size_t count = 1, episodes = 1000, window = 20;
  double horizon = 1.0, exposure = 1.0, bin_width = 0.25, subset_max = 1.0;

  auto* validate_cmd = app.add_subcommand("validate", "Check a bow-tie model");
  validate_cmd->add_option("model", model_path, "Model file")->required();

  auto* sample_cmd = app.add_subcommand("sample", "Sample scene configurations from an SDL file");
  sample_cmd->add_option("sdl", input_path, "Scene description")->required();
  sample_cmd->add_option("--count", count, "Number of samples")->default_val(1);

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate episodes from a ground truth");
  simulate_cmd->add_option("truth", truth_path, "Ground-truth file")->required();
  simulate_cmd->add_option("model", model_path, "Model file")->required();
  simulate_cmd->add_option("--episodes", episodes, "Number of episodes")->default_val(1000);
  simulate_cmd->add_option("--isolate", isolate, "Only this threat may occur");

  auto* fit_cmd = app.add_subcommand("fit", "Fit conditional functions from episode logs");
  fit_cmd->add_option("model", model_path, "Model file")->required();
  fit_cmd->add_option("logs", paths, "Episode logs")->required();
  fit_cmd->add_option("--fusion", fusion, "Barrier fusion mode")->check(CLI::IsMember({"raw_clamped", "normalized"}));

  auto* assess_cmd = app.add_subcommand("assess", "Assess a state trace");
  assess_cmd->add_option("model", model_path, "Model file")->required();
  assess_cmd->add_option("trace", input_path, "State trace CSV")->required();
  assess_cmd->add_option("--window", window, "Moving-average window (samples)")->default_val(20)->check(
      CLI::PositiveNumber);
  assess_cmd->add_option("--horizon", horizon, "Likelihood horizon (minutes)")->default_val(1.0);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare estimated rates with observed counts");
  evaluate_cmd->add_option("inputs", paths, "Outcomes CSV, or estimates CSV then observed CSV")
      ->required()
      ->expected(1, 2);
  evaluate_cmd->add_option("--consequence", consequence, "Consequence to read from risk traces");
  evaluate_cmd->add_option("--exposure", exposure, "Minutes per scene")->default_val(1.0);
  evaluate_cmd->add_option("--bin-width", bin_width, "Bin width over estimated rate")->default_val(0.25);
  evaluate_cmd->add_option("--subset-max", subset_max, "Upper estimated rate of the subset fit")->default_val(1.0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(g, model_path);
    if (*sample_cmd) return cmd_sample(g, input_path, count);
    if (*simulate_cmd) return cmd_simulate(g, truth_path, model_path, episodes, isolate);
    if (*fit_cmd) return cmd_fit(g, model_path, paths, fusion);
    if (*assess_cmd) return cmd_assess(g, model_path, input_path, window, horizon);
    if (*evaluate_cmd) return cmd_evaluate(g, paths, consequence, exposure, bin_width, subset_max);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  }
  return kUsage;
}
