#include "btrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iterator>
#include <limits>
#include <numeric>

#include "btrisk/errors.hpp"

namespace btrisk {

double attenuate(double rate, std::span<const double> barrier_probs) {
  double out = rate;
  for (double p : barrier_probs) out *= 1.0 - p;
  return out;
}

RiskEngine::RiskEngine(BowTie model) : model_(std::move(model)) {
  const auto report = validate(model_);
  if (!report.empty()) {
    std::string msg = "model '" + model_.hazard + "' is not a valid bow tie:";
    for (const auto& v : report) msg += " " + to_string(v.code);
    throw DomainError(msg);
  }
  auto resolve = [this](const std::string& head, const std::vector<std::string>& barriers) {
    Chain c;
    c.head = head;
    const Node& h = model_.node(head);
    if (h.function) c.head_function = &*h.function;
    for (const auto& b : barriers) c.barriers.push_back(&*model_.node(b).function);
    return c;
  };
  threat_ids_ = model_.threats();
  consequence_ids_ = model_.consequences();
  for (const auto& t : threat_ids_) prevention_.push_back(resolve(t, prevention_chain(model_, t)));
  for (const auto& c : consequence_ids_) recovery_.push_back(resolve(c, recovery_chain(model_, c)));
}

double RiskEngine::survive(const Chain& chain, const StateVector& state) const {
  double out = 1.0;
  for (const auto* fn : chain.barriers) out *= 1.0 - evaluate_barrier(*fn, state);
  return out;
}

const RiskEngine::Chain& RiskEngine::find_chain(const std::vector<Chain>& chains, const std::string& id,
                                                const char* what) const {
  for (const auto& c : chains)
    if (c.head == id) return c;
  throw LookupError("'" + id + "' is not a " + what);
}

double RiskEngine::threat_contribution(const std::string& threat, const StateVector& state) const {
  const Chain& c = find_chain(prevention_, threat, "threat");
  return evaluate_threat_rate(*c.head_function, state) * survive(c, state);
}

double RiskEngine::top_event_rate(const StateVector& state) const {
  double total = 0.0;
  for (const auto& c : prevention_) total += evaluate_threat_rate(*c.head_function, state) * survive(c, state);
  return total;
}

double RiskEngine::consequence_rate(const std::string& consequence, const StateVector& state) const {
  const Chain& c = find_chain(recovery_, consequence, "consequence");
  return top_event_rate(state) * survive(c, state);
}

std::vector<double> RiskEngine::consequence_rates(const StateVector& state) const {
  const double top = top_event_rate(state);
  std::vector<double> out;
  out.reserve(recovery_.size());
  for (const auto& c : recovery_) out.push_back(top * survive(c, state));
  return out;
}

double top_event_rate(const BowTie& model, const StateVector& state) {
  return RiskEngine(model).top_event_rate(state);
}

double consequence_rate(const BowTie& model, const std::string& consequence, const StateVector& state) {
  return RiskEngine(model).consequence_rate(consequence, state);
}

namespace {

MarginalResult exhaustive_marginal(const RiskEngine& engine, const std::string& consequence,
                                   const StatePrior& prior) {
  struct Axis {
    std::string name;
    std::vector<std::pair<std::string, double>> cells;
  };
  std::vector<Axis> axes;
  for (const auto& name : engine.model().referenced_variables()) {
    const Marginal* m = prior.find(name);
    if (!m) throw DomainError("prior does not cover variable '" + name + "'");
    const auto* d = std::get_if<DiscreteMarginal>(m);
    if (!d) throw DomainError("exhaustive marginalization needs discrete variables; '" + name + "' is continuous");
    Axis axis{name, {}};
    for (const auto& [label, p] : d->mass)
      if (p > 0.0) axis.cells.emplace_back(label, p);
    if (axis.cells.empty()) throw DomainError("prior for '" + name + "' has no positive mass");
    axes.push_back(std::move(axis));
  }

  std::vector<std::size_t> digit(axes.size(), 0);
  MarginalResult out;
  out.exact = true;
  StateVector state;
  while (true) {
    double weight = 1.0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      state[axes[i].name] = axes[i].cells[digit[i]].first;
      weight *= axes[i].cells[digit[i]].second;
    }
    out.rate += weight * engine.consequence_rate(consequence, state);
    ++out.samples;
    std::size_t i = 0;
    while (i < axes.size() && ++digit[i] == axes[i].cells.size()) digit[i++] = 0;
    if (i == axes.size()) break;
  }
  return out;
}

std::vector<std::string> draw_order(const RiskEngine& engine, const StatePrior& prior) {
  auto order = engine.model().referenced_variables();
  for (const auto& name : order)
    if (!prior.find(name)) throw DomainError("prior does not cover variable '" + name + "'");
  return order;
}

MarginalResult summarize(const std::vector<double>& values) {
  MarginalResult out;
  out.samples = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  out.rate = mean;
  if (values.size() > 1)
    out.standard_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  return out;
}

}  // namespace

MarginalResult marginal_consequence_rate_serial(const RiskEngine& engine, const std::string& consequence,
                                                const StatePrior& prior, const MonteCarlo& mode) {
  if (mode.samples == 0) throw DomainError("Monte-Carlo marginalization needs at least one sample");
  const auto order = draw_order(engine, prior);
  std::vector<double> values(mode.samples);
  for (std::size_t i = 0; i < mode.samples; ++i) {
    Rng rng(mode.seed, i);
    values[i] = engine.consequence_rate(consequence, prior.draw(order, rng));
  }
  return summarize(values);
}

MarginalResult marginal_consequence_rate(const RiskEngine& engine, const std::string& consequence,
                                         const StatePrior& prior, const MarginalMode& mode) {
  if (std::holds_alternative<Exhaustive>(mode)) return exhaustive_marginal(engine, consequence, prior);
  const auto& mc = std::get<MonteCarlo>(mode);
  if (mc.samples == 0) throw DomainError("Monte-Carlo marginalization needs at least one sample");
  const auto order = draw_order(engine, prior);
  // Validate the consequence id before entering the parallel region.
  if (std::find(engine.consequences().begin(), engine.consequences().end(), consequence) ==
      engine.consequences().end())
    throw LookupError("'" + consequence + "' is not a consequence");

  std::vector<double> values(mc.samples);
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(mc.samples);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      Rng rng(mc.seed, static_cast<std::uint64_t>(i));
      values[static_cast<std::size_t>(i)] = engine.consequence_rate(consequence, prior.draw(order, rng));
    } catch (...) {
#pragma omp critical(btrisk_marginal_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return summarize(values);
}

double poisson_likelihood(double rate, double horizon_minutes) {
  return -std::expm1(-rate * horizon_minutes);
}

namespace {

// Mean of [first, last), summed as offsets from the newest value so that a
// constant window averages to exactly that constant.
template <typename It>
double window_mean(It first, It last) {
  const double ref = *std::prev(last);
  double offset = 0.0;
  std::size_t n = 0;
  for (; first != last; ++first, ++n) offset += *first - ref;
  return ref + offset / static_cast<double>(n);
}

}  // namespace

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw DomainError("moving average window must be >= 1");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    out[i] = window_mean(values.begin() + first, values.begin() + i + 1);
  }
  return out;
}

std::string to_string(Verdict v) { return v == Verdict::ok ? "ok" : "violated"; }

std::vector<RiskSample> RiskTrace::for_consequence(const std::string& consequence) const {
  std::vector<RiskSample> out;
  for (const auto& s : samples)
    if (s.consequence == consequence) out.push_back(s);
  return out;
}

double average_rate(const RiskTrace& trace, double t1, double t2, const std::string& consequence) {
  if (!(t1 < t2)) throw DomainError("average_rate needs t1 < t2");
  const auto points = trace.for_consequence(consequence);
  if (points.empty()) throw DomainError("no samples for consequence '" + consequence + "'");
  if (t1 < points.front().timestamp || t2 > points.back().timestamp)
    throw DomainError("averaging span lies outside the trace");

  auto value_at = [&](std::size_t i, double t) {
    const auto& a = points[i];
    const auto& b = points[i + 1];
    const double w = (t - a.timestamp) / (b.timestamp - a.timestamp);
    return a.raw_rate + w * (b.raw_rate - a.raw_rate);
  };

  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double lo = std::max(points[i].timestamp, t1);
    const double hi = std::min(points[i + 1].timestamp, t2);
    if (!(hi > lo)) continue;
    integral += 0.5 * (value_at(i, lo) + value_at(i, hi)) * (hi - lo);
  }
  return integral / (t2 - t1);
}

StreamAssessor::StreamAssessor(const RiskEngine& engine, std::size_t window, double horizon_minutes,
                               std::map<std::string, double> thresholds)
    : engine_(engine),
      window_(window),
      horizon_(horizon_minutes),
      thresholds_(std::move(thresholds)),
      recent_(engine.consequences().size()) {
  if (window_ == 0) throw DomainError("moving average window must be >= 1");
  if (!(horizon_ > 0.0)) throw DomainError("likelihood horizon must be > 0");
}

std::vector<RiskSample> StreamAssessor::push(double timestamp, const StateVector& state) {
  if (started_ && !(timestamp > last_time_))
    throw StreamError("timestamp " + to_string(StateValue{timestamp}) + " does not follow " +
                      to_string(StateValue{last_time_}));
  started_ = true;
  last_time_ = timestamp;

  const auto rates = engine_.consequence_rates(state);
  const auto& ids = engine_.consequences();
  std::vector<RiskSample> out;
  out.reserve(ids.size());
  for (std::size_t c = 0; c < ids.size(); ++c) {
    auto& window = recent_[c];
    window.push_back(rates[c]);
    if (window.size() > window_) window.pop_front();

    RiskSample s;
    s.timestamp = timestamp;
    s.consequence = ids[c];
    s.raw_rate = rates[c];
    s.smoothed_rate = window_mean(window.begin(), window.end());
    s.likelihood = poisson_likelihood(s.smoothed_rate, horizon_);
    auto limit = thresholds_.find(ids[c]);
    const double threshold = limit == thresholds_.end() ? std::numeric_limits<double>::infinity() : limit->second;
    s.verdict = s.smoothed_rate > threshold ? Verdict::violated : Verdict::ok;
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, double> model_thresholds(const BowTie& model) {
  std::map<std::string, double> out;
  for (const auto& c : model.consequences()) out[c] = model.acceptable_rate(c);
  return out;
}

RiskTrace assess_stream(const RiskEngine& engine, std::span<const TimedState> states, std::size_t window,
                        double horizon_minutes, const std::map<std::string, double>& thresholds) {
  StreamAssessor assessor(engine, window, horizon_minutes, thresholds);
  RiskTrace trace;
  for (const auto& [t, state] : states) {
    try {
      auto samples = assessor.push(t, state);
      trace.samples.insert(trace.samples.end(), samples.begin(), samples.end());
    } catch (const StreamError&) {
      throw;
    } catch (const Error& e) {
      trace.errors.push_back({t, e.what()});
    }
  }
  return trace;
}

RiskTrace assess_stream(const RiskEngine& engine, std::span<const TimedState> states, std::size_t window,
                        double horizon_minutes) {
  return assess_stream(engine, states, window, horizon_minutes, model_thresholds(engine.model()));
}

namespace {

// log P(k | lambda * T); -inf when the rate is zero but k > 0.
double poisson_logpmf(std::uint64_t k, double mean) {
  const double kd = static_cast<double>(k);
  if (mean <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return kd * std::log(mean) - mean - std::lgamma(kd + 1.0);
}

}  // namespace

LikelihoodComparison loglik_compare(std::span<const double> rates, std::span<const std::uint64_t> counts,
                                    double exposure_minutes) {
  if (rates.size() != counts.size()) throw DomainError("rates and counts differ in length");
  if (!(exposure_minutes > 0.0)) throw DomainError("exposure must be > 0");
  if (rates.empty()) throw DomainError("no scenes to compare");

  LikelihoodComparison out;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0,
                                       [](double acc, std::uint64_t k) { return acc + static_cast<double>(k); });
  out.static_rate = total / (static_cast<double>(counts.size()) * exposure_minutes);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] < 0.0) throw DomainError("negative scene rate");
    if (rates[i] == 0.0 && counts[i] > 0) ++out.impossible_scenes;
    out.dynamic_loglik += poisson_logpmf(counts[i], rates[i] * exposure_minutes);
    out.static_loglik += poisson_logpmf(counts[i], out.static_rate * exposure_minutes);
  }
  out.ratio = out.dynamic_loglik - out.static_loglik;
  return out;
}

}  // namespace btrisk
