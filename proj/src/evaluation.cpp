#include "btrisk/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "btrisk/errors.hpp"
#include "btrisk/trace_io.hpp"

namespace btrisk {

namespace {

constexpr std::size_t kMaxBins = 100000;

std::string fixed(double v, int digits = 6) {
  if (std::isnan(v)) return "-";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string cell(double v) { return std::isnan(v) ? std::string() : format_number(v); }

}  // namespace

std::optional<LinearFit> least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("least squares: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = n;
  return fit;
}

std::vector<RateBin> bin_outcomes(std::span<const SceneOutcome> scenes, double exposure_minutes, double width) {
  if (!(width > 0.0)) throw DomainError("bin width must be > 0");
  if (scenes.empty()) return {};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : scenes) {
    lo = std::min(lo, s.estimated_rate);
    hi = std::max(hi, s.estimated_rate);
  }
  const double start = std::floor(lo / width) * width;
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor((hi - start) / width)) + 1);
  if (n > kMaxBins) throw DomainError("bin width too small for the estimated-rate range");

  std::vector<RateBin> bins(n);
  std::vector<double> sum_est(n, 0.0), sum_obs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    bins[i].lower = start + static_cast<double>(i) * width;
    bins[i].upper = start + static_cast<double>(i + 1) * width;
  }
  for (const auto& s : scenes) {
    auto i = static_cast<std::size_t>(std::floor((s.estimated_rate - start) / width));
    i = std::min(i, n - 1);
    ++bins[i].count;
    sum_est[i] += s.estimated_rate;
    sum_obs[i] += static_cast<double>(s.observed) / exposure_minutes;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double c = static_cast<double>(bins[i].count);
    bins[i].mean_estimated = bins[i].count ? sum_est[i] / c : std::nan("");
    bins[i].mean_observed = bins[i].count ? sum_obs[i] / c : std::nan("");
  }
  return bins;
}

std::vector<SceneOutcome> pair_outcomes(std::span<const double> rates, std::span<const std::uint64_t> counts) {
  if (rates.size() != counts.size())
    throw DomainError("got " + std::to_string(rates.size()) + " rates but " + std::to_string(counts.size()) +
                      " observed counts");
  std::vector<SceneOutcome> out;
  out.reserve(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) out.push_back({std::to_string(i), rates[i], counts[i]});
  return out;
}

EvaluationSummary evaluate_outcomes(std::vector<SceneOutcome> scenes, double exposure_minutes, double bin_width,
                                    double subset_max) {
  if (scenes.empty()) throw DomainError("evaluation needs at least one scene");
  if (!(exposure_minutes > 0.0)) throw DomainError("exposure must be > 0");
  for (const auto& s : scenes)
    if (!(s.estimated_rate >= 0.0) || !std::isfinite(s.estimated_rate))
      throw DomainError("scene '" + s.scene_id + "': estimated rate must be finite and >= 0");

  EvaluationSummary out;
  out.exposure = exposure_minutes;
  out.bin_width = bin_width;
  out.subset_max = subset_max;
  out.bins = bin_outcomes(scenes, exposure_minutes, bin_width);

  std::vector<double> x, y, xs, ys;
  std::vector<std::uint64_t> counts;
  for (const auto& s : scenes) {
    const double obs = static_cast<double>(s.observed) / exposure_minutes;
    x.push_back(s.estimated_rate);
    y.push_back(obs);
    counts.push_back(s.observed);
    if (s.estimated_rate <= subset_max) {
      xs.push_back(s.estimated_rate);
      ys.push_back(obs);
    }
  }
  out.full_fit = least_squares(x, y);
  out.subset_fit = least_squares(xs, ys);
  out.loglik = loglik_compare(x, counts, exposure_minutes);
  out.scenes = std::move(scenes);
  return out;
}

std::string format_summary(const EvaluationSummary& s, OutputFormat format) {
  std::string out;
  auto fit_fields = [](const std::optional<LinearFit>& f) {
    return f ? std::vector<double>{f->slope, f->intercept, static_cast<double>(f->points)}
             : std::vector<double>{std::nan(""), std::nan(""), std::nan("")};
  };

  if (format == OutputFormat::delimited) {
    out += "# scenes\nscene_id,estimated_rate,observed\n";
    for (const auto& sc : s.scenes)
      out += sc.scene_id + "," + format_number(sc.estimated_rate) + "," + std::to_string(sc.observed) + "\n";
    out += "\n# bins\nlower,upper,count,mean_estimated,mean_observed\n";
    for (const auto& b : s.bins)
      out += format_number(b.lower) + "," + format_number(b.upper) + "," + std::to_string(b.count) + "," +
             cell(b.mean_estimated) + "," + cell(b.mean_observed) + "\n";
    out += "\n# fits\nrange,slope,intercept,points\n";
    for (const auto& [name, fit] : {std::pair{std::string("all"), s.full_fit},
                                    std::pair{"estimated<=" + format_number(s.subset_max), s.subset_fit}}) {
      const auto f = fit_fields(fit);
      out += name + "," + cell(f[0]) + "," + cell(f[1]) + "," + (fit ? std::to_string(fit->points) : "") + "\n";
    }
    out += "\n# loglik\ndynamic,static,static_rate,ratio,impossible_scenes\n";
    out += format_number(s.loglik.dynamic_loglik) + "," + format_number(s.loglik.static_loglik) + "," +
           format_number(s.loglik.static_rate) + "," + format_number(s.loglik.ratio) + "," +
           std::to_string(s.loglik.impossible_scenes) + "\n";
    return out;
  }

  out += "Scenes: " + std::to_string(s.scenes.size()) + " (exposure " + fixed(s.exposure, 3) + " min each)\n\n";
  out += pad("scene", 12) + pad("estimated", 14) + pad("observed", 10) + "\n";
  for (const auto& sc : s.scenes)
    out += pad(sc.scene_id, 12) + pad(fixed(sc.estimated_rate), 14) + pad(std::to_string(sc.observed), 10) + "\n";
  out += "\nBins (width " + fixed(s.bin_width, 3) + ")\n";
  out += pad("lower", 10) + pad("upper", 10) + pad("count", 8) + pad("mean est", 14) + pad("mean obs", 14) + "\n";
  for (const auto& b : s.bins)
    out += pad(fixed(b.lower, 3), 10) + pad(fixed(b.upper, 3), 10) + pad(std::to_string(b.count), 8) +
           pad(fixed(b.mean_estimated), 14) + pad(fixed(b.mean_observed), 14) + "\n";
  out += "\nLeast-squares fits (observed rate vs estimated rate)\n";
  auto fit_line = [&](const std::string& name, const std::optional<LinearFit>& f) {
    out += "  " + name + ": ";
    out += f ? "slope " + fixed(f->slope) + ", intercept " + fixed(f->intercept) + " over " +
                   std::to_string(f->points) + " scenes\n"
             : "not enough points\n";
  };
  fit_line("all scenes", s.full_fit);
  fit_line("estimated <= " + fixed(s.subset_max, 3), s.subset_fit);
  out += "\nLog-likelihood\n";
  out += "  dynamic: " + fixed(s.loglik.dynamic_loglik, 3) + "\n";
  out += "  static:  " + fixed(s.loglik.static_loglik, 3) + " (rate " + fixed(s.loglik.static_rate) + "/min)\n";
  out += "  ratio:   " + fixed(s.loglik.ratio, 3) + "\n";
  if (s.loglik.impossible_scenes)
    out += "  scenes with zero estimated rate but observed events: " + std::to_string(s.loglik.impossible_scenes) + "\n";
  return out;
}

}  // namespace btrisk
