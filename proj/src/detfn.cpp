#include "appeval/detfn.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "appeval/error.hpp"
#include "appeval/optimize.hpp"
#include "appeval/quadrature.hpp"

namespace appeval {
namespace {

constexpr double kQuadratureTol = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Search box half-width in log(sigma) around log(w): sigma in [w/1000, 1000 w].
constexpr double kLogSigmaSpan = 6.907755278982137;
constexpr double kLogShapeMin = -7.0;  // b - 1 >= exp(-7)
constexpr double kLogShapeMax = 6.0;   // b <= ~404
constexpr double kParamTol = 1e-6;
constexpr int kMaxIter = 500;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double log_key(const KeyFunction& key, double r) {
  return std::visit(overloaded{[&](const HalfNormal& h) { return -r * r / (2.0 * h.sigma * h.sigma); },
                               [&](const HazardRate& h) {
                                 if (r <= 0.0) return 0.0;
                                 return std::log(-std::expm1(-std::pow(r / h.sigma, -h.shape_b)));
                               }},
                    key.params());
}

quadrature::Result integrate_rg_numeric(const KeyFunction& key, double a, double b) {
  return quadrature::integrate([&](double s) { return s * eval_key(key, s); }, a, b, kQuadratureTol);
}

struct ExactData {
  std::vector<WeightedDistance> points;
  double total_weight = 0.0;
  double sum_sq = 0.0;      // sum w r^2
  double sum_log_r = 0.0;   // sum w log r over r > 0
};

ExactData summarise(std::span<const WeightedDistance> distances, double w) {
  ExactData d;
  std::optional<double> first;
  bool two_distinct = false;
  for (const auto& p : distances) {
    if (!(p.weight > 0.0)) continue;
    if (!(p.distance_m >= 0.0) || p.distance_m > w)
      throw FitError("distance " + std::to_string(p.distance_m) + " lies outside [0, w]");
    d.points.push_back(p);
    d.total_weight += p.weight;
    d.sum_sq += p.weight * p.distance_m * p.distance_m;
    if (p.distance_m > 0.0) d.sum_log_r += p.weight * std::log(p.distance_m);
    if (!first) first = p.distance_m;
    two_distinct |= p.distance_m != *first;
  }
  if (!two_distinct)
    throw FitError("too few distinct distances to fit a detection function (need at least 2, have " +
                   std::string(first ? "1" : "0") + ")");
  return d;
}

double exact_ll(const KeyFunction& key, const ExactData& d, double w) {
  const double integral = integrate_rg(key, 0.0, w);
  if (!(integral > 0.0)) return -kInf;
  double ll = d.sum_log_r - d.total_weight * std::log(integral);
  if (key.family() == KeyFamily::HalfNormal) {
    const double s = key.sigma();
    return ll - d.sum_sq / (2.0 * s * s);
  }
  for (const auto& p : d.points) ll += p.weight * log_key(key, p.distance_m);
  return ll;
}

double binned_ll(const KeyFunction& key, std::span<const double> edges, std::span<const double> counts, double w) {
  const double total = integrate_rg(key, 0.0, w);
  if (!(total > 0.0)) return -kInf;
  double ll = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0.0) continue;
    const double cell = integrate_rg(key, edges[j], edges[j + 1]) / total;
    if (!(cell > 0.0)) return -kInf;
    ll += counts[j] * std::log(cell);
  }
  return ll;
}

KeyFunction make_key(KeyFamily family, double log_sigma, double log_shape) {
  if (family == KeyFamily::HalfNormal) return KeyFunction::half_normal(std::exp(log_sigma));
  return KeyFunction::hazard_rate(std::exp(log_sigma), 1.0 + std::exp(log_shape));
}

// Maximises ll(key) over the family's parameter box. `ll` returns the log-likelihood.
template <typename LL>
DetectionFit maximise(KeyFamily family, double w, LL&& ll) {
  const double lo = std::log(w) - kLogSigmaSpan;
  const double hi = std::log(w) + kLogSigmaSpan;
  DetectionFit fit;

  if (family == KeyFamily::HalfNormal) {
    auto objective = [&](double ls) {
      const double v = ll(make_key(family, ls, 0.0));
      return std::isfinite(v) ? -v : kInf;
    };
    // Coarse scan first so golden-section starts from a bracket around the global optimum.
    constexpr int kGrid = 64;
    const double step = (hi - lo) / (kGrid - 1);
    int best = 0;
    double best_f = kInf;
    for (int i = 0; i < kGrid; ++i) {
      const double f = objective(lo + i * step);
      if (f < best_f) {
        best_f = f;
        best = i;
      }
    }
    if (!std::isfinite(best_f)) throw FitError("log-likelihood is not finite anywhere in the search range");
    const double a = lo + std::max(best - 1, 0) * step;
    const double b = lo + std::min(best + 1, kGrid - 1) * step;
    const auto r = optimize::golden_section(objective, a, b, kParamTol, kMaxIter);
    if (!r.converged)
      throw FitError("half-normal fit did not converge after " + std::to_string(r.iterations) + " iterations");
    fit.key = make_key(family, r.x, 0.0);
    fit.log_likelihood = -r.fx;
    fit.convergence = {true, r.iterations + kGrid, r.x - lo < 1e-3 || hi - r.x < 1e-3};
  } else {
    using Vec2 = Eigen::Vector2d;
    auto objective = [&](const Vec2& p) {
      if (p[0] < lo || p[0] > hi || p[1] < kLogShapeMin || p[1] > kLogShapeMax) return kInf;
      const double v = ll(make_key(family, p[0], p[1]));
      return std::isfinite(v) ? -v : kInf;
    };
    Vec2 start(std::log(w), 0.0);
    double best_f = kInf;
    constexpr int kSigmaGrid = 16;
    constexpr std::array<double, 5> kShapeGrid = {-1.0, 0.0, 1.0, 2.0, 3.0};
    const double glo = std::log(w) - 4.6, ghi = std::log(w) + 2.3;
    for (int i = 0; i < kSigmaGrid; ++i) {
      for (double ls_b : kShapeGrid) {
        const Vec2 p(glo + i * (ghi - glo) / (kSigmaGrid - 1), ls_b);
        const double f = objective(p);
        if (f < best_f) {
          best_f = f;
          start = p;
        }
      }
    }
    if (!std::isfinite(best_f)) throw FitError("log-likelihood is not finite anywhere in the search range");
    const auto r = optimize::nelder_mead<2>(objective, start, 0.25, kParamTol, kMaxIter);
    if (!r.converged)
      throw FitError("hazard-rate fit did not converge after " + std::to_string(r.iterations) +
                     " iterations (best log-likelihood " + std::to_string(-r.fx) + ")");
    fit.key = make_key(family, r.x[0], r.x[1]);
    fit.log_likelihood = -r.fx;
    fit.convergence = {true, r.iterations, r.x[0] - lo < 1e-3 || hi - r.x[0] < 1e-3 ||
                                               r.x[1] - kLogShapeMin < 1e-3 || kLogShapeMax - r.x[1] < 1e-3};
  }
  fit.aic = 2.0 * fit.key.parameter_count() - 2.0 * fit.log_likelihood;
  fit.detection_prob = detection_probability(fit.key, w);
  return fit;
}

}  // namespace

std::string_view to_string(KeyFamily family) {
  return family == KeyFamily::HalfNormal ? "half-normal" : "hazard-rate";
}

KeyFamily parse_key_family(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "hn" || s == "hn1" || s == "halfnormal" || s == "half-normal") return KeyFamily::HalfNormal;
  if (s == "hr" || s == "hr1" || s == "hazardrate" || s == "hazard-rate") return KeyFamily::HazardRate;
  throw UsageError("unknown key function '" + std::string(text) + "' (expected hn or hr)");
}

KeyFunction KeyFunction::half_normal(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw FitError("half-normal sigma must be finite and > 0");
  return KeyFunction(HalfNormal{sigma});
}

KeyFunction KeyFunction::hazard_rate(double sigma, double shape_b) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw FitError("hazard-rate sigma must be finite and > 0");
  if (!(shape_b > 1.0) || !std::isfinite(shape_b)) throw FitError("hazard-rate shape b must be finite and > 1");
  return KeyFunction(HazardRate{sigma, shape_b});
}

KeyFamily KeyFunction::family() const {
  return std::holds_alternative<HalfNormal>(params_) ? KeyFamily::HalfNormal : KeyFamily::HazardRate;
}

double KeyFunction::sigma() const {
  return std::visit([](const auto& p) { return p.sigma; }, params_);
}

double KeyFunction::shape_b() const {
  if (const auto* h = std::get_if<HazardRate>(&params_)) return h->shape_b;
  throw FitError("half-normal key has no shape parameter");
}

double eval_key(const KeyFunction& key, double r) {
  if (r <= 0.0) return 1.0;
  return std::visit(overloaded{[&](const HalfNormal& h) { return std::exp(-r * r / (2.0 * h.sigma * h.sigma)); },
                               [&](const HazardRate& h) { return -std::expm1(-std::pow(r / h.sigma, -h.shape_b)); }},
                    key.params());
}

double integrate_rg(const KeyFunction& key, double a, double b) {
  if (const auto* h = std::get_if<HalfNormal>(&key.params())) {
    const double s2 = h->sigma * h->sigma;
    return s2 * (std::expm1(-a * a / (2.0 * s2)) - std::expm1(-b * b / (2.0 * s2)));
  }
  const auto r = integrate_rg_numeric(key, a, b);
  if (!r.converged)
    throw FitError("quadrature did not converge (error estimate " + std::to_string(r.error) +
                   "); detection-function parameters are pathological");
  return r.value;
}

double detection_probability(const KeyFunction& key, double w) {
  if (!(w > 0.0)) throw FitError("truncation radius must be > 0");
  return std::min(1.0, 2.0 * integrate_rg(key, 0.0, w) / (w * w));
}

double detection_probability_quadrature(const KeyFunction& key, double w) {
  if (!(w > 0.0)) throw FitError("truncation radius must be > 0");
  const auto r = integrate_rg_numeric(key, 0.0, w);
  if (!r.converged) throw FitError("quadrature did not converge");
  return 2.0 * r.value / (w * w);
}

std::vector<double> bin_distances(std::span<const WeightedDistance> distances, std::span<const double> edges) {
  if (edges.size() < 2) throw FitError("at least two bin edges are required");
  std::vector<double> counts(edges.size() - 1, 0.0);
  for (const auto& p : distances) {
    if (p.distance_m < edges.front() || p.distance_m > edges.back())
      throw FitError("distance " + std::to_string(p.distance_m) + " lies outside the bin range");
    auto it = std::upper_bound(edges.begin(), edges.end(), p.distance_m);
    std::size_t j = static_cast<std::size_t>(it - edges.begin()) - 1;
    if (j >= counts.size()) j = counts.size() - 1;  // r == last edge
    counts[j] += p.weight;
  }
  return counts;
}

double log_likelihood(const KeyFunction& key, std::span<const WeightedDistance> distances, double w) {
  ExactData d;
  for (const auto& p : distances) {
    d.points.push_back(p);
    d.total_weight += p.weight;
    d.sum_sq += p.weight * p.distance_m * p.distance_m;
    if (p.distance_m > 0.0) d.sum_log_r += p.weight * std::log(p.distance_m);
  }
  return exact_ll(key, d, w);
}

double log_likelihood_binned(const KeyFunction& key, std::span<const double> edges, std::span<const double> counts,
                             double w) {
  return binned_ll(key, edges, counts, w);
}

DetectionFit fit_mle(std::span<const WeightedDistance> distances, KeyFamily family, double w,
                     std::span<const double> bin_edges) {
  if (!(w > 0.0)) throw FitError("truncation radius must be > 0");
  if (!bin_edges.empty()) {
    for (const auto& p : distances)
      if (p.distance_m > w) throw FitError("distance " + std::to_string(p.distance_m) + " exceeds truncation radius");
    const auto counts = bin_distances(distances, bin_edges);
    return fit_binned(bin_edges, counts, family, w);
  }
  const ExactData data = summarise(distances, w);
  DetectionFit fit = maximise(family, w, [&](const KeyFunction& k) { return exact_ll(k, data, w); });
  fit.n_used = static_cast<std::int64_t>(std::llround(data.total_weight));
  fit.binned = false;
  return fit;
}

DetectionFit fit_binned(std::span<const double> edges, std::span<const double> counts, KeyFamily family, double w) {
  if (edges.size() != counts.size() + 1) throw FitError("bin edges and bin counts disagree in length");
  if (edges.back() != w) throw FitError("last bin edge must equal the truncation radius");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw FitError("bin edges must be strictly increasing");
  int non_empty = 0;
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw FitError("bin counts must be non-negative");
    if (c > 0.0) ++non_empty;
    total += c;
  }
  if (non_empty < 2)
    throw FitError("too few non-empty distance bins to fit a detection function (need at least 2, have " +
                   std::to_string(non_empty) + ")");
  DetectionFit fit = maximise(family, w, [&](const KeyFunction& k) { return binned_ll(k, edges, counts, w); });
  fit.n_used = static_cast<std::int64_t>(std::llround(total));
  fit.binned = true;
  return fit;
}

const DetectionFit& select_by_aic(std::span<const DetectionFit> fits) {
  if (fits.empty()) throw FitError("cannot select from an empty list of fits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < fits.size(); ++i) {
    const auto& a = fits[i];
    const auto& b = fits[best];
    if (a.aic < b.aic || (a.aic == b.aic && a.key.parameter_count() < b.key.parameter_count())) best = i;
  }
  return fits[best];
}

}  // namespace appeval
