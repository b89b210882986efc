#include "appeval/ctds.hpp"

#include <algorithm>
#include <random>

#include "appeval/error.hpp"
#include "appeval/parallel.hpp"
#include "appeval/stats.hpp"

namespace appeval {
namespace {

constexpr double kSquareMetresPerKm2 = 1e6;
constexpr int kMinReplicates = 100;

double sector_area_m2(const SurveyConfig& c) {
  return 0.5 * c.view_angle_rad * c.truncation_radius_m * c.truncation_radius_m;
}

double density_from(double individuals, double effort, double detection_prob, const SurveyConfig& c) {
  return individuals / (sector_area_m2(c) * detection_prob * effort) * kSquareMetresPerKm2;
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<std::vector<std::size_t>> observations_by_location(const Survey& survey) {
  std::vector<std::vector<std::size_t>> groups(survey.locations().size());
  for (std::size_t i = 0; i < survey.observations().size(); ++i) groups[survey.location_index_of(i)].push_back(i);
  return groups;
}

std::optional<double> replicate_density(const Survey& survey, const std::vector<std::vector<std::size_t>>& groups,
                                        KeyFamily family, std::uint64_t seed, std::uint64_t index) {
  auto rng = replicate_rng(seed, index);
  const std::size_t k = survey.locations().size();
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<WeightedDistance> data;
  double effort = 0.0;
  double individuals = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t loc = pick(rng);
    effort += survey.effort(loc);
    for (std::size_t o : groups[loc]) {
      const auto& obs = survey.observations()[o];
      data.push_back({obs.distance_m, static_cast<double>(obs.count)});
      individuals += static_cast<double>(obs.count);
    }
  }
  if (data.empty()) return std::nullopt;
  const auto& cfg = survey.config();
  try {
    std::span<const double> edges;
    if (cfg.distance_bin_edges_m) edges = *cfg.distance_bin_edges_m;
    const DetectionFit fit = fit_mle(data, family, cfg.truncation_radius_m, edges);
    return density_from(individuals, effort, fit.detection_prob, cfg);
  } catch (const FitError&) {
    return std::nullopt;
  }
}

}  // namespace

bool EstimateResult::operator==(const EstimateResult& o) const {
  return density == o.density && abundance == o.abundance && se_density == o.se_density &&
         se_abundance == o.se_abundance && ci95_density == o.ci95_density && ci95_abundance == o.ci95_abundance &&
         scenario == o.scenario && key_family == o.key_family && n_obs_used == o.n_obs_used &&
         bootstrap_replicates == o.bootstrap_replicates && bootstrap_failures == o.bootstrap_failures &&
         provenance == o.provenance && fit.key == o.fit.key && fit.log_likelihood == o.fit.log_likelihood;
}

std::vector<WeightedDistance> distances_of(const Survey& survey) {
  std::vector<WeightedDistance> out;
  out.reserve(survey.observations().size());
  for (const auto& o : survey.observations()) out.push_back({o.distance_m, static_cast<double>(o.count)});
  return out;
}

DetectionFit fit_survey(const Survey& survey, KeyFamily family) {
  const auto& cfg = survey.config();
  std::span<const double> edges;
  if (cfg.distance_bin_edges_m) edges = *cfg.distance_bin_edges_m;
  return fit_mle(distances_of(survey), family, cfg.truncation_radius_m, edges);
}

EstimateResult estimate(const Survey& survey, const DetectionFit& fit, FilterScenario scenario) {
  const auto& cfg = survey.config();
  const std::int64_t n = survey.total_count();
  if (n == 0) throw EstimateError("no detections remain after filtering and truncation");
  const double effort = survey.total_effort();
  if (!(effort > 0.0)) throw EstimateError("total survey effort must be > 0");
  if (!(fit.detection_prob > 0.0 && fit.detection_prob <= 1.0))
    throw EstimateError("detection probability must lie in (0, 1]");
  EstimateResult r;
  r.density = density_from(static_cast<double>(n), effort, fit.detection_prob, cfg);
  r.abundance = r.density * cfg.study_area_km2;
  r.scenario = scenario;
  r.key_family = fit.key.family();
  r.n_obs_used = n;
  r.fit = fit;
  return r;
}

std::optional<double> bootstrap_replicate(const Survey& survey, KeyFamily family, std::uint64_t seed,
                                          std::uint64_t index) {
  return replicate_density(survey, observations_by_location(survey), family, seed, index);
}

std::vector<std::optional<double>> bootstrap_densities(const Survey& survey, KeyFamily family,
                                                       const BootstrapOptions& options) {
  if (survey.locations().size() < 2)
    throw EstimateError("bootstrap needs at least 2 camera locations, survey has " +
                        std::to_string(survey.locations().size()));
  if (options.replicates < kMinReplicates)
    throw EstimateError("bootstrap needs at least " + std::to_string(kMinReplicates) + " replicates");
  const auto groups = observations_by_location(survey);
  std::vector<std::optional<double>> out(static_cast<std::size_t>(options.replicates));
  parallel_for(out.size(), options.threads, [&](std::size_t i) {
    out[i] = replicate_density(survey, groups, family, options.seed, i);
  });
  return out;
}

EstimateResult estimate_with_bootstrap(const Survey& survey, KeyFamily family, const BootstrapOptions& options,
                                       FilterScenario scenario) {
  EstimateResult r = estimate(survey, fit_survey(survey, family), scenario);
  const auto replicates = bootstrap_densities(survey, family, options);
  std::vector<double> ok;
  ok.reserve(replicates.size());
  for (const auto& d : replicates)
    if (d) ok.push_back(*d);
  const int failures = static_cast<int>(replicates.size() - ok.size());
  if (2 * failures > static_cast<int>(replicates.size()))
    throw EstimateError(std::to_string(failures) + " of " + std::to_string(replicates.size()) +
                        " bootstrap replicates failed to fit; the detection model is unstable for this survey");
  std::sort(ok.begin(), ok.end());
  const double area = survey.config().study_area_km2;
  const double se = stats::sample_sd(ok);
  Interval ci{stats::quantile_sorted(ok, 0.025), stats::quantile_sorted(ok, 0.975)};
  ci.low = std::min(ci.low, r.density);
  ci.high = std::max(ci.high, r.density);
  r.se_density = se;
  r.se_abundance = se * area;
  r.ci95_density = ci;
  r.ci95_abundance = Interval{ci.low * area, ci.high * area};
  r.bootstrap_replicates = static_cast<int>(ok.size());
  r.bootstrap_failures = failures;
  return r;
}

EstimateResult analyse(const Survey& raw, FilterScenario scenario, KeyFamily family,
                       const BootstrapOptions& options) {
  const Survey ready = truncate(apply_filter(raw, scenario));
  if (options.replicates == 0) return estimate(ready, fit_survey(ready, family), scenario);
  return estimate_with_bootstrap(ready, family, options, scenario);
}

ScenarioComparison compare_scenarios(const EstimateResult& baseline, const EstimateResult& alternative) {
  if (baseline.key_family != alternative.key_family)
    throw EstimateError("cannot compare estimates from different key functions (" +
                        std::string(to_string(baseline.key_family)) + " vs " +
                        std::string(to_string(alternative.key_family)) + ")");
  if (!baseline.provenance.empty() && !alternative.provenance.empty() &&
      baseline.provenance != alternative.provenance)
    throw EstimateError("cannot compare estimates from different surveys ('" + baseline.provenance + "' vs '" +
                        alternative.provenance + "')");
  if (baseline.abundance == 0.0 || baseline.density == 0.0)
    throw EstimateError("baseline estimate is zero; percent difference is undefined");
  ScenarioComparison c{baseline, alternative, 0.0, 0.0};
  c.pct_diff_abundance = 100.0 * (alternative.abundance - baseline.abundance) / baseline.abundance;
  c.pct_diff_density = 100.0 * (alternative.density - baseline.density) / baseline.density;
  return c;
}

}  // namespace appeval
