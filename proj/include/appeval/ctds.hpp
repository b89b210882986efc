#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "appeval/detfn.hpp"
#include "appeval/survey.hpp"

namespace appeval {

struct Interval {
  double low = 0.0;
  double high = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Density (individuals / km^2) and abundance for one scenario and key family.
/// Uncertainty fields are empty for point estimates.
struct EstimateResult {
  double density = 0.0;
  double abundance = 0.0;
  std::optional<double> se_density;
  std::optional<double> se_abundance;
  std::optional<Interval> ci95_density;
  std::optional<Interval> ci95_abundance;
  FilterScenario scenario = FilterScenario::None;
  KeyFamily key_family = KeyFamily::HalfNormal;
  std::int64_t n_obs_used = 0;
  int bootstrap_replicates = 0;  // effective (successful) replicates
  int bootstrap_failures = 0;
  DetectionFit fit;
  std::string provenance;  // free-form survey label; compared by compare_scenarios when both set

  bool operator==(const EstimateResult& o) const;
};

struct ScenarioComparison {
  EstimateResult baseline;
  EstimateResult alternative;
  double pct_diff_abundance = 0.0;
  double pct_diff_density = 0.0;
};

/// Distances of a survey as weighted points (weight = count).
std::vector<WeightedDistance> distances_of(const Survey& survey);

/// Fits the key family to a truncated survey, binned when the config carries bin edges.
DetectionFit fit_survey(const Survey& survey, KeyFamily family);

/// D = n / ((theta / 2) w^2 P sum_k e_k), converted to km^-2; N = D A.
/// The survey must already be filtered and truncated.
EstimateResult estimate(const Survey& survey, const DetectionFit& fit,
                        FilterScenario scenario = FilterScenario::None);

struct BootstrapOptions {
  int replicates = 999;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

/// Density of one bootstrap replicate (locations resampled with replacement and the
/// key refit), or nothing if the replicate cannot be fitted.
std::optional<double> bootstrap_replicate(const Survey& survey, KeyFamily family, std::uint64_t seed,
                                          std::uint64_t index);

/// Point estimate plus nonparametric location bootstrap: SE is the replicate
/// standard deviation and the 95% interval the 2.5 / 97.5 percentiles, widened
/// if needed so it contains the point estimate.
EstimateResult estimate_with_bootstrap(const Survey& survey, KeyFamily family, const BootstrapOptions& options,
                                       FilterScenario scenario = FilterScenario::None);

/// Replicate densities in index order; failed replicates are empty.
std::vector<std::optional<double>> bootstrap_densities(const Survey& survey, KeyFamily family,
                                                       const BootstrapOptions& options);

/// Filter, truncate, fit and estimate in one call. replicates == 0 gives a point estimate.
EstimateResult analyse(const Survey& raw, FilterScenario scenario, KeyFamily family,
                       const BootstrapOptions& options);

/// Percent differences 100 (alt - base) / base.
ScenarioComparison compare_scenarios(const EstimateResult& baseline, const EstimateResult& alternative);

}  // namespace appeval
