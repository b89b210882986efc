#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace appeval {

enum class KeyFamily { HalfNormal, HazardRate };

/// "half-normal" / "hazard-rate".
std::string_view to_string(KeyFamily family);
/// Accepts hn, halfnormal, half-normal, hr, hazardrate, hazard-rate (case-insensitive).
KeyFamily parse_key_family(std::string_view text);

struct HalfNormal {
  double sigma;
  bool operator==(const HalfNormal&) const = default;
};

struct HazardRate {
  double sigma;
  double shape_b;
  bool operator==(const HazardRate&) const = default;
};

/// Detection key function g(r). Parameters are validated on construction:
/// sigma > 0 for both families, b > 1 for the hazard rate.
class KeyFunction {
 public:
  static KeyFunction half_normal(double sigma);
  static KeyFunction hazard_rate(double sigma, double shape_b);

  KeyFamily family() const;
  int parameter_count() const { return family() == KeyFamily::HalfNormal ? 1 : 2; }
  double sigma() const;
  /// Hazard-rate shape; throws for the half-normal.
  double shape_b() const;

  const std::variant<HalfNormal, HazardRate>& params() const { return params_; }

  bool operator==(const KeyFunction&) const = default;

 private:
  explicit KeyFunction(std::variant<HalfNormal, HazardRate> p) : params_(p) {}
  std::variant<HalfNormal, HazardRate> params_;
};

/// g(r) for r >= 0, with g(0) = 1.
double eval_key(const KeyFunction& key, double r);

/// Integral of s * g(s) over [a, b]. Closed form for the half-normal,
/// adaptive quadrature (absolute tolerance 1e-10) for the hazard rate.
double integrate_rg(const KeyFunction& key, double a, double b);

/// Point-transect average detection probability P = (2 / w^2) * int_0^w r g(r) dr.
double detection_probability(const KeyFunction& key, double w);

/// Same quantity by adaptive quadrature regardless of family.
double detection_probability_quadrature(const KeyFunction& key, double w);

struct Convergence {
  bool converged = false;
  int iterations = 0;
  bool at_bound = false;  // optimum sits on the search-box edge (e.g. sigma -> infinity)
};

struct DetectionFit {
  KeyFunction key = KeyFunction::half_normal(1.0);
  double log_likelihood = 0.0;
  double aic = 0.0;
  std::int64_t n_used = 0;
  double detection_prob = 0.0;  // P-hat
  Convergence convergence;
  bool binned = false;
};

/// One distance with a positive multiplicity.
struct WeightedDistance {
  double distance_m;
  double weight;
};

/// Maximum-likelihood fit of a key function to point-transect distances truncated at w.
/// Exact-distance likelihood when bin_edges is empty, multinomial over bins otherwise.
DetectionFit fit_mle(std::span<const WeightedDistance> distances, KeyFamily family, double w,
                     std::span<const double> bin_edges = {});

/// Multinomial fit on pre-binned totals; counts may be non-integer.
DetectionFit fit_binned(std::span<const double> bin_edges, std::span<const double> bin_counts, KeyFamily family,
                        double w);

/// Counts per bin for [e_i, e_{i+1}), the last bin closed at w.
std::vector<double> bin_distances(std::span<const WeightedDistance> distances, std::span<const double> bin_edges);

/// Exact-mode log-likelihood of the given key for the data.
double log_likelihood(const KeyFunction& key, std::span<const WeightedDistance> distances, double w);
/// Binned-mode log-likelihood.
double log_likelihood_binned(const KeyFunction& key, std::span<const double> bin_edges,
                             std::span<const double> bin_counts, double w);

/// Minimum AIC; ties go to fewer parameters, then to the earlier entry.
const DetectionFit& select_by_aic(std::span<const DetectionFit> fits);

}  // namespace appeval
