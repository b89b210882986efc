#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "appeval/detfn.hpp"
#include "appeval/error.hpp"
#include "appeval/synth.hpp"

using namespace appeval;

namespace {

std::vector<WeightedDistance> weighted(const std::vector<double>& r) {
  std::vector<WeightedDistance> out;
  for (double x : r) out.push_back({x, 1.0});
  return out;
}

std::vector<WeightedDistance> draw(const KeyFunction& key, double w, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return weighted(synth::sample_distances(key, w, n, rng));
}

std::vector<double> uniform_edges(double w, int bins) {
  std::vector<double> e(bins + 1);
  for (int i = 0; i <= bins; ++i) e[i] = w * i / bins;
  e.back() = w;
  return e;
}

}  // namespace

TEST(KeyFunction, Examples) {
  EXPECT_EQ(eval_key(KeyFunction::half_normal(7.0), 0.0), 1.0);
  EXPECT_NEAR(eval_key(KeyFunction::half_normal(7.0), 7.0), 0.6065306597126334, 1e-15);
  EXPECT_EQ(eval_key(KeyFunction::hazard_rate(5.0, 3.0), 0.0), 1.0);
  EXPECT_NEAR(eval_key(KeyFunction::hazard_rate(5.0, 3.0), 5.0), 0.6321205588285577, 1e-15);
  EXPECT_THROW(KeyFunction::half_normal(0.0), Error);
  EXPECT_THROW(KeyFunction::hazard_rate(5.0, 1.0), Error);
  EXPECT_THROW(KeyFunction::half_normal(2.0).shape_b(), Error);
}

TEST(KeyFunction, ParseFamily) {
  EXPECT_EQ(parse_key_family("hn"), KeyFamily::HalfNormal);
  EXPECT_EQ(parse_key_family("Hazard-Rate"), KeyFamily::HazardRate);
  EXPECT_EQ(to_string(KeyFamily::HalfNormal), "half-normal");
  EXPECT_THROW(parse_key_family("cosine"), UsageError);
}

TEST(KeyFunction, MonotoneNonIncreasing) {
  const std::vector<KeyFunction> keys = {KeyFunction::half_normal(0.5), KeyFunction::half_normal(7.0),
                                         KeyFunction::hazard_rate(5.0, 1.01), KeyFunction::hazard_rate(5.0, 3.0),
                                         KeyFunction::hazard_rate(2.0, 40.0)};
  for (const auto& key : keys) {
    double prev = eval_key(key, 0.0);
    for (int i = 1; i <= 4000; ++i) {
      const double g = eval_key(key, i * 0.01);
      EXPECT_LE(g, prev);
      EXPECT_GE(g, 0.0);
      prev = g;
    }
  }
}

TEST(DetectionProbability, Examples) {
  EXPECT_NEAR(detection_probability(KeyFunction::half_normal(1.0), 1.0), 0.7869386805747332, 1e-15);
  EXPECT_NEAR(detection_probability(KeyFunction::hazard_rate(5.0, 3.0), 15.0), 0.22392629493727266, 1e-9);
  EXPECT_NEAR(detection_probability(KeyFunction::half_normal(1e9), 20.0), 1.0, 1e-9);
  EXPECT_LE(detection_probability(KeyFunction::half_normal(1e12), 20.0), 1.0);
}

TEST(DetectionProbability, ClosedFormMatchesQuadratureOnGrid) {
  for (int i = 0; i < 20; ++i) {
    const double sigma = 0.5 * std::pow(1.35, i);
    for (int j = 0; j < 20; ++j) {
      const double w = 1.0 + 2.5 * j;
      const auto key = KeyFunction::half_normal(sigma);
      EXPECT_NEAR(detection_probability(key, w), detection_probability_quadrature(key, w), 1e-8)
          << "sigma=" << sigma << " w=" << w;
    }
  }
}

TEST(DetectionProbability, HazardRateMatchesMonteCarlo) {
  const auto key = KeyFunction::hazard_rate(6.0, 2.5);
  const double w = 20.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = eval_key(key, w * std::sqrt(u(rng)));
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_NEAR(detection_probability(key, w), mean, 3.0 * se);
}

TEST(FitMle, RejectsDegenerateInput) {
  const auto zeros = weighted({0.0, 0.0, 0.0, 0.0});
  EXPECT_THROW(fit_mle(zeros, KeyFamily::HalfNormal, 20.0), FitError);
  EXPECT_THROW(fit_mle(zeros, KeyFamily::HazardRate, 20.0), FitError);
  EXPECT_THROW(fit_mle(std::vector<WeightedDistance>{}, KeyFamily::HalfNormal, 20.0), FitError);
}

TEST(FitMle, RecoversHalfNormalSigma) {
  const auto data = draw(KeyFunction::half_normal(7.0), 20.0, 5000, 11);
  const auto fit = fit_mle(data, KeyFamily::HalfNormal, 20.0);
  EXPECT_TRUE(fit.convergence.converged);
  EXPECT_NEAR(fit.key.sigma(), 7.0, 0.35);
  EXPECT_EQ(fit.n_used, 5000);
  EXPECT_NEAR(fit.aic, 2.0 - 2.0 * fit.log_likelihood, 1e-9);
  EXPECT_DOUBLE_EQ(fit.detection_prob, detection_probability(fit.key, 20.0));
}

TEST(FitMle, RecoversHazardRate) {
  const auto data = draw(KeyFunction::hazard_rate(6.0, 3.0), 20.0, 20000, 12);
  const auto fit = fit_mle(data, KeyFamily::HazardRate, 20.0);
  EXPECT_TRUE(fit.convergence.converged);
  EXPECT_NEAR(fit.key.sigma(), 6.0, 0.4);
  EXPECT_NEAR(fit.key.shape_b(), 3.0, 0.4);
}

TEST(FitBinned, NoiselessCountsRecoverSigma) {
  const double w = 20.0;
  const auto truth = KeyFunction::half_normal(7.0);
  const auto edges = uniform_edges(w, 8);
  const double total = integrate_rg(truth, 0.0, w);
  std::vector<double> counts;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    counts.push_back(10000.0 * integrate_rg(truth, edges[i], edges[i + 1]) / total);
  const auto fit = fit_binned(edges, counts, KeyFamily::HalfNormal, w);
  EXPECT_TRUE(fit.binned);
  EXPECT_NEAR(fit.key.sigma(), 7.0, 1e-4);
}

TEST(FitBinned, RejectsSingleOccupiedBin) {
  const std::vector<double> edges = {0, 10, 20};
  const std::vector<double> counts = {5, 0};
  EXPECT_THROW(fit_binned(edges, counts, KeyFamily::HalfNormal, 20.0), FitError);
}

TEST(FitMle, CountExpansionInvariance) {
  const std::vector<WeightedDistance> compact = {{2.0, 3.0}, {5.5, 1.0}, {9.0, 2.0}, {13.0, 1.0}};
  std::vector<WeightedDistance> expanded;
  for (const auto& d : compact)
    for (int i = 0; i < static_cast<int>(d.weight); ++i) expanded.push_back({d.distance_m, 1.0});
  for (auto family : {KeyFamily::HalfNormal, KeyFamily::HazardRate}) {
    const auto a = fit_mle(compact, family, 20.0);
    const auto b = fit_mle(expanded, family, 20.0);
    EXPECT_NEAR(a.key.sigma(), b.key.sigma(), 1e-9 * b.key.sigma());
    EXPECT_NEAR(a.log_likelihood, b.log_likelihood, 1e-9 * std::abs(b.log_likelihood));
    EXPECT_EQ(a.n_used, b.n_used);
  }
}

TEST(FitMle, LocalOptimumAgainstPerturbations) {
  const double w = 20.0;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  const auto hn_data = draw(KeyFunction::half_normal(7.0), w, 2000, 21);
  const auto hn = fit_mle(hn_data, KeyFamily::HalfNormal, w);
  for (int i = 0; i < 100; ++i) {
    const auto k = KeyFunction::half_normal(hn.key.sigma() * jitter(rng));
    EXPECT_GE(hn.log_likelihood, log_likelihood(k, hn_data, w));
  }
  const auto hr_data = draw(KeyFunction::hazard_rate(6.0, 3.0), w, 2000, 22);
  const auto hr = fit_mle(hr_data, KeyFamily::HazardRate, w);
  EXPECT_NEAR(hr.log_likelihood, log_likelihood(hr.key, hr_data, w), 1e-9 * std::abs(hr.log_likelihood));
  for (int i = 0; i < 100; ++i) {
    const auto k = KeyFunction::hazard_rate(hr.key.sigma() * jitter(rng), hr.key.shape_b() * jitter(rng));
    EXPECT_GE(hr.log_likelihood, log_likelihood(k, hr_data, w));
  }
}

TEST(FitMle, FineBinsApproachExactFit) {
  const double w = 20.0;
  const auto data = draw(KeyFunction::half_normal(7.0), w, 5000, 31);
  const auto edges = uniform_edges(w, 200);
  for (auto family : {KeyFamily::HalfNormal, KeyFamily::HazardRate}) {
    const auto exact = fit_mle(data, family, w);
    const auto binned = fit_mle(data, family, w, edges);
    EXPECT_TRUE(binned.binned);
    EXPECT_LT(std::abs(binned.key.sigma() - exact.key.sigma()) / exact.key.sigma(), 0.01) << to_string(family);
  }
}

TEST(FitMle, RisingDistancesHitTheBound) {
  // Density rising faster than r: no decreasing key fits, sigma runs to the box edge.
  std::vector<double> r;
  for (int i = 1; i <= 400; ++i) r.push_back(20.0 * std::cbrt(i / 401.0));
  const auto fit = fit_mle(weighted(r), KeyFamily::HalfNormal, 20.0);
  EXPECT_TRUE(fit.convergence.at_bound);
  EXPECT_GT(fit.detection_prob, 0.99);
}

TEST(BinDistances, LastBinClosed) {
  const std::vector<double> edges = {0, 5, 10};
  const auto counts = bin_distances(weighted({0.0, 4.99, 5.0, 10.0}), edges);
  EXPECT_EQ(counts, (std::vector<double>{2.0, 2.0}));
}

TEST(SelectByAic, Examples) {
  DetectionFit a, b;
  a.aic = 100.0;
  b.aic = 101.9;
  std::vector<DetectionFit> one = {a};
  EXPECT_EQ(&select_by_aic(one), &one[0]);
  std::vector<DetectionFit> two = {b, a};
  EXPECT_EQ(select_by_aic(two).aic, 100.0);
  DetectionFit hr;
  hr.key = KeyFunction::hazard_rate(5.0, 3.0);
  hr.aic = 100.0;
  std::vector<DetectionFit> tie = {hr, a};
  EXPECT_EQ(select_by_aic(tie).key.family(), KeyFamily::HalfNormal);
  DetectionFit a2 = a;
  a2.log_likelihood = -1.0;
  std::vector<DetectionFit> same = {a2, a};
  EXPECT_EQ(&select_by_aic(same), &same[0]);
  EXPECT_THROW(select_by_aic(std::vector<DetectionFit>{}), Error);
}
