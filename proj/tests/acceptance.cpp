// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "appeval/clsmetrics.hpp"
#include "appeval/commands.hpp"
#include "appeval/ctds.hpp"
#include "appeval/detfn.hpp"
#include "appeval/error.hpp"
#include "appeval/gaze.hpp"
#include "appeval/mvgeo.hpp"
#include "appeval/stats.hpp"
#include "appeval/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace appeval;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

synth::CtdsScenarioTruth survey_truth() {
  return synth::CtdsScenarioTruth::from_json_file(std::string(APPEVAL_DATA_DIR) + "/ctds_truth.json");
}

Outcome ctds_recovery() {
  const auto t0 = Clock::now();
  auto truth = survey_truth();
  int within = 0;
  double snapshots = 0.0;
  for (int run = 0; run < 100; ++run) {
    truth.seed = 1000 + run;
    const auto data = synth::gen_ctds(truth);
    snapshots = data.survey.total_effort();
    const auto r = analyse(data.survey, FilterScenario::None, KeyFamily::HalfNormal, {0, 0, 1});
    if (std::abs(r.density - truth.true_density_per_km2) <= 0.05 * truth.true_density_per_km2) ++within;
  }
  const double secs = seconds_since(t0);
  return {within >= 90 && secs < 60.0 && snapshots >= 5e4,
          std::to_string(within) + "/100 runs within 5% (" + fmt("%.3g", snapshots) + " snapshot moments, " +
              fmt("%.1f", secs) + " s)"};
}

Outcome bootstrap_coverage() {
  const auto t0 = Clock::now();
  auto truth = survey_truth();
  int covered = 0;
  for (int run = 0; run < 100; ++run) {
    truth.seed = 5000 + run;
    const auto data = synth::gen_ctds(truth);
    const auto r = analyse(data.survey, FilterScenario::None, KeyFamily::HalfNormal,
                           {999, static_cast<std::uint64_t>(run), 0});
    if (r.ci95_density->low <= truth.true_density_per_km2 && truth.true_density_per_km2 <= r.ci95_density->high)
      ++covered;
  }
  const double secs = seconds_since(t0);
  return {covered >= 88 && covered <= 99 && secs < 600.0,
          std::to_string(covered) + "/100 intervals contain the true density (" + fmt("%.1f", secs) + " s)"};
}

Outcome published_arithmetic() {
  auto pct = [](double base, double alt, KeyFamily family) {
    EstimateResult b, a;
    b.key_family = a.key_family = family;
    b.abundance = base;
    a.abundance = alt;
    b.density = a.density = 1.0;
    return std::round(compare_scenarios(b, a).pct_diff_abundance * 100.0) / 100.0;
  };
  const double hr = pct(1680, 2029, KeyFamily::HazardRate);
  const double hn = pct(1954, 2235, KeyFamily::HalfNormal);
  return {hr == 20.77 && hn == 14.38, "hazard-rate " + fmt("%+.2f%%", hr) + ", half-normal " + fmt("%+.2f%%", hn)};
}

Outcome detection_probability_oracles() {
  double worst_grid = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double sigma = 0.25 * std::pow(1.4, i), w = 1.0 + 3.0 * j;
      const auto key = KeyFunction::half_normal(sigma);
      worst_grid = std::max(worst_grid,
                            std::abs(detection_probability(key, w) - detection_probability_quadrature(key, w)));
    }
  const std::vector<std::tuple<double, double, double>> sets = {
      {5, 3, 15}, {7, 2, 20}, {3, 1.5, 10}, {10, 5, 20}, {2, 1.2, 25},
      {6, 8, 12}, {15, 2.5, 30}, {4, 4, 8}, {8, 1.05, 20}, {1, 3, 5}};
  double worst_z = 0.0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& [sigma, b, w] : sets) {
    const auto key = KeyFunction::hazard_rate(sigma, b);
    const int n = 10000000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = eval_key(key, w * std::sqrt(u(rng)));
      sum += g;
      sum_sq += g * g;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / (n - 1.0));
    worst_z = std::max(worst_z, std::abs(detection_probability(key, w) - mean) / se);
  }
  return {worst_grid <= 1e-8 && worst_z <= 3.0,
          "half-normal max |closed - quadrature| " + fmt("%.2e", worst_grid) + "; hazard-rate max |z| " +
              fmt("%.2f", worst_z) + " over 10 sets"};
}

Outcome mle_consistency() {
  const double w = 20.0, sigma = 7.0;
  const auto key = KeyFunction::half_normal(sigma);
  std::vector<double> medians;
  for (std::size_t n : {500u, 5000u, 50000u}) {
    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed * 7919 + n);
      std::vector<WeightedDistance> data;
      for (double r : synth::sample_distances(key, w, n, rng)) data.push_back({r, 1.0});
      errors.push_back(std::abs(fit_mle(data, KeyFamily::HalfNormal, w).key.sigma() - sigma) / sigma);
    }
    medians.push_back(stats::median(errors));
  }
  return {medians[0] > medians[1] && medians[1] > medians[2],
          "median relative error " + fmt("%.4f", medians[0]) + " > " + fmt("%.4f", medians[1]) + " > " +
              fmt("%.4f", medians[2])};
}

Outcome ap_oracle() {
  std::mt19937_64 rng(6);
  int agree = 0, tied = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto items = oracle::random_instance(rng, 20);
    std::set<double> scores;
    for (const auto& it : items) scores.insert(it.score);
    if (scores.size() < items.size()) ++tied;
    const double expected = oracle::brute_force_ap(items).value();
    if (std::abs(average_precision(items) - expected) <= 4.0 * std::numeric_limits<double>::epsilon() * expected)
      ++agree;
  }
  return {agree == 1000, std::to_string(agree) + "/1000 instances agree with the rational oracle (" +
                             std::to_string(tied) + " with ties)"};
}

Outcome triangulation_round_trip() {
  synth::RigSpec spec;
  spec.n_frames = 556;
  spec.n_individuals = 2;
  const auto data = synth::gen_rig(synth::make_rig(spec));
  const auto rep = triangulate_frames(data.calibration, data.keypoints2d, 2, 0);
  double worst = 0.0;
  std::size_t points = 0;
  for (std::size_t i = 0; i < rep.frames.size(); ++i)
    for (const auto& [name, p] : rep.frames[i].points) {
      worst = std::max(worst, (p - data.gt3d[i].points.at(name)).norm());
      ++points;
    }
  bool degenerate_raised = false;
  const auto& cam = data.calibration.cameras[0];
  const Vector3<double> X(100.0, 200.0, 300.0);
  const std::vector<View<double>> twins = {{cam.projection, project<double>(cam.projection, X)},
                                           {cam.projection, project<double>(cam.projection, X)}};
  try {
    triangulate<double>(twins);
  } catch (const GeometryError&) {
    degenerate_raised = true;
  }
  return {points >= 10000 && worst <= 1e-6 && degenerate_raised,
          std::to_string(points) + " points, max error " + fmt("%.2e", worst) + " mm; identical cameras " +
              (degenerate_raised ? "raise" : "do not raise") + " the degeneracy error"};
}

Outcome euler_round_trip() {
  constexpr double deg = std::numbers::pi / 180.0;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle(-180.0, 180.0), pitch(-89.0, 89.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double y = angle(rng), p = pitch(rng), r = angle(rng);
    const auto e = euler_from_rotation<double>(rotation_from_euler(y * deg, p * deg, r * deg));
    auto diff = [](double a, double b) { return std::abs(std::remainder(a - b, 360.0)); };
    worst = std::max({worst, diff(e.yaw / deg, y), diff(e.pitch / deg, p), diff(e.roll / deg, r)});
  }
  const HeadFrame<double> gt{Vector3<double>::Zero(), Matrix3<double>::Identity()};
  const HeadFrame<double> pred{Vector3<double>::Zero(), rotation_from_euler(5.0 * deg, 0.0, 0.0)};
  const auto e = rotation_error(pred, gt);
  const bool yaw_ok = std::abs(e.yaw_deg - 5.0) <= 1e-9 && e.pitch_deg <= 1e-9 && e.roll_deg <= 1e-9;
  return {worst <= 1e-9 && yaw_ok, "max round-trip error " + fmt("%.2e", worst) + " deg over 1e5 triples; pure yaw (" +
                                       fmt("%.9f", e.yaw_deg) + ", " + fmt("%.1e", e.pitch_deg) + ", " +
                                       fmt("%.1e", e.roll_deg) + ")"};
}

Outcome gaze_threshold() {
  AngularErrorSummary good, bad;
  good.median_deg_pooled = 3.34;
  bad.median_deg_pooled = 5.01;
  const bool a = gaze_acceptable(good), b = gaze_acceptable(bad);
  return {a && !b, std::string("3.34 deg ") + (a ? "acceptable" : "unacceptable") + ", 5.01 deg " +
                       (b ? "acceptable" : "unacceptable")};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "appeval");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome end_to_end_determinism() {
  const auto root = appeval::testing::scratch_dir("acceptance_determinism");
  auto truth = survey_truth();
  truth.n_cameras = 20;
  truth.operating_time_s = {1.5e6};
  truth.seed = 99;
  synth::write_ctds(synth::gen_ctds(truth), truth, (root / "survey").string());
  synth::RigSpec spec;
  spec.n_frames = 40;
  spec.pixel_noise_px = 1.0;
  spec.seed = 12;
  synth::write_rig(synth::gen_rig(synth::make_rig(spec)), (root / "rig").string());

  const std::string config = (root / "survey" / "config.json").string();
  const std::string rig = (root / "rig").string();
  std::vector<std::string> runs = {"t1a", "t1b", "t8"};
  for (const auto& run : runs) {
    const std::string threads = run == "t8" ? "8" : "1";
    if (cli({"ctds", "--config", config, "--seed", "42", "--replicates", "199", "--threads", threads, "--out",
             (root / run).string()}) != 0)
      return {false, "ctds run failed"};
    if (cli({"pose", "--calibration", rig + "/calibration.json", "--pred2d", rig + "/keypoints2d.csv", "--gt",
             rig + "/keypoints3d.csv", "--seed", "42", "--threads", threads, "--out", (root / run).string()}) != 0)
      return {false, "pose run failed"};
  }
  int identical = 0, compared = 0;
  for (const char* f : {"ctds_report.json", "ctds_report.txt", "pose_report.json", "pose_report.txt"}) {
    const auto ref = appeval::testing::read_text(root / "t1a" / f);
    for (const char* other : {"t1b", "t8"}) {
      ++compared;
      if (!ref.empty() && appeval::testing::read_text(root / other / f) == ref) ++identical;
    }
  }
  return {identical == compared, std::to_string(identical) + "/" + std::to_string(compared) +
                                     " report files byte-identical (repeat run and 1 vs 8 threads)"};
}

Outcome metric_mismatch() {
  synth::RigSpec spec;
  spec.n_frames = 200;
  spec.seed = 21;
  const auto gt = synth::gen_rig(synth::make_rig(spec)).gt3d;
  const std::set<std::string> head(synth::kHeadKeypoints.begin(), synth::kHeadKeypoints.end());
  const std::vector<double> pck = {0.05, 0.10};
  const auto eye = synth::perturb_along_eye_axis(gt, 3.0, 1);
  const auto iso = synth::perturb_isotropic(gt, 2.0, synth::kHeadKeypoints, 2);
  const auto eye_kp = keypoint_metrics(eye, gt, head, pck);
  const auto iso_kp = keypoint_metrics(iso, gt, head, pck);
  const auto eye_g = evaluate_gaze(eye, gt).summary;
  const auto iso_g = evaluate_gaze(iso, gt).summary;
  const bool rmse_prefers_eye = eye_kp.rmse_mm < iso_kp.rmse_mm;
  const bool yaw_prefers_iso = iso_g.median_yaw_deg < eye_g.median_yaw_deg;
  return {rmse_prefers_eye && yaw_prefers_iso,
          "eye-axis predictor RMSE " + fmt("%.2f", eye_kp.rmse_mm) + " mm, median yaw " +
              fmt("%.2f", eye_g.median_yaw_deg) + " deg; isotropic predictor RMSE " + fmt("%.2f", iso_kp.rmse_mm) +
              " mm, median yaw " + fmt("%.2f", iso_g.median_yaw_deg) + " deg"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"CTDS point-estimate recovery", ctds_recovery},
      {"bootstrap CI coverage", bootstrap_coverage},
      {"published percent differences", published_arithmetic},
      {"detection probability oracles", detection_probability_oracles},
      {"MLE consistency in n", mle_consistency},
      {"AP equals brute-force oracle", ap_oracle},
      {"triangulation round trip", triangulation_round_trip},
      {"Euler decomposition round trip", euler_round_trip},
      {"gaze threshold annotation", gaze_threshold},
      {"end-to-end determinism", end_to_end_determinism},
      {"keypoint vs rotation metric mismatch", metric_mismatch},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
