#include "appeval/commands.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "appeval/clsmetrics.hpp"
#include "appeval/ctds.hpp"
#include "appeval/error.hpp"
#include "appeval/gaze.hpp"
#include "appeval/mvgeo.hpp"
#include "appeval/report.hpp"
#include "appeval/synth.hpp"

namespace appeval {
namespace {

namespace fs = std::filesystem;
using report::Json;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !(v > 0.0)) throw std::invalid_argument(s);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("invalid PCK fraction '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("--pck needs at least one fraction");
  return out;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(path + ": cannot open config file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

// Joins a config-relative path against the config's directory.
std::string resolve(const std::string& config_path, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(config_path).parent_path() / p).string();
}

std::string list_from_json(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  std::string out;
  for (const auto& x : v) {
    if (!out.empty()) out += ",";
    out += x.is_string() ? x.get<std::string>() : x.dump();
  }
  return out;
}

void write_outputs(const std::string& dir, const std::string& stem, const Json& report, const std::string& text,
                   std::ostream& out) {
  out << text;
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream json_out(fs::path(dir) / (stem + "_report.json"), std::ios::binary);
  std::ofstream text_out(fs::path(dir) / (stem + "_report.txt"), std::ios::binary);
  if (!json_out || !text_out) throw DataError(dir + ": cannot write report files");
  json_out << report.dump(2) << "\n";
  text_out << text;
}

struct CtdsArgs {
  std::string config, observations, clips, locations, out, scenarios, keyfns;
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

int cmd_ctds(const CtdsArgs& a, std::ostream& out) {
  const Json extra = read_json_file(a.config);
  const SurveyConfig config = SurveyConfig::from_json_file(a.config);
  const fs::path dir = fs::path(a.config).parent_path();
  auto pick = [&](const std::string& flag, const char* name) {
    return flag.empty() ? (dir / name).string() : flag;
  };
  const SurveyPaths paths{pick(a.observations, "observations.csv"), pick(a.clips, "clips.csv"),
                          pick(a.locations, "locations.csv")};

  int replicates = 999;
  std::uint64_t seed = 0;
  std::string scenarios = "none,manual,auto", keyfns = "hn,hr";
  if (extra.contains("replicates")) replicates = extra["replicates"].get<int>();
  if (extra.contains("seed")) seed = extra["seed"].get<std::uint64_t>();
  if (extra.contains("scenarios")) scenarios = list_from_json(extra["scenarios"]);
  if (extra.contains("keyfns")) keyfns = list_from_json(extra["keyfns"]);
  if (a.replicates) replicates = *a.replicates;
  if (a.seed) seed = *a.seed;
  if (!a.scenarios.empty()) scenarios = a.scenarios;
  if (!a.keyfns.empty()) keyfns = a.keyfns;
  if (replicates != 0 && replicates < 100) throw UsageError("--replicates must be 0 (point estimate) or >= 100");

  std::vector<FilterScenario> scenario_list;
  for (const auto& s : split_list(scenarios)) {
    const auto sc = parse_scenario(s);
    if (std::find(scenario_list.begin(), scenario_list.end(), sc) == scenario_list.end()) scenario_list.push_back(sc);
  }
  std::vector<KeyFamily> families;
  for (const auto& s : split_list(keyfns)) {
    const auto f = parse_key_family(s);
    if (std::find(families.begin(), families.end(), f) == families.end()) families.push_back(f);
  }
  if (scenario_list.empty() || families.empty()) throw UsageError("no scenarios or key functions selected");

  const Survey survey = load_survey_files(paths, config);

  report::CtdsReportInput in;
  in.inputs = Json{{"config", report::input_entry(a.config)},
                   {"observations", report::input_entry(paths.observations)},
                   {"clips", report::input_entry(paths.clips)},
                   {"locations", report::input_entry(paths.locations)}};
  const std::string provenance = in.inputs["observations"]["sha256"].get<std::string>();
  Json sc = Json::array(), kf = Json::array();
  for (auto s : scenario_list) sc.push_back(std::string(to_string(s)));
  for (auto f : families) kf.push_back(std::string(to_string(f)));
  in.settings = Json{{"replicates", replicates},
                     {"seed", seed},
                     {"scenarios", sc},
                     {"key_functions", kf},
                     {"truncation_radius_m", config.truncation_radius_m},
                     {"view_angle_rad", config.view_angle_rad},
                     {"snapshot_interval_s", config.snapshot_interval_s},
                     {"study_area_km2", config.study_area_km2},
                     {"distance_bins", config.distance_bin_edges_m ? Json(*config.distance_bin_edges_m) : Json(nullptr)},
                     {"availability_correction", "none"},
                     {"n_locations", survey.locations().size()},
                     {"n_clips", survey.clips().size()},
                     {"n_observations", survey.observations().size()}};

  const BootstrapOptions options{replicates, seed, a.threads};
  for (auto family : families) {
    std::optional<EstimateResult> manual;
    std::vector<EstimateResult> rows;
    for (auto s : scenario_list) {
      EstimateResult r = analyse(survey, s, family, options);
      r.provenance = provenance;
      if (r.fit.convergence.at_bound)
        in.warnings.push_back(std::string(to_string(family)) + "/" + std::string(to_string(s)) +
                              ": detection-function optimum lies on the parameter search boundary");
      if (r.bootstrap_failures > 0)
        in.warnings.push_back(std::string(to_string(family)) + "/" + std::string(to_string(s)) + ": " +
                              std::to_string(r.bootstrap_failures) + " bootstrap replicates failed and were dropped");
      if (s == FilterScenario::Manual) manual = r;
      rows.push_back(r);
    }
    for (const auto& r : rows) in.estimates.push_back(r);
    if (manual)
      for (const auto& r : rows)
        if (r.scenario != FilterScenario::Manual) in.comparisons.push_back(compare_scenarios(*manual, r));
  }
  const Json doc = report::ctds_report(in);
  write_outputs(a.out, "ctds", doc, report::render_ctds_text(doc), out);
  return 0;
}

struct PoseArgs {
  std::string config, calibration, pred2d, pred3d, gt, keypoints, pck, out, label;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  int min_views = 0;
  int threads = 0;
};

int cmd_pose(PoseArgs a, std::ostream& out) {
  double threshold = kDefaultGazeThresholdDeg;
  int min_views = 2;
  std::string keypoints = "beak,nose,left_eye,right_eye", pck = "0.05,0.10", label = "prediction";
  if (!a.config.empty()) {
    const Json c = read_json_file(a.config);
    auto str_key = [&](const char* key, std::string& field, bool path) {
      if (field.empty() && c.contains(key)) field = path ? resolve(a.config, c[key].get<std::string>()) : list_from_json(c[key]);
    };
    str_key("calibration", a.calibration, true);
    str_key("pred2d", a.pred2d, true);
    str_key("pred3d", a.pred3d, true);
    str_key("gt", a.gt, true);
    str_key("keypoints", a.keypoints, false);
    str_key("pck", a.pck, false);
    str_key("label", a.label, false);
    if (c.contains("threshold_deg")) threshold = c["threshold_deg"].get<double>();
    if (c.contains("min_views")) min_views = c["min_views"].get<int>();
  }
  if (a.threshold) threshold = *a.threshold;
  if (a.min_views > 0) min_views = a.min_views;
  if (!a.keypoints.empty()) keypoints = a.keypoints;
  if (!a.pck.empty()) pck = a.pck;
  if (!a.label.empty()) label = a.label;

  if (a.gt.empty()) throw UsageError("pose: --gt is required");
  if (a.pred2d.empty() == a.pred3d.empty()) throw UsageError("pose: give exactly one of --pred2d or --pred3d");
  if (!a.pred2d.empty() && a.calibration.empty()) throw UsageError("pose: --pred2d requires --calibration");
  if (min_views < 2) throw UsageError("pose: --min-views must be >= 2");
  const auto fractions = parse_fractions(pck);
  const auto names = split_list(keypoints);
  if (names.empty()) throw UsageError("pose: --keypoints is empty");
  const std::set<std::string> subset(names.begin(), names.end());

  report::PoseReportInput in;
  std::optional<Calibration> calibration;
  double scale = 1.0;
  if (!a.calibration.empty()) {
    calibration = load_calibration(a.calibration);
    scale = calibration->to_mm();
    in.inputs["calibration"] = report::input_entry(a.calibration);
  }
  in.inputs["gt"] = report::input_entry(a.gt);
  const auto gt = load_keypoints3d_file(a.gt, scale);
  std::vector<KeypointFrame3D> pred;
  if (!a.pred2d.empty()) {
    in.inputs["pred2d"] = report::input_entry(a.pred2d);
    const auto frames2d = load_keypoints2d_file(a.pred2d);
    auto tri = triangulate_frames(*calibration, frames2d, static_cast<std::size_t>(min_views), a.threads);
    for (auto& f : tri.frames)
      for (auto& [n, p] : f.points) p *= scale;
    pred = tri.frames;
    if (tri.n_insufficient_views > 0)
      in.warnings.push_back(std::to_string(tri.n_insufficient_views) + " keypoints seen in too few views");
    if (tri.n_degenerate > 0)
      in.warnings.push_back(std::to_string(tri.n_degenerate) + " keypoints with degenerate triangulation geometry");
    in.triangulation = std::move(tri);
  } else {
    in.inputs["pred3d"] = report::input_entry(a.pred3d);
    pred = load_keypoints3d_file(a.pred3d, scale);
  }

  in.label = label;
  in.threshold_deg = threshold;
  in.keypoints = keypoint_metrics(pred, gt, subset, fractions, a.threads);
  in.gaze = evaluate_gaze(pred, gt, {}, a.threads);
  if (in.keypoints.n_excluded > 0)
    in.warnings.push_back(std::to_string(in.keypoints.n_excluded) + " keypoints present on only one side were excluded");
  if (in.gaze.summary.n_degenerate > 0)
    in.warnings.push_back(std::to_string(in.gaze.summary.n_degenerate) + " frames with degenerate head keypoints skipped");
  if (in.gaze.summary.n_gimbal > 0)
    in.warnings.push_back(std::to_string(in.gaze.summary.n_gimbal) + " frames in gimbal lock (yaw holds yaw/roll combination)");
  Json kp = Json::array();
  for (const auto& n : subset) kp.push_back(n);
  in.settings = Json{{"keypoints", kp},
                     {"pck_fractions", fractions},
                     {"head_frame_keypoints", {"left_eye", "right_eye", "beak"}},
                     {"min_views", min_views},
                     {"world_unit", calibration ? calibration->world_unit : "mm"},
                     {"threshold_deg", threshold}};
  const Json doc = report::pose_report(in);
  write_outputs(a.out, "pose", doc, report::render_pose_text(doc), out);
  return 0;
}

int cmd_clsmetrics(const std::string& predictions, const std::string& dir, std::ostream& out) {
  const auto table = load_predictions_file(predictions);
  const auto result = macro_map(table.predictions, table.labels);
  const Json doc = report::cls_report(Json{{"predictions", report::input_entry(predictions)}}, table, result);
  write_outputs(dir, "clsmetrics", doc, report::render_cls_text(doc), out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Application-specific evaluation: camera-trap distance sampling and 3D head-rotation metrics",
               "appeval"};
  app.set_version_flag("--version", std::string(APPEVAL_VERSION));
  app.require_subcommand(1);

  CtdsArgs ctds;
  auto* c = app.add_subcommand("ctds", "Density and abundance under clip-filtering scenarios");
  c->add_option("--config", ctds.config, "Survey config JSON")->required();
  c->add_option("--observations", ctds.observations, "observations.csv (default: next to config)");
  c->add_option("--clips", ctds.clips, "clips.csv (default: next to config)");
  c->add_option("--locations", ctds.locations, "locations.csv (default: next to config)");
  c->add_option("--out", ctds.out, "Directory for ctds_report.json / .txt");
  c->add_option("--seed", ctds.seed, "Bootstrap seed");
  c->add_option("--replicates", ctds.replicates, "Bootstrap replicates (0: point estimates only)");
  c->add_option("--scenarios", ctds.scenarios, "Comma list of none,manual,auto");
  c->add_option("--keyfns", ctds.keyfns, "Comma list of hn,hr");
  c->add_option("--threads", ctds.threads, "Worker threads (0: all cores)");

  PoseArgs pose;
  auto* p = app.add_subcommand("pose", "Keypoint metrics and head-rotation errors");
  p->add_option("--config", pose.config, "Pose config JSON");
  p->add_option("--calibration", pose.calibration, "calibration.json");
  p->add_option("--pred2d", pose.pred2d, "Predicted keypoints2d.csv (triangulated first)");
  p->add_option("--pred3d", pose.pred3d, "Predicted keypoints3d.csv");
  p->add_option("--gt", pose.gt, "Ground-truth keypoints3d.csv");
  p->add_option("--keypoints", pose.keypoints, "Keypoint subset for ML metrics");
  p->add_option("--pck", pose.pck, "PCK fractions, e.g. 0.05,0.10");
  p->add_option("--label", pose.label, "Method name shown in the table");
  p->add_option("--threshold", pose.threshold, "Gaze acceptability threshold in degrees");
  p->add_option("--min-views", pose.min_views, "Minimum views per triangulated keypoint");
  p->add_option("--out", pose.out, "Directory for pose_report.json / .txt");
  p->add_option("--seed", pose.seed, "Accepted for interface symmetry; pose evaluation is deterministic");
  p->add_option("--threads", pose.threads, "Worker threads (0: all cores)");

  std::string cls_predictions, cls_out;
  auto* m = app.add_subcommand("clsmetrics", "Per-class AP and macro mAP");
  m->add_option("--predictions,predictions", cls_predictions, "predictions.csv")->required();
  m->add_option("--out", cls_out, "Directory for clsmetrics_report.json / .txt");

  auto* s = app.add_subcommand("synth", "Synthetic-truth generators");
  s->require_subcommand(1);
  std::string sc_config, sc_out, sr_config, sr_out;
  std::optional<std::uint64_t> sc_seed, sr_seed;
  auto* sc = s->add_subcommand("ctds", "Generate a camera-trap survey");
  sc->add_option("--config", sc_config, "Truth JSON")->required();
  sc->add_option("--out", sc_out, "Output directory")->required();
  sc->add_option("--seed", sc_seed, "Override the truth seed");
  auto* sr = s->add_subcommand("rig", "Generate a multi-camera rig and keypoint trajectory");
  sr->add_option("--config", sr_config, "Rig JSON")->required();
  sr->add_option("--out", sr_out, "Output directory")->required();
  sr->add_option("--seed", sr_seed, "Override the rig seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c) return cmd_ctds(ctds, out);
    if (*p) return cmd_pose(pose, out);
    if (*m) return cmd_clsmetrics(cls_predictions, cls_out, out);
    if (*sc) {
      auto truth = synth::CtdsScenarioTruth::from_json_file(sc_config);
      if (sc_seed) truth.seed = *sc_seed;
      const auto data = synth::gen_ctds(truth);
      synth::write_ctds(data, truth, sc_out);
      out << "wrote " << data.survey.observations().size() << " observations from " << truth.n_cameras
          << " cameras to " << sc_out << "\n";
      return 0;
    }
    if (*sr) {
      auto spec = synth::RigSpec::from_json_file(sr_config);
      if (sr_seed) spec.seed = *sr_seed;
      const auto data = synth::gen_rig(synth::make_rig(spec));
      synth::write_rig(data, sr_out);
      out << "wrote " << data.calibration.cameras.size() << " cameras and " << data.gt3d.size() << " frames to "
          << sr_out << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed configuration: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace appeval
