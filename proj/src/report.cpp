#include "appeval/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "appeval/error.hpp"

namespace appeval::report {
namespace {

std::string row_format(const std::vector<std::string>& cells, const std::vector<int>& widths) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string cell = cells[i];
    if (i + 1 < cells.size() && static_cast<int>(cell.size()) < widths[i]) cell.append(widths[i] - cell.size(), ' ');
    line += cell;
    if (i + 1 < cells.size()) line += "  ";
  }
  return line + "\n";
}

std::string str(const Json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

std::string signed_pct(double v) {
  std::string s = fixed(v, 2);
  if (s[0] != '-') s.insert(s.begin(), '+');
  return s + "%";
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

std::string fixed(double value, int decimals) {
  if (!std::isfinite(value)) return value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
  if (std::abs(value) < 0.5 * std::pow(10.0, -decimals)) value = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

Json input_entry(const std::string& path) {
  return Json{{"file", std::filesystem::path(path).filename().string()}, {"sha256", sha256_file(path)}};
}

Json header(const std::string& command) {
  return Json{{"tool", "appeval"}, {"version", APPEVAL_VERSION}, {"command", command}};
}

Json estimate_json(const EstimateResult& r, int row) {
  Json j;
  j["row"] = row;
  j["key_family"] = std::string(to_string(r.key_family));
  j["scenario"] = std::string(to_string(r.scenario));
  j["camera_reaction_included"] = r.scenario == FilterScenario::None;
  j["n_obs_used"] = r.n_obs_used;
  j["density_per_km2"] = r.density;
  j["se_density"] = r.se_density ? Json(*r.se_density) : Json(nullptr);
  j["ci95_density"] = r.ci95_density ? Json::array({r.ci95_density->low, r.ci95_density->high}) : Json(nullptr);
  j["abundance"] = r.abundance;
  j["se_abundance"] = r.se_abundance ? Json(*r.se_abundance) : Json(nullptr);
  j["ci95_abundance"] =
      r.ci95_abundance ? Json::array({r.ci95_abundance->low, r.ci95_abundance->high}) : Json(nullptr);
  Json det;
  det["sigma_m"] = r.fit.key.sigma();
  det["shape_b"] = r.key_family == KeyFamily::HazardRate ? Json(r.fit.key.shape_b()) : Json(nullptr);
  det["detection_prob"] = r.fit.detection_prob;
  det["log_likelihood"] = r.fit.log_likelihood;
  det["aic"] = r.fit.aic;
  det["binned"] = r.fit.binned;
  det["converged"] = r.fit.convergence.converged;
  det["iterations"] = r.fit.convergence.iterations;
  det["at_bound"] = r.fit.convergence.at_bound;
  j["detection_function"] = det;
  j["bootstrap"] = Json{{"effective_replicates", r.bootstrap_replicates}, {"failed_replicates", r.bootstrap_failures}};

  Json d;
  d["abundance"] = fixed(r.abundance, 0);
  d["se_abundance"] = r.se_abundance ? fixed(*r.se_abundance, 0) : "-";
  d["ci95_abundance_low"] = r.ci95_abundance ? fixed(r.ci95_abundance->low, 0) : "-";
  d["ci95_abundance_high"] = r.ci95_abundance ? fixed(r.ci95_abundance->high, 0) : "-";
  d["density"] = fixed(r.density, 2);
  d["se_density"] = r.se_density ? fixed(*r.se_density, 2) : "-";
  d["ci95_density_low"] = r.ci95_density ? fixed(r.ci95_density->low, 2) : "-";
  d["ci95_density_high"] = r.ci95_density ? fixed(r.ci95_density->high, 2) : "-";
  j["display"] = d;
  return j;
}

Json comparison_json(const ScenarioComparison& c) {
  Json j;
  j["key_family"] = std::string(to_string(c.baseline.key_family));
  j["baseline"] = std::string(to_string(c.baseline.scenario));
  j["alternative"] = std::string(to_string(c.alternative.scenario));
  j["pct_diff_abundance"] = c.pct_diff_abundance;
  j["pct_diff_density"] = c.pct_diff_density;
  j["display"] = Json{{"pct_diff_abundance", signed_pct(c.pct_diff_abundance)},
                      {"pct_diff_density", signed_pct(c.pct_diff_density)}};
  return j;
}

Json ctds_report(const CtdsReportInput& in) {
  Json j = header("ctds");
  j["inputs"] = in.inputs;
  j["settings"] = in.settings;
  j["estimates"] = Json::array();
  int row = 1;
  for (const auto& e : in.estimates) j["estimates"].push_back(estimate_json(e, row++));
  j["comparisons"] = Json::array();
  for (const auto& c : in.comparisons) j["comparisons"].push_back(comparison_json(c));
  j["warnings"] = in.warnings;
  return j;
}

Json pose_report(const PoseReportInput& in) {
  Json j = header("pose");
  j["inputs"] = in.inputs;
  j["settings"] = in.settings;
  j["label"] = in.label;
  if (in.triangulation) {
    j["triangulation"] = Json{{"n_triangulated", in.triangulation->n_triangulated},
                              {"n_insufficient_views", in.triangulation->n_insufficient_views},
                              {"n_degenerate", in.triangulation->n_degenerate}};
  } else {
    j["triangulation"] = nullptr;
  }
  const auto& k = in.keypoints;
  Json km;
  km["rmse_mm"] = k.rmse_mm;
  km["median_mm"] = k.median_mm;
  km["pck"] = Json::array();
  for (std::size_t i = 0; i < k.pck_fractions.size(); ++i)
    km["pck"].push_back(Json{{"fraction", k.pck_fractions[i]}, {"pct", k.pck_pct[i]}});
  km["n_points"] = k.n_points;
  km["n_excluded"] = k.n_excluded;
  j["keypoint_metrics"] = km;

  const auto& s = in.gaze.summary;
  Json ang;
  ang["rmse_deg"] = s.rmse_deg;
  ang["median_deg_pooled"] = s.median_deg_pooled;
  ang["median_geodesic_deg"] = s.median_geodesic_deg;
  ang["median_yaw_deg"] = s.median_yaw_deg;
  ang["median_pitch_deg"] = s.median_pitch_deg;
  ang["median_roll_deg"] = s.median_roll_deg;
  ang["n_frames"] = s.n_frames;
  ang["n_degenerate"] = s.n_degenerate;
  ang["n_gimbal"] = s.n_gimbal;
  ang["n_unmatched"] = in.gaze.n_unmatched;
  ang["threshold_deg"] = in.threshold_deg;
  ang["acceptable"] = gaze_acceptable(s, in.threshold_deg);
  j["angular_errors"] = ang;

  Json d;
  d["rmse_mm"] = fixed(k.rmse_mm, 1);
  d["median_mm"] = fixed(k.median_mm, 1);
  d["pck"] = Json::array();
  for (std::size_t i = 0; i < k.pck_fractions.size(); ++i)
    d["pck"].push_back(Json{{"header", "PCK" + fixed(k.pck_fractions[i] * 100.0, 0) + " (%)"},
                            {"value", fixed(k.pck_pct[i], 1)}});
  d["rmse_deg"] = fixed(s.rmse_deg, 2);
  d["median_deg_pooled"] = fixed(s.median_deg_pooled, 2);
  d["median_geodesic_deg"] = fixed(s.median_geodesic_deg, 2);
  d["median_yaw_deg"] = fixed(s.median_yaw_deg, 2);
  d["median_pitch_deg"] = fixed(s.median_pitch_deg, 2);
  d["median_roll_deg"] = fixed(s.median_roll_deg, 2);
  d["threshold_deg"] = fixed(in.threshold_deg, 2);
  j["display"] = d;
  j["warnings"] = in.warnings;
  return j;
}

Json cls_report(const Json& inputs, const PredictionTable& table, const APResult& result) {
  Json j = header("clsmetrics");
  j["inputs"] = inputs;
  j["n_items"] = table.predictions.size();
  j["labels"] = table.labels;
  Json per = Json::object();
  Json d_per = Json::object();
  for (const auto& label : table.labels) {
    per[label] = result.per_class_ap.at(label);
    d_per[label] = fixed(100.0 * result.per_class_ap.at(label), 2);
  }
  j["per_class_ap"] = per;
  j["macro_map"] = result.macro_map;
  j["display"] = Json{{"per_class_ap_pct", d_per}, {"macro_map_pct", fixed(100.0 * result.macro_map, 2)}};
  j["warnings"] = Json::array();
  return j;
}

std::string render_ctds_text(const Json& report) {
  std::ostringstream out;
  out << "CTDS density and abundance (no availability correction)\n\n";
  const std::vector<int> widths = {3, 12, 8, 15, 14, 15, 12, 12};
  out << row_format({"#", "Detection", "Removal", "Camera reaction", "Abundance; SE", "Abundance 95% CI",
                     "Density; SE", "Density 95% CI"},
                    widths);
  for (const auto& e : report.at("estimates")) {
    const auto& d = e.at("display");
    out << row_format({std::to_string(e.at("row").get<int>()), str(e.at("key_family")), str(e.at("scenario")),
                       e.at("camera_reaction_included").get<bool>() ? "Yes" : "No",
                       str(d.at("abundance")) + "; " + str(d.at("se_abundance")),
                       str(d.at("ci95_abundance_low")) + " " + str(d.at("ci95_abundance_high")),
                       str(d.at("density")) + "; " + str(d.at("se_density")),
                       str(d.at("ci95_density_low")) + " " + str(d.at("ci95_density_high"))},
                      widths);
  }
  if (!report.at("comparisons").empty()) {
    out << "\n";
    for (const auto& c : report.at("comparisons")) {
      out << str(c.at("key_family")) << ": " << str(c.at("alternative")) << " vs " << str(c.at("baseline"))
          << "  abundance " << str(c.at("display").at("pct_diff_abundance")) << "  density "
          << str(c.at("display").at("pct_diff_density")) << "\n";
    }
  }
  for (const auto& w : report.at("warnings")) out << "warning: " << str(w) << "\n";
  return out.str();
}

std::string render_pose_text(const Json& report) {
  std::ostringstream out;
  const auto& d = report.at("display");
  std::vector<std::string> head = {"Method", "RMSE (mm)", "Median (mm)"};
  std::vector<std::string> row = {str(report.at("label")), str(d.at("rmse_mm")), str(d.at("median_mm"))};
  for (const auto& p : d.at("pck")) {
    head.push_back(str(p.at("header")));
    row.push_back(str(p.at("value")));
  }
  for (const auto& h : {"RMSE Angles (deg)", "Median Angles (deg)", "Median Geodesic (deg)", "Median Yaw (deg)",
                        "Median Pitch (deg)", "Median Roll (deg)"})
    head.push_back(h);
  for (const auto* k : {"rmse_deg", "median_deg_pooled", "median_geodesic_deg", "median_yaw_deg",
                        "median_pitch_deg", "median_roll_deg"})
    row.push_back(str(d.at(k)));
  std::vector<int> widths;
  for (std::size_t i = 0; i < head.size(); ++i)
    widths.push_back(static_cast<int>(std::max(head[i].size(), row[i].size())));
  out << "Keypoint (ML) metrics | head-rotation (application) metrics\n\n";
  out << row_format(head, widths) << row_format(row, widths) << "\n";
  const auto& a = report.at("angular_errors");
  out << "Gaze estimate: " << (a.at("acceptable").get<bool>() ? "acceptable" : "NOT acceptable")
      << " (pooled median " << str(d.at("median_deg_pooled")) << " deg vs threshold " << str(d.at("threshold_deg"))
      << " deg)\n";
  out << "Frames: " << a.at("n_frames").dump() << " evaluated, " << a.at("n_degenerate").dump() << " degenerate, "
      << a.at("n_gimbal").dump() << " gimbal-locked, " << a.at("n_unmatched").dump() << " unmatched\n";
  for (const auto& w : report.at("warnings")) out << "warning: " << str(w) << "\n";
  return out.str();
}

std::string render_cls_text(const Json& report) {
  std::ostringstream out;
  const auto& d = report.at("display");
  std::size_t width = 5;
  for (const auto& [label, v] : d.at("per_class_ap_pct").items()) width = std::max(width, label.size());
  out << "Class" << std::string(width - 5 + 2, ' ') << "AP (%)\n";
  for (const auto& [label, v] : d.at("per_class_ap_pct").items())
    out << label << std::string(width - label.size() + 2, ' ') << str(v) << "\n";
  out << "macro mAP (%): " << str(d.at("macro_map_pct")) << "\n";
  return out.str();
}

}  // namespace appeval::report
