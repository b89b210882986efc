#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "appeval/clsmetrics.hpp"
#include "appeval/ctds.hpp"
#include "appeval/gaze.hpp"
#include "appeval/mvgeo.hpp"

namespace appeval::report {

using Json = nlohmann::ordered_json;

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

/// Fixed-point rendering used for every displayed number.
std::string fixed(double value, int decimals);

/// {"file": basename, "sha256": digest}
Json input_entry(const std::string& path);

/// Header shared by every report.
Json header(const std::string& command);

Json estimate_json(const EstimateResult& r, int row);
Json comparison_json(const ScenarioComparison& c);

struct CtdsReportInput {
  Json inputs;
  Json settings;
  std::vector<EstimateResult> estimates;
  std::vector<ScenarioComparison> comparisons;
  std::vector<std::string> warnings;
};
Json ctds_report(const CtdsReportInput& in);

struct PoseReportInput {
  Json inputs;
  Json settings;
  std::string label;
  std::optional<TriangulationReport> triangulation;
  KeypointMetrics keypoints;
  GazeEvaluation gaze;
  double threshold_deg = kDefaultGazeThresholdDeg;
  std::vector<std::string> warnings;
};
Json pose_report(const PoseReportInput& in);

Json cls_report(const Json& inputs, const PredictionTable& table, const APResult& result);

/// Plain-text tables rendered solely from the JSON documents above.
std::string render_ctds_text(const Json& report);
std::string render_pose_text(const Json& report);
std::string render_cls_text(const Json& report);

}  // namespace appeval::report
