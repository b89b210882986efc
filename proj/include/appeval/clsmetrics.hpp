#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace appeval {

struct ScoredItem {
  double score;
  bool positive;
};

/// All-points average precision: area under the step-wise precision–recall curve.
/// Items with equal scores form one threshold group; no interpolation envelope.
/// Throws MetricError when there are no positives.
double average_precision(std::span<const ScoredItem> items);

struct ScoredPrediction {
  std::string item_id;
  std::map<std::string, double> class_scores;
  std::string true_label;
};

struct APResult {
  std::map<std::string, double> per_class_ap;
  double macro_map = 0.0;
};

/// One-vs-rest AP per label and their unweighted mean.
APResult macro_map(std::span<const ScoredPrediction> predictions, std::span<const std::string> labels);

struct PredictionTable {
  std::vector<std::string> labels;  // in header order
  std::vector<ScoredPrediction> predictions;
};

/// Reads `item_id,true_label,score_<label>,...`.
PredictionTable load_predictions(std::istream& in, const std::string& source);
PredictionTable load_predictions_file(const std::string& path);

}  // namespace appeval
