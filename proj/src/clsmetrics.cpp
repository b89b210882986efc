#include "appeval/clsmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "appeval/csv.hpp"
#include "appeval/error.hpp"

namespace appeval {

double average_precision(std::span<const ScoredItem> items) {
  std::vector<ScoredItem> sorted(items.begin(), items.end());
  std::size_t positives = 0;
  for (const auto& it : sorted) {
    if (!std::isfinite(it.score)) throw MetricError("average precision: scores must be finite");
    if (it.positive) ++positives;
  }
  if (positives == 0) throw MetricError("average precision is undefined without positive items");
  std::sort(sorted.begin(), sorted.end(), [](const ScoredItem& a, const ScoredItem& b) { return a.score > b.score; });

  double sum = 0.0;
  std::size_t seen = 0, hits = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i, group_hits = 0;
    for (; j < sorted.size() && sorted[j].score == sorted[i].score; ++j)
      if (sorted[j].positive) ++group_hits;
    seen += j - i;
    hits += group_hits;
    if (group_hits > 0)
      sum += static_cast<double>(group_hits) * static_cast<double>(hits) / static_cast<double>(seen);
    i = j;
  }
  return sum / static_cast<double>(positives);
}

APResult macro_map(std::span<const ScoredPrediction> predictions, std::span<const std::string> labels) {
  if (labels.empty()) throw MetricError("label set is empty");
  APResult result;
  double sum = 0.0;
  for (const auto& label : labels) {
    std::vector<ScoredItem> items;
    items.reserve(predictions.size());
    bool any_positive = false;
    for (const auto& p : predictions) {
      auto it = p.class_scores.find(label);
      if (it == p.class_scores.end())
        throw MetricError("prediction '" + p.item_id + "' has no score for class '" + label + "'");
      const bool positive = p.true_label == label;
      any_positive |= positive;
      items.push_back({it->second, positive});
    }
    if (!any_positive) throw MetricError("class '" + label + "' has no positive items; AP is undefined");
    const double ap = average_precision(items);
    result.per_class_ap[label] = ap;
    sum += ap;
  }
  result.macro_map = sum / static_cast<double>(labels.size());
  return result;
}

namespace {

PredictionTable from_table(const csv::Table& t) {
  PredictionTable out;
  const auto id_col = t.column("item_id");
  const auto label_col = t.column("true_label");
  std::vector<std::pair<std::string, std::size_t>> score_cols;
  for (std::size_t c = 0; c < t.header().size(); ++c) {
    const auto& h = t.header()[c];
    if (c == id_col || c == label_col) continue;
    if (h.rfind("score_", 0) != 0 || h.size() == 6)
      throw DataError(t.source() + ":1: unexpected column '" + h + "' (expected score_<label>)");
    score_cols.emplace_back(h.substr(6), c);
  }
  if (score_cols.empty()) throw DataError(t.source() + ":1: no score_<label> columns");
  std::set<std::string> label_set;
  for (const auto& [label, col] : score_cols) {
    if (!label_set.insert(label).second) throw DataError(t.source() + ":1: duplicate column 'score_" + label + "'");
    out.labels.push_back(label);
  }
  std::set<std::string> ids;
  for (std::size_t r = 0; r < t.size(); ++r) {
    ScoredPrediction p;
    p.item_id = t.cell(r, id_col);
    p.true_label = t.cell(r, label_col);
    if (!label_set.count(p.true_label))
      throw DataError(t.where(r) + ": true_label '" + p.true_label + "' is not a declared class");
    if (!ids.insert(p.item_id).second) throw DataError(t.where(r) + ": duplicate item_id '" + p.item_id + "'");
    for (const auto& [label, col] : score_cols) {
      const double v = t.number(r, col);
      if (v < 0.0 || v > 1.0) throw DataError(t.where(r) + ": score_" + label + " must lie in [0, 1]");
      p.class_scores[label] = v;
    }
    out.predictions.push_back(std::move(p));
  }
  return out;
}

}  // namespace

PredictionTable load_predictions(std::istream& in, const std::string& source) {
  return from_table(csv::read(in, source));
}

PredictionTable load_predictions_file(const std::string& path) { return from_table(csv::read_file(path)); }

}  // namespace appeval
