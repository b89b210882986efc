#include "appeval/gaze.hpp"

#include <map>
#include <optional>

#include "appeval/parallel.hpp"
#include "appeval/stats.hpp"

namespace appeval {

AngularErrorSummary angular_summary(std::span<const RotationError<double>> errors, std::size_t n_degenerate) {
  if (errors.empty()) throw MetricError("no valid frames to summarise rotation errors");
  std::vector<double> pooled, yaw, pitch, roll, geodesic;
  pooled.reserve(3 * errors.size());
  AngularErrorSummary s;
  for (const auto& e : errors) {
    pooled.insert(pooled.end(), {e.yaw_deg, e.pitch_deg, e.roll_deg});
    yaw.push_back(e.yaw_deg);
    pitch.push_back(e.pitch_deg);
    roll.push_back(e.roll_deg);
    geodesic.push_back(e.geodesic_deg);
    if (e.gimbal_lock) ++s.n_gimbal;
  }
  s.rmse_deg = stats::root_mean_square(pooled);
  s.median_deg_pooled = stats::median(pooled);
  s.median_geodesic_deg = stats::median(geodesic);
  s.median_yaw_deg = stats::median(yaw);
  s.median_pitch_deg = stats::median(pitch);
  s.median_roll_deg = stats::median(roll);
  s.n_frames = errors.size();
  s.n_degenerate = n_degenerate;
  return s;
}

bool gaze_acceptable(const AngularErrorSummary& summary, double threshold_deg) {
  return summary.median_deg_pooled <= threshold_deg;
}

GazeEvaluation evaluate_gaze(std::span<const KeypointFrame3D> pred, std::span<const KeypointFrame3D> gt,
                             const HeadKeypointNames& names, int threads) {
  std::map<std::pair<std::int64_t, std::string>, const KeypointFrame3D*> pred_index, gt_index;
  for (const auto& f : pred) pred_index[{f.frame, f.individual_id}] = &f;
  for (const auto& f : gt) gt_index[{f.frame, f.individual_id}] = &f;

  std::vector<std::pair<const KeypointFrame3D*, const KeypointFrame3D*>> pairs;
  std::size_t unmatched = 0;
  auto has_head = [&](const KeypointFrame3D& f) {
    return f.points.count(names.left_eye) && f.points.count(names.right_eye) && f.points.count(names.beak);
  };
  for (const auto& [key, g] : gt_index) {
    auto it = pred_index.find(key);
    if (it == pred_index.end() || !has_head(*g) || !has_head(*it->second)) {
      ++unmatched;
      continue;
    }
    pairs.emplace_back(it->second, g);
  }

  std::vector<std::optional<RotationError<double>>> slots(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto& [p, g] = pairs[i];
    try {
      const auto fp = head_frame<double>(p->points.at(names.left_eye), p->points.at(names.right_eye),
                                         p->points.at(names.beak));
      const auto fg = head_frame<double>(g->points.at(names.left_eye), g->points.at(names.right_eye),
                                         g->points.at(names.beak));
      slots[i] = rotation_error(fp, fg);
    } catch (const DegenerateFrameError&) {
      slots[i].reset();
    }
  });

  GazeEvaluation out;
  std::size_t degenerate = 0;
  for (const auto& s : slots) {
    if (s)
      out.errors.push_back(*s);
    else
      ++degenerate;
  }
  out.n_unmatched = unmatched;
  out.summary = angular_summary(out.errors, degenerate);
  return out;
}

}  // namespace appeval
