#include "appeval/mvgeo.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <tuple>
#include <utility>

#include <Eigen/LU>
#include <json.hpp>

#include "appeval/csv.hpp"
#include "appeval/parallel.hpp"
#include "appeval/stats.hpp"

namespace appeval {

using FrameKey = std::pair<std::int64_t, std::string>;

const CameraModel& Calibration::camera(const std::string& id) const {
  for (const auto& c : cameras)
    if (c.camera_id == id) return c;
  throw DataError("unknown camera '" + id + "'");
}

Calibration parse_calibration(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(source + ": invalid JSON: " + e.what());
  }
  Calibration cal;
  const nlohmann::json* cams = &doc;
  if (doc.is_object()) {
    if (!doc.contains("cameras")) throw DataError(source + ": missing key 'cameras'");
    cams = &doc["cameras"];
    if (doc.contains("world_unit")) {
      if (!doc["world_unit"].is_string()) throw DataError(source + ": world_unit must be a string");
      cal.world_unit = doc["world_unit"].get<std::string>();
    }
  }
  if (cal.world_unit != "mm" && cal.world_unit != "m")
    throw DataError(source + ": world_unit must be \"mm\" or \"m\", got \"" + cal.world_unit + "\"");
  if (!cams->is_array()) throw DataError(source + ": cameras must be an array");
  for (std::size_t i = 0; i < cams->size(); ++i) {
    const auto& c = (*cams)[i];
    const std::string where = source + ": camera " + std::to_string(i);
    if (!c.is_object() || !c.contains("camera_id") || !c["camera_id"].is_string() || !c.contains("P"))
      throw DataError(where + ": needs string 'camera_id' and 3x4 'P'");
    CameraModel cam;
    cam.camera_id = c["camera_id"].get<std::string>();
    const auto& P = c["P"];
    if (!P.is_array() || P.size() != 3) throw DataError(where + ": P must have 3 rows");
    for (int r = 0; r < 3; ++r) {
      if (!P[r].is_array() || P[r].size() != 4) throw DataError(where + ": P rows must have 4 columns");
      for (int k = 0; k < 4; ++k) {
        if (!P[r][k].is_number()) throw DataError(where + ": P entries must be numbers");
        cam.projection(r, k) = P[r][k].get<double>();
      }
    }
    if (!cam.projection.allFinite()) throw DataError(where + ": P entries must be finite");
    Eigen::FullPivLU<Eigen::Matrix3d> lu(cam.projection.leftCols<3>());
    if (lu.rank() < 3) throw DataError(where + " ('" + cam.camera_id + "'): left 3x3 block of P is singular");
    for (const auto& other : cal.cameras)
      if (other.camera_id == cam.camera_id) throw DataError(where + ": duplicate camera_id '" + cam.camera_id + "'");
    cal.cameras.push_back(std::move(cam));
  }
  if (cal.cameras.empty()) throw DataError(source + ": no cameras");
  return cal;
}

Calibration load_calibration(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_calibration(ss.str(), path);
}

std::string calibration_to_json(const Calibration& calibration) {
  nlohmann::ordered_json doc;
  doc["world_unit"] = calibration.world_unit;
  doc["cameras"] = nlohmann::ordered_json::array();
  for (const auto& c : calibration.cameras) {
    nlohmann::ordered_json cam;
    cam["camera_id"] = c.camera_id;
    nlohmann::ordered_json P = nlohmann::ordered_json::array();
    for (int r = 0; r < 3; ++r) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int k = 0; k < 4; ++k) row.push_back(c.projection(r, k));
      P.push_back(row);
    }
    cam["P"] = P;
    doc["cameras"].push_back(cam);
  }
  return doc.dump(2) + "\n";
}

std::vector<KeypointFrame2D> load_keypoints2d(std::istream& in, const std::string& source) {
  const auto t = csv::read(in, source);
  const auto fc = t.column("frame"), ic = t.column("individual_id"), cc = t.column("camera_id"),
             kc = t.column("keypoint"), uc = t.column("u"), vc = t.column("v");
  std::vector<KeypointFrame2D> frames;
  std::map<std::tuple<std::int64_t, std::string, std::string>, std::size_t> index;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto frame = t.integer(r, fc);
    auto key = std::make_tuple(frame, t.cell(r, ic), t.cell(r, cc));
    auto [it, fresh] = index.emplace(key, frames.size());
    if (fresh) frames.push_back({frame, t.cell(r, ic), t.cell(r, cc), {}});
    auto& f = frames[it->second];
    if (!f.points.emplace(t.cell(r, kc), Vector2<double>(t.number(r, uc), t.number(r, vc))).second)
      throw DataError(t.where(r) + ": duplicate keypoint '" + t.cell(r, kc) + "'");
  }
  return frames;
}

std::vector<KeypointFrame2D> load_keypoints2d_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  return load_keypoints2d(in, path);
}

std::vector<KeypointFrame3D> load_keypoints3d(std::istream& in, const std::string& source, double scale) {
  const auto t = csv::read(in, source);
  const auto fc = t.column("frame"), ic = t.column("individual_id"), kc = t.column("keypoint"), xc = t.column("x"),
             yc = t.column("y"), zc = t.column("z");
  std::vector<KeypointFrame3D> frames;
  std::map<FrameKey, std::size_t> index;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const auto frame = t.integer(r, fc);
    auto [it, fresh] = index.emplace(FrameKey{frame, t.cell(r, ic)}, frames.size());
    if (fresh) frames.push_back({frame, t.cell(r, ic), {}});
    const Vector3<double> p(t.number(r, xc), t.number(r, yc), t.number(r, zc));
    if (!frames[it->second].points.emplace(t.cell(r, kc), p * scale).second)
      throw DataError(t.where(r) + ": duplicate keypoint '" + t.cell(r, kc) + "'");
  }
  return frames;
}

std::vector<KeypointFrame3D> load_keypoints3d_file(const std::string& path, double scale) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  return load_keypoints3d(in, path, scale);
}

void write_keypoints2d(std::ostream& out, std::span<const KeypointFrame2D> frames) {
  out << "frame,individual_id,camera_id,keypoint,u,v\n";
  for (const auto& f : frames)
    for (const auto& [name, p] : f.points)
      out << f.frame << ',' << csv::escape(f.individual_id) << ',' << csv::escape(f.camera_id) << ','
          << csv::escape(name) << ',' << csv::format_double(p.x()) << ',' << csv::format_double(p.y()) << '\n';
}

void write_keypoints3d(std::ostream& out, std::span<const KeypointFrame3D> frames) {
  out << "frame,individual_id,keypoint,x,y,z\n";
  for (const auto& f : frames)
    for (const auto& [name, p] : f.points)
      out << f.frame << ',' << csv::escape(f.individual_id) << ',' << csv::escape(name) << ','
          << csv::format_double(p.x()) << ',' << csv::format_double(p.y()) << ',' << csv::format_double(p.z())
          << '\n';
}

TriangulationReport triangulate_frames(const Calibration& calibration, std::span<const KeypointFrame2D> frames,
                                       std::size_t min_views, int threads) {
  std::map<FrameKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    calibration.camera(frames[i].camera_id);  // validates the reference up front
    groups[{frames[i].frame, frames[i].individual_id}].push_back(i);
  }
  std::vector<std::pair<FrameKey, std::vector<std::size_t>>> work(groups.begin(), groups.end());
  struct Slot {
    KeypointFrame3D frame;
    std::size_t ok = 0, insufficient = 0, degenerate = 0;
  };
  std::vector<Slot> slots(work.size());
  parallel_for(work.size(), threads, [&](std::size_t g) {
    const auto& [key, members] = work[g];
    Slot& slot = slots[g];
    slot.frame.frame = key.first;
    slot.frame.individual_id = key.second;
    std::map<std::string, std::vector<View<double>>> by_name;
    for (std::size_t m : members) {
      const auto& f = frames[m];
      const auto& P = calibration.camera(f.camera_id).projection;
      for (const auto& [name, px] : f.points) by_name[name].push_back({P, px});
    }
    for (const auto& [name, views] : by_name) {
      if (views.size() < std::max<std::size_t>(min_views, 2)) {
        ++slot.insufficient;
        continue;
      }
      try {
        slot.frame.points[name] = triangulate<double>(views, min_views).point;
        ++slot.ok;
      } catch (const GeometryError&) {
        ++slot.degenerate;
      }
    }
  });
  TriangulationReport report;
  for (auto& s : slots) {
    report.n_triangulated += s.ok;
    report.n_insufficient_views += s.insufficient;
    report.n_degenerate += s.degenerate;
    if (!s.frame.points.empty()) report.frames.push_back(std::move(s.frame));
  }
  return report;
}

double KeypointMetrics::pck(double fraction) const {
  for (std::size_t i = 0; i < pck_fractions.size(); ++i)
    if (pck_fractions[i] == fraction) return pck_pct[i];
  throw MetricError("PCK at fraction " + std::to_string(fraction) + " was not computed");
}

KeypointMetrics keypoint_metrics(std::span<const KeypointFrame3D> pred, std::span<const KeypointFrame3D> gt,
                                 const std::set<std::string>& subset, std::span<const double> pck_fractions,
                                 int threads) {
  if (subset.empty()) throw MetricError("keypoint subset is empty");
  for (double f : pck_fractions)
    if (!(f > 0.0)) throw MetricError("PCK fractions must be > 0");
  std::map<FrameKey, const KeypointFrame3D*> pred_index, gt_index;
  for (const auto& f : pred)
    if (!pred_index.emplace(FrameKey{f.frame, f.individual_id}, &f).second)
      throw DataError("duplicate predicted frame " + std::to_string(f.frame) + " / '" + f.individual_id + "'");
  for (const auto& f : gt)
    if (!gt_index.emplace(FrameKey{f.frame, f.individual_id}, &f).second)
      throw DataError("duplicate ground-truth frame " + std::to_string(f.frame) + " / '" + f.individual_id + "'");

  std::vector<const KeypointFrame3D*> gt_frames;
  for (const auto& [key, f] : gt_index) gt_frames.push_back(f);

  struct Slot {
    std::vector<double> errors;
    double scale = 0.0;
    std::size_t excluded = 0;
  };
  std::vector<Slot> slots(gt_frames.size());
  parallel_for(gt_frames.size(), threads, [&](std::size_t i) {
    const KeypointFrame3D& g = *gt_frames[i];
    Slot& slot = slots[i];
    for (auto a = g.points.begin(); a != g.points.end(); ++a)
      for (auto b = std::next(a); b != g.points.end(); ++b)
        slot.scale = std::max(slot.scale, (a->second - b->second).norm());
    auto it = pred_index.find({g.frame, g.individual_id});
    const KeypointFrame3D* p = it == pred_index.end() ? nullptr : it->second;
    for (const auto& name : subset) {
      auto gp = g.points.find(name);
      const bool in_gt = gp != g.points.end();
      const bool in_pred = p && p->points.count(name);
      if (in_gt && in_pred)
        slot.errors.push_back((p->points.at(name) - gp->second).norm());
      else if (in_gt || in_pred)
        ++slot.excluded;
    }
  });

  KeypointMetrics m;
  m.pck_fractions.assign(pck_fractions.begin(), pck_fractions.end());
  std::vector<std::size_t> correct(pck_fractions.size(), 0);
  std::vector<double> all;
  for (const auto& s : slots) {
    m.n_excluded += s.excluded;
    for (double e : s.errors) {
      all.push_back(e);
      for (std::size_t j = 0; j < pck_fractions.size(); ++j)
        if (e <= pck_fractions[j] * s.scale) ++correct[j];
    }
  }
  for (const auto& [key, f] : pred_index) {
    if (gt_index.count(key)) continue;
    for (const auto& name : subset) m.n_excluded += f->points.count(name);
  }
  if (all.empty()) throw MetricError("no matched keypoint pairs between prediction and ground truth");
  m.n_points = all.size();
  m.rmse_mm = stats::root_mean_square(all);
  m.median_mm = stats::median(all);
  for (std::size_t j = 0; j < correct.size(); ++j)
    m.pck_pct.push_back(100.0 * static_cast<double>(correct[j]) / static_cast<double>(all.size()));
  return m;
}

}  // namespace appeval
