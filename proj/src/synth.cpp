#include "appeval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "appeval/csv.hpp"
#include "appeval/error.hpp"

namespace appeval::synth {
namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json parse_object(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(source + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw DataError(source + ": expected a JSON object");
  return doc;
}

template <typename T>
T value_or(const nlohmann::json& doc, const char* key, T fallback, const std::string& source) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(source + ": key '" + key + "' has the wrong type");
  }
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kDetectionStream = 0x5D;
constexpr std::uint64_t kLabelStream = 0xC1;
constexpr std::uint64_t kTrajectoryStream = 0x7A;
constexpr std::uint64_t kPixelStream = 0x9B;

std::string camera_label(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "cam%03d", k + 1);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot write file");
  out << content;
}

}  // namespace

void CtdsScenarioTruth::validate() const {
  config.validate();
  if (!(true_density_per_km2 > 0.0)) throw DataError("truth: density must be > 0");
  if (n_cameras < 1) throw DataError("truth: n_cameras must be >= 1");
  if (operating_time_s.size() != 1 && operating_time_s.size() != static_cast<std::size_t>(n_cameras))
    throw DataError("truth: operating_time_s must have 1 or n_cameras entries");
  for (double t : operating_time_s)
    if (!(t > 0.0)) throw DataError("truth: operating times must be > 0");
  for (double r : {rates.manual_rate, rates.auto_tp_rate, rates.auto_fp_rate})
    if (!(r >= 0.0 && r <= 1.0)) throw DataError("truth: reactivity rates must lie in [0, 1]");
  if (snapshots_per_clip < 1) throw DataError("truth: snapshots_per_clip must be >= 1");
}

double CtdsScenarioTruth::operating_time(int camera) const {
  return operating_time_s.size() == 1 ? operating_time_s.front() : operating_time_s.at(static_cast<std::size_t>(camera));
}

CtdsScenarioTruth CtdsScenarioTruth::from_json_text(const std::string& text, const std::string& source) {
  const auto doc = parse_object(text, source);
  CtdsScenarioTruth t;
  t.config = SurveyConfig::from_json_text(text, source);
  t.true_density_per_km2 = value_or(doc, "true_density_per_km2", 0.0, source);
  if (!doc.contains("key") || !doc["key"].is_object()) throw DataError(source + ": missing object 'key'");
  const auto& key = doc["key"];
  const auto family = parse_key_family(value_or<std::string>(key, "family", "hn", source));
  const double sigma = value_or(key, "sigma_m", 0.0, source);
  try {
    t.key = family == KeyFamily::HalfNormal ? KeyFunction::half_normal(sigma)
                                            : KeyFunction::hazard_rate(sigma, value_or(key, "shape_b", 0.0, source));
  } catch (const FitError& e) {
    throw DataError(source + ": " + e.what());
  }
  t.n_cameras = value_or(doc, "n_cameras", 0, source);
  if (doc.contains("operating_time_s") && doc["operating_time_s"].is_array())
    t.operating_time_s = value_or<std::vector<double>>(doc, "operating_time_s", {}, source);
  else
    t.operating_time_s = {value_or(doc, "operating_time_s", 0.0, source)};
  if (doc.contains("reactivity")) {
    const auto& r = doc["reactivity"];
    t.rates.manual_rate = value_or(r, "manual_rate", 0.0, source);
    t.rates.auto_tp_rate = value_or(r, "auto_tp_rate", 1.0, source);
    t.rates.auto_fp_rate = value_or(r, "auto_fp_rate", 0.0, source);
  }
  t.snapshots_per_clip = value_or<std::int64_t>(doc, "snapshots_per_clip", 1, source);
  t.seed = value_or<std::uint64_t>(doc, "seed", 0, source);
  try {
    t.validate();
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
  return t;
}

CtdsScenarioTruth CtdsScenarioTruth::from_json_file(const std::string& path) {
  return from_json_text(read_text(path), path);
}

std::vector<double> sample_distances(const KeyFunction& key, double w, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double r = w * std::sqrt(unit(rng));
    if (unit(rng) < eval_key(key, r)) out.push_back(r);
  }
  return out;
}

SyntheticSurvey gen_ctds(const CtdsScenarioTruth& truth) {
  truth.validate();
  const auto& cfg = truth.config;
  const double w = cfg.truncation_radius_m;
  const double sector_km2 = 0.5 * cfg.view_angle_rad * w * w * 1e-6;

  auto rng = stream(truth.seed, kDetectionStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<CameraLocation> locations;
  std::vector<DistanceObservation> observations;
  std::vector<std::string> clip_order;
  std::map<std::string, std::string> clip_location;
  std::int64_t present = 0;

  for (int k = 0; k < truth.n_cameras; ++k) {
    const std::string loc = camera_label(k);
    const double T = truth.operating_time(k);
    locations.push_back({loc, T});
    const double snapshots = T / cfg.snapshot_interval_s;
    const auto last_snapshot = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(snapshots)) - 1);
    std::poisson_distribution<std::int64_t> individuals(truth.true_density_per_km2 * sector_km2 * snapshots);
    std::uniform_int_distribution<std::int64_t> snapshot(0, last_snapshot);
    const std::int64_t m = individuals(rng);
    present += m;
    std::vector<DistanceObservation> camera_obs;
    for (std::int64_t i = 0; i < m; ++i) {
      const std::int64_t s = snapshot(rng);
      const double r = w * std::sqrt(unit(rng));
      if (unit(rng) >= eval_key(truth.key, r)) continue;
      camera_obs.push_back({"", s, r, 1});
    }
    std::stable_sort(camera_obs.begin(), camera_obs.end(),
                     [](const auto& a, const auto& b) { return a.snapshot_index < b.snapshot_index; });
    for (auto& o : camera_obs) {
      o.clip_id = loc + "-" + std::to_string(o.snapshot_index / truth.snapshots_per_clip);
      if (clip_location.emplace(o.clip_id, loc).second) clip_order.push_back(o.clip_id);
      observations.push_back(std::move(o));
    }
  }

  auto label_rng = stream(truth.seed, kLabelStream);
  std::vector<Clip> clips;
  clips.reserve(clip_order.size());
  for (const auto& id : clip_order) {
    const bool manual = unit(label_rng) < truth.rates.manual_rate;
    const double p_auto = manual ? truth.rates.auto_tp_rate : truth.rates.auto_fp_rate;
    const bool automatic = unit(label_rng) < p_auto;
    clips.push_back({id, clip_location.at(id), manual, automatic});
  }

  return {Survey(cfg, std::move(locations), std::move(clips), std::move(observations)),
          detection_probability(truth.key, w), present};
}

void write_ctds(const SyntheticSurvey& data, const CtdsScenarioTruth& truth, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ostringstream obs, clips, locs;
  write_observations(obs, data.survey);
  write_clips(clips, data.survey);
  write_locations(locs, data.survey);
  write_file(fs::path(dir) / "observations.csv", obs.str());
  write_file(fs::path(dir) / "clips.csv", clips.str());
  write_file(fs::path(dir) / "locations.csv", locs.str());
  write_file(fs::path(dir) / "config.json", data.survey.config().to_json_text());

  nlohmann::ordered_json t;
  t["true_density_per_km2"] = truth.true_density_per_km2;
  t["true_abundance"] = truth.true_density_per_km2 * truth.config.study_area_km2;
  t["key"]["family"] = std::string(to_string(truth.key.family()));
  t["key"]["sigma_m"] = truth.key.sigma();
  if (truth.key.family() == KeyFamily::HazardRate) t["key"]["shape_b"] = truth.key.shape_b();
  t["expected_detection_prob"] = data.expected_detection_prob;
  t["individuals_present"] = data.individuals_present;
  t["detections"] = data.survey.observations().size();
  t["n_cameras"] = truth.n_cameras;
  t["seed"] = truth.seed;
  write_file(fs::path(dir) / "truth.json", t.dump(2) + "\n");
}

RigSpec RigSpec::from_json_text(const std::string& text, const std::string& source) {
  const auto doc = parse_object(text, source);
  RigSpec s;
  s.n_cameras = value_or(doc, "n_cameras", s.n_cameras, source);
  s.radius_mm = value_or(doc, "radius_mm", s.radius_mm, source);
  s.height_mm = value_or(doc, "height_mm", s.height_mm, source);
  s.focal_px = value_or(doc, "focal_px", s.focal_px, source);
  s.image_width = value_or(doc, "image_width", s.image_width, source);
  s.image_height = value_or(doc, "image_height", s.image_height, source);
  s.n_frames = value_or(doc, "n_frames", s.n_frames, source);
  s.n_individuals = value_or(doc, "n_individuals", s.n_individuals, source);
  s.arena_radius_mm = value_or(doc, "arena_radius_mm", s.arena_radius_mm, source);
  s.max_tilt_deg = value_or(doc, "max_tilt_deg", s.max_tilt_deg, source);
  s.pixel_noise_px = value_or(doc, "pixel_noise_px", s.pixel_noise_px, source);
  s.seed = value_or<std::uint64_t>(doc, "seed", s.seed, source);
  if (s.n_cameras < 2) throw DataError(source + ": n_cameras must be >= 2");
  if (s.n_frames < 1 || s.n_individuals < 1) throw DataError(source + ": n_frames and n_individuals must be >= 1");
  if (!(s.focal_px > 0.0) || !(s.radius_mm > 0.0)) throw DataError(source + ": focal_px and radius_mm must be > 0");
  if (s.pixel_noise_px < 0.0) throw DataError(source + ": pixel_noise_px must be >= 0");
  return s;
}

RigSpec RigSpec::from_json_file(const std::string& path) { return from_json_text(read_text(path), path); }

std::vector<std::string> skeleton_names() {
  return {"beak",          "nose",     "left_eye",    "right_eye", "left_shoulder",
          "right_shoulder", "top_keel", "bottom_keel", "tail"};
}

std::vector<Eigen::Vector3d> skeleton_template() {
  return {{20.0, 0.0, 0.0},     {6.0, 0.0, 8.0},     {0.0, -8.0, 0.0},    {0.0, 8.0, 0.0},     {-40.0, -25.0, -35.0},
          {-40.0, 25.0, -35.0}, {-35.0, 0.0, -55.0}, {-70.0, 0.0, -80.0}, {-140.0, 0.0, -45.0}};
}

void RigTruth::validate() const {
  if (cameras.size() < 2) throw DataError("rig: at least two cameras are required");
  if (keypoint_names.size() != template_points.size()) throw DataError("rig: template names and points disagree");
  if (template_points.size() < 3) throw DataError("rig: template needs at least three points");
  if (!(pixel_noise_px >= 0.0)) throw DataError("rig: pixel noise must be >= 0");
}

CameraModel look_at_camera(const std::string& id, const Eigen::Vector3d& centre, const Eigen::Vector3d& target,
                           double focal_px, double cx, double cy) {
  const Eigen::Vector3d forward = (target - centre).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();  // looking straight down
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d R;
  R.row(0) = right;
  R.row(1) = down;
  R.row(2) = forward;
  Eigen::Matrix3d K;
  K << focal_px, 0.0, cx, 0.0, focal_px, cy, 0.0, 0.0, 1.0;
  Projection<double> Rt;
  Rt.leftCols<3>() = R;
  Rt.col(3) = -R * centre;
  return {id, K * Rt};
}

RigTruth make_rig(const RigSpec& spec) {
  RigTruth truth;
  for (int k = 0; k < spec.n_cameras; ++k) {
    const double a = 2.0 * std::numbers::pi * k / spec.n_cameras;
    const Eigen::Vector3d centre(spec.radius_mm * std::cos(a), spec.radius_mm * std::sin(a), spec.height_mm);
    truth.cameras.push_back(look_at_camera(camera_label(k), centre, Eigen::Vector3d::Zero(), spec.focal_px,
                                           0.5 * spec.image_width, 0.5 * spec.image_height));
  }
  truth.keypoint_names = skeleton_names();
  truth.template_points = skeleton_template();
  truth.pixel_noise_px = spec.pixel_noise_px;
  truth.seed = spec.seed;

  auto rng = stream(spec.seed, kTrajectoryStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tilt = spec.max_tilt_deg * std::numbers::pi / 180.0;
  for (int f = 0; f < spec.n_frames; ++f) {
    for (int i = 0; i < spec.n_individuals; ++i) {
      RigPose pose;
      pose.frame = f;
      pose.individual_id = "bird" + std::to_string(i + 1);
      const double yaw = (2.0 * unit(rng) - 1.0) * std::numbers::pi;
      const double pitch = (2.0 * unit(rng) - 1.0) * tilt;
      const double roll = (2.0 * unit(rng) - 1.0) * tilt;
      pose.rotation = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                       Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                       Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                          .toRotationMatrix();
      const double rad = spec.arena_radius_mm * std::sqrt(unit(rng));
      const double ang = 2.0 * std::numbers::pi * unit(rng);
      pose.translation = Eigen::Vector3d(rad * std::cos(ang), rad * std::sin(ang), 100.0 + 50.0 * unit(rng));
      truth.trajectory.push_back(pose);
    }
  }
  return truth;
}

RigData gen_rig(const RigTruth& truth) {
  truth.validate();
  RigData data;
  data.calibration.cameras = truth.cameras;
  data.calibration.world_unit = "mm";
  auto rng = stream(truth.seed, kPixelStream);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& pose : truth.trajectory) {
    KeypointFrame3D f3{pose.frame, pose.individual_id, {}};
    for (std::size_t j = 0; j < truth.template_points.size(); ++j)
      f3.points[truth.keypoint_names[j]] = pose.rotation * truth.template_points[j] + pose.translation;
    for (const auto& cam : truth.cameras) {
      KeypointFrame2D f2{pose.frame, pose.individual_id, cam.camera_id, {}};
      for (const auto& [name, X] : f3.points) {
        Vector2<double> px = project<double>(cam.projection, X);
        if (truth.pixel_noise_px > 0.0) {
          const double du = noise(rng), dv = noise(rng);
          px += truth.pixel_noise_px * Vector2<double>(du, dv);
        }
        f2.points[name] = px;
      }
      data.keypoints2d.push_back(std::move(f2));
    }
    data.gt3d.push_back(std::move(f3));
  }
  return data;
}

void write_rig(const RigData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_file(fs::path(dir) / "calibration.json", calibration_to_json(data.calibration));
  std::ostringstream k2, k3;
  write_keypoints2d(k2, data.keypoints2d);
  write_keypoints3d(k3, data.gt3d);
  write_file(fs::path(dir) / "keypoints2d.csv", k2.str());
  write_file(fs::path(dir) / "keypoints3d.csv", k3.str());
}

std::vector<KeypointFrame3D> perturb_along_eye_axis(std::span<const KeypointFrame3D> gt, double offset_mm,
                                                    std::uint64_t seed) {
  auto rng = stream(seed, 0xE1);
  std::bernoulli_distribution sign(0.5);
  std::vector<KeypointFrame3D> out(gt.begin(), gt.end());
  for (auto& f : out) {
    auto l = f.points.find("left_eye"), r = f.points.find("right_eye");
    const double s = sign(rng) ? 1.0 : -1.0;
    if (l == f.points.end() || r == f.points.end()) continue;
    const Eigen::Vector3d shift = s * offset_mm * (r->second - l->second).normalized();
    l->second += shift;
    r->second += shift;
  }
  return out;
}

std::vector<KeypointFrame3D> perturb_isotropic(std::span<const KeypointFrame3D> gt, double sigma_mm,
                                               const std::vector<std::string>& keypoints, std::uint64_t seed) {
  auto rng = stream(seed, 0x15);
  std::normal_distribution<double> noise(0.0, sigma_mm);
  std::vector<KeypointFrame3D> out(gt.begin(), gt.end());
  for (auto& f : out) {
    for (const auto& name : keypoints) {
      auto it = f.points.find(name);
      if (it == f.points.end()) continue;
      const double dx = noise(rng), dy = noise(rng), dz = noise(rng);
      it->second += Eigen::Vector3d(dx, dy, dz);
    }
  }
  return out;
}

}  // namespace appeval::synth
