#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "appeval/detfn.hpp"
#include "appeval/mvgeo.hpp"
#include "appeval/survey.hpp"

namespace appeval::synth {

/// Probabilities used to label clips as camera-reactive.
struct ReactivityRates {
  double manual_rate = 0.0;   // P(expert marks a clip reactive)
  double auto_tp_rate = 1.0;  // P(classifier flags | expert flagged)
  double auto_fp_rate = 0.0;  // P(classifier flags | expert did not)
};

struct CtdsScenarioTruth {
  double true_density_per_km2 = 0.5;
  KeyFunction key = KeyFunction::half_normal(7.0);
  SurveyConfig config;
  int n_cameras = 60;
  /// One entry per camera, or a single entry shared by all cameras.
  std::vector<double> operating_time_s;
  ReactivityRates rates;
  std::int64_t snapshots_per_clip = 1;
  std::uint64_t seed = 0;

  void validate() const;
  double operating_time(int camera) const;

  static CtdsScenarioTruth from_json_text(const std::string& text, const std::string& source = "truth");
  static CtdsScenarioTruth from_json_file(const std::string& path);
};

struct SyntheticSurvey {
  Survey survey;
  double expected_detection_prob;  // analytic P for the true key
  std::int64_t individuals_present;  // available individuals before detection
};

/// Poisson(D * sector area * e_k) individuals per camera, uniform over snapshot
/// moments and over the view sector; each is detected with probability g(r).
/// Deterministic for a fixed seed.
SyntheticSurvey gen_ctds(const CtdsScenarioTruth& truth);

/// Writes observations.csv, clips.csv, locations.csv, config.json and truth.json.
void write_ctds(const SyntheticSurvey& data, const CtdsScenarioTruth& truth, const std::string& dir);

/// Distances drawn from the point-transect pdf r g(r) / int_0^w s g(s) ds.
std::vector<double> sample_distances(const KeyFunction& key, double w, std::size_t n, std::mt19937_64& rng);

/// Rigid pose of one individual's skeleton template in one frame.
struct RigPose {
  std::int64_t frame = 0;
  std::string individual_id;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct RigTruth {
  std::vector<CameraModel> cameras;
  std::vector<std::string> keypoint_names;
  std::vector<Eigen::Vector3d> template_points;  // skeleton in its own frame, mm
  std::vector<RigPose> trajectory;
  double pixel_noise_px = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parameters for building a ring of cameras around an arena and a random
/// rigid trajectory of the pigeon skeleton template.
struct RigSpec {
  int n_cameras = 4;
  double radius_mm = 2000.0;
  double height_mm = 1500.0;
  double focal_px = 1400.0;
  double image_width = 1920.0;
  double image_height = 1080.0;
  int n_frames = 50;
  int n_individuals = 2;
  double arena_radius_mm = 400.0;
  double max_tilt_deg = 30.0;
  double pixel_noise_px = 0.0;
  std::uint64_t seed = 0;

  static RigSpec from_json_text(const std::string& text, const std::string& source = "rig");
  static RigSpec from_json_file(const std::string& path);
};

/// Head keypoints; the first three define the head frame.
inline const std::vector<std::string> kHeadKeypoints = {"beak", "nose", "left_eye", "right_eye"};

/// Nine-point pigeon skeleton in a head-aligned frame (x forward, y towards the
/// right eye, z up, eye midpoint at the origin), millimetres.
std::vector<std::string> skeleton_names();
std::vector<Eigen::Vector3d> skeleton_template();

/// Camera looking from `centre` at `target` with world +z as up; P = K [R | -R C].
CameraModel look_at_camera(const std::string& id, const Eigen::Vector3d& centre, const Eigen::Vector3d& target,
                           double focal_px, double cx, double cy);

RigTruth make_rig(const RigSpec& spec);

struct RigData {
  Calibration calibration;
  std::vector<KeypointFrame2D> keypoints2d;  // projections plus pixel noise
  std::vector<KeypointFrame3D> gt3d;         // noiseless
};

RigData gen_rig(const RigTruth& truth);

/// Writes calibration.json, keypoints2d.csv and keypoints3d.csv.
void write_rig(const RigData& data, const std::string& dir);

/// Artificial predictor: both eyes shifted by the same +-offset_mm along the
/// ground-truth eye axis (random sign per frame); other keypoints exact.
std::vector<KeypointFrame3D> perturb_along_eye_axis(std::span<const KeypointFrame3D> gt, double offset_mm,
                                                    std::uint64_t seed);

/// Artificial predictor: i.i.d. Gaussian noise of sigma_mm per axis on every listed keypoint.
std::vector<KeypointFrame3D> perturb_isotropic(std::span<const KeypointFrame3D> gt, double sigma_mm,
                                               const std::vector<std::string>& keypoints, std::uint64_t seed);

}  // namespace appeval::synth
