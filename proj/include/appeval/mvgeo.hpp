#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "appeval/error.hpp"

namespace appeval {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Projection = Eigen::Matrix<Scalar, 3, 4>;

/// Pinhole projection of a world point to pixels.
template <typename Scalar>
Vector2<Scalar> project(const Projection<Scalar>& P, const Vector3<Scalar>& X) {
  const Vector3<Scalar> h = P * X.homogeneous();
  return h.hnormalized();
}

/// One observation of a point: the camera's projection matrix and the pixel.
template <typename Scalar>
struct View {
  Projection<Scalar> projection;
  Vector2<Scalar> pixel;
};

template <typename Scalar>
struct Triangulation {
  Vector3<Scalar> point;
  Scalar reprojection_rms;  // pixels
};

/// Ratio of the two smallest singular values of the DLT system above which the
/// geometry is treated as degenerate.
inline constexpr double kDegenerateSingularRatio = 0.99;

/// Linear (DLT) triangulation: two equations per view, each row scaled to unit
/// norm, solved by SVD and dehomogenised. Throws GeometryError for fewer than
/// min_views views or degenerate geometry.
template <typename Scalar>
Triangulation<Scalar> triangulate(std::span<const View<Scalar>> views, std::size_t min_views = 2) {
  if (min_views < 2) min_views = 2;
  if (views.size() < min_views)
    throw GeometryError("triangulation needs at least " + std::to_string(min_views) + " views, got " +
                        std::to_string(views.size()));
  using Rows = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;
  Rows A(2 * views.size(), 4);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& P = views[i].projection;
    const auto& px = views[i].pixel;
    if (!px.allFinite()) throw GeometryError("triangulation: non-finite pixel coordinate");
    A.row(2 * i) = px.x() * P.row(2) - P.row(0);
    A.row(2 * i + 1) = px.y() * P.row(2) - P.row(1);
    for (Eigen::Index r = 2 * i; r < static_cast<Eigen::Index>(2 * i + 2); ++r) {
      const Scalar n = A.row(r).norm();
      if (n > Scalar(0)) A.row(r) /= n;
    }
  }
  Eigen::JacobiSVD<Rows> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const Scalar eps = Eigen::NumTraits<Scalar>::epsilon();
  if (s(2) <= Scalar(1e3) * eps * s(0) || s(3) / s(2) > Scalar(kDegenerateSingularRatio))
    throw GeometryError("triangulation: degenerate camera geometry (singular values " + std::to_string(double(s(2))) +
                        ", " + std::to_string(double(s(3))) + ")");
  const Eigen::Matrix<Scalar, 4, 1> h = svd.matrixV().col(3);
  if (std::abs(h(3)) <= eps * h.norm()) throw GeometryError("triangulation: point at infinity");
  Triangulation<Scalar> out{h.hnormalized(), Scalar(0)};
  Scalar sq = 0;
  for (const auto& v : views) sq += (project<Scalar>(v.projection, out.point) - v.pixel).squaredNorm();
  out.reprojection_rms = std::sqrt(sq / Scalar(views.size()));
  return out;
}

template <typename Scalar>
Triangulation<Scalar> triangulate(const std::vector<View<Scalar>>& views, std::size_t min_views = 2) {
  return triangulate<Scalar>(std::span<const View<Scalar>>(views), min_views);
}

struct CameraModel {
  std::string camera_id;
  Projection<double> projection;
};

struct Calibration {
  std::vector<CameraModel> cameras;
  std::string world_unit = "mm";

  /// Multiplier from world units to millimetres.
  double to_mm() const { return world_unit == "m" ? 1000.0 : 1.0; }
  const CameraModel& camera(const std::string& id) const;
};

/// Reads calibration.json; validates unit and that each left 3x3 block has rank 3.
Calibration load_calibration(const std::string& path);
Calibration parse_calibration(const std::string& text, const std::string& source);
std::string calibration_to_json(const Calibration& calibration);

struct KeypointFrame2D {
  std::int64_t frame = 0;
  std::string individual_id;
  std::string camera_id;
  std::map<std::string, Vector2<double>> points;
};

struct KeypointFrame3D {
  std::int64_t frame = 0;
  std::string individual_id;
  std::map<std::string, Vector3<double>> points;
};

std::vector<KeypointFrame2D> load_keypoints2d(std::istream& in, const std::string& source);
std::vector<KeypointFrame2D> load_keypoints2d_file(const std::string& path);
/// Coordinates are multiplied by `scale` (use Calibration::to_mm() to get millimetres).
std::vector<KeypointFrame3D> load_keypoints3d(std::istream& in, const std::string& source, double scale = 1.0);
std::vector<KeypointFrame3D> load_keypoints3d_file(const std::string& path, double scale = 1.0);
void write_keypoints2d(std::ostream& out, std::span<const KeypointFrame2D> frames);
void write_keypoints3d(std::ostream& out, std::span<const KeypointFrame3D> frames);

struct TriangulationReport {
  std::vector<KeypointFrame3D> frames;
  std::size_t n_triangulated = 0;
  std::size_t n_insufficient_views = 0;
  std::size_t n_degenerate = 0;
};

/// Triangulates every (frame, individual, keypoint) seen in at least min_views cameras.
TriangulationReport triangulate_frames(const Calibration& calibration, std::span<const KeypointFrame2D> frames,
                                       std::size_t min_views = 2, int threads = 0);

struct KeypointMetrics {
  double rmse_mm = 0.0;
  double median_mm = 0.0;
  std::vector<double> pck_fractions;
  std::vector<double> pck_pct;  // one per fraction
  std::size_t n_points = 0;
  std::size_t n_excluded = 0;  // keypoints present on only one side

  /// PCK at a fraction; throws if it was not computed.
  double pck(double fraction) const;
};

/// RMSE, median and PCK of Euclidean errors over the keypoint subset. PCK scale is
/// the largest pairwise distance between all ground-truth keypoints of the same
/// frame and individual; an error equal to the threshold counts as correct.
KeypointMetrics keypoint_metrics(std::span<const KeypointFrame3D> pred, std::span<const KeypointFrame3D> gt,
                                 const std::set<std::string>& subset, std::span<const double> pck_fractions,
                                 int threads = 0);

}  // namespace appeval
