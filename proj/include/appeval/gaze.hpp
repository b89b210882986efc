#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "appeval/error.hpp"
#include "appeval/mvgeo.hpp"

namespace appeval {

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Head-fixed frame: origin at the eye midpoint, rotation columns are the
/// forward (towards the beak), lateral (towards the right eye) and up axes.
template <typename Scalar>
struct HeadFrame {
  Vector3<Scalar> origin;
  Matrix3<Scalar> rotation;

  Vector3<Scalar> forward() const { return rotation.col(0); }
  Vector3<Scalar> lateral() const { return rotation.col(1); }
  Vector3<Scalar> up() const { return rotation.col(2); }
};

/// Relative tolerance (against the largest pairwise keypoint distance) below which
/// the head keypoints are treated as degenerate.
inline constexpr double kDegenerateHeadTolerance = 1e-6;

template <typename Scalar>
HeadFrame<Scalar> head_frame(const Vector3<Scalar>& left_eye, const Vector3<Scalar>& right_eye,
                             const Vector3<Scalar>& beak) {
  const Scalar scale = std::max({(right_eye - left_eye).norm(), (beak - left_eye).norm(), (beak - right_eye).norm()});
  const Scalar tol = Scalar(kDegenerateHeadTolerance) * scale;
  if (!(scale > Scalar(0))) throw DegenerateFrameError("head keypoints coincide");
  const Vector3<Scalar> mid = Scalar(0.5) * (left_eye + right_eye);
  const Vector3<Scalar> to_beak = beak - mid;
  const Vector3<Scalar> eye_axis = right_eye - left_eye;
  if (!(eye_axis.norm() > tol)) throw DegenerateFrameError("eye keypoints coincide");
  if (!(to_beak.norm() > tol)) throw DegenerateFrameError("beak coincides with the eye midpoint");
  const Vector3<Scalar> f = to_beak.normalized();
  const Vector3<Scalar> lateral = eye_axis - eye_axis.dot(f) * f;
  if (!(lateral.norm() > tol)) throw DegenerateFrameError("eye and beak keypoints are collinear");
  const Vector3<Scalar> l = lateral.normalized();
  HeadFrame<Scalar> frame;
  frame.origin = mid;
  frame.rotation.col(0) = f;
  frame.rotation.col(1) = l;
  frame.rotation.col(2) = f.cross(l);
  return frame;
}

/// R = Rz(yaw) * Ry(pitch) * Rx(roll): intrinsic yaw about up, pitch about lateral,
/// roll about forward. Angles in radians.
template <typename Scalar>
Matrix3<Scalar> rotation_from_euler(Scalar yaw, Scalar pitch, Scalar roll) {
  using AA = Eigen::AngleAxis<Scalar>;
  return (AA(yaw, Vector3<Scalar>::UnitZ()) * AA(pitch, Vector3<Scalar>::UnitY()) * AA(roll, Vector3<Scalar>::UnitX()))
      .toRotationMatrix();
}

/// Threshold on |pitch| - 90 deg (in degrees) that flags gimbal lock.
inline constexpr double kGimbalToleranceDeg = 1e-6;

template <typename Scalar>
struct EulerAngles {
  Scalar yaw, pitch, roll;  // radians
  bool gimbal_lock;
};

/// Inverse of rotation_from_euler. In gimbal lock only the yaw/roll combination
/// is identifiable; it is returned as yaw with roll = 0.
template <typename Scalar>
EulerAngles<Scalar> euler_from_rotation(const Matrix3<Scalar>& R) {
  const Scalar pitch = std::atan2(-R(2, 0), std::hypot(R(0, 0), R(1, 0)));
  const Scalar deg = Scalar(180) / std::numbers::pi_v<Scalar>;
  if (std::abs(std::abs(pitch * deg) - Scalar(90)) < Scalar(kGimbalToleranceDeg)) {
    return {std::atan2(-R(0, 1), R(1, 1)), pitch, Scalar(0), true};
  }
  return {std::atan2(R(1, 0), R(0, 0)), pitch, std::atan2(R(2, 1), R(2, 2)), false};
}

template <typename Scalar>
struct RotationError {
  Scalar yaw_deg, pitch_deg, roll_deg, geodesic_deg;
  bool gimbal_lock;
};

/// Absolute yaw/pitch/roll of R_gt^T R_pred (the prediction expressed in the
/// ground-truth head frame) and the geodesic angle between the two orientations.
template <typename Scalar>
RotationError<Scalar> rotation_error(const HeadFrame<Scalar>& pred, const HeadFrame<Scalar>& gt) {
  // Identical orientations give exactly zero rather than rounding noise.
  const Matrix3<Scalar> rel =
      pred.rotation == gt.rotation ? Matrix3<Scalar>::Identity() : Matrix3<Scalar>(gt.rotation.transpose() * pred.rotation);
  const auto e = euler_from_rotation<Scalar>(rel);
  const Scalar deg = Scalar(180) / std::numbers::pi_v<Scalar>;
  const Scalar geodesic = Eigen::AngleAxis<Scalar>(rel).angle();
  return {std::abs(e.yaw) * deg, std::abs(e.pitch) * deg, std::abs(e.roll) * deg, std::abs(geodesic) * deg,
          e.gimbal_lock};
}

struct AngularErrorSummary {
  double rmse_deg = 0.0;             // pooled over yaw, pitch and roll of every frame
  double median_deg_pooled = 0.0;    // median of the same pooled list
  double median_geodesic_deg = 0.0;
  double median_yaw_deg = 0.0;
  double median_pitch_deg = 0.0;
  double median_roll_deg = 0.0;
  std::size_t n_frames = 0;
  std::size_t n_degenerate = 0;  // frames skipped because a head frame could not be built
  std::size_t n_gimbal = 0;
};

/// Throws MetricError when there are no valid frames.
AngularErrorSummary angular_summary(std::span<const RotationError<double>> errors, std::size_t n_degenerate = 0);

inline constexpr double kDefaultGazeThresholdDeg = 5.0;

/// True when the pooled median error is within the threshold.
bool gaze_acceptable(const AngularErrorSummary& summary, double threshold_deg = kDefaultGazeThresholdDeg);

struct HeadKeypointNames {
  std::string left_eye = "left_eye";
  std::string right_eye = "right_eye";
  std::string beak = "beak";
};

struct GazeEvaluation {
  std::vector<RotationError<double>> errors;  // one per valid frame, ordered by (frame, individual)
  AngularErrorSummary summary;
  std::size_t n_unmatched = 0;  // gt frames with no prediction or missing head keypoints
};

/// Builds head frames for every matched (frame, individual) and summarises the errors.
GazeEvaluation evaluate_gaze(std::span<const KeypointFrame3D> pred, std::span<const KeypointFrame3D> gt,
                             const HeadKeypointNames& names = {}, int threads = 0);

}  // namespace appeval
