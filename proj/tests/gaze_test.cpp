#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "appeval/error.hpp"
#include "appeval/gaze.hpp"
#include "appeval/synth.hpp"

using namespace appeval;
using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

HeadFrame<double> frame_with(const Matrix3d& R) { return {Vector3d::Zero(), R}; }

RotationError<double> error_of(double yaw, double pitch, double roll, double geodesic) {
  return {yaw, pitch, roll, geodesic, false};
}

}  // namespace

TEST(HeadFrame, SymmetricExample) {
  const auto f = head_frame<double>(Vector3d(-1, 0, 0), Vector3d(1, 0, 0), Vector3d(0, 2, 0));
  EXPECT_TRUE(f.forward().isApprox(Vector3d(0, 1, 0), 1e-15));
  EXPECT_TRUE(f.lateral().isApprox(Vector3d(1, 0, 0), 1e-15));
  EXPECT_TRUE(f.up().isApprox(Vector3d(0, 0, -1), 1e-15));
  EXPECT_EQ(f.origin, Vector3d::Zero());
  EXPECT_NEAR(f.rotation.determinant(), 1.0, 1e-15);
}

TEST(HeadFrame, DegenerateInputs) {
  EXPECT_THROW(head_frame<double>(Vector3d(0, 0, 0), Vector3d(2, 0, 0), Vector3d(5, 0, 0)), DegenerateFrameError);
  EXPECT_THROW(head_frame<double>(Vector3d(1, 1, 1), Vector3d(1, 1, 1), Vector3d(5, 0, 0)), DegenerateFrameError);
  EXPECT_THROW(head_frame<double>(Vector3d(-1, 0, 0), Vector3d(1, 0, 0), Vector3d(0, 0, 0)), DegenerateFrameError);
  EXPECT_THROW(head_frame<double>(Vector3d::Zero(), Vector3d::Zero(), Vector3d::Zero()), DegenerateFrameError);
}

TEST(HeadFrame, OrthonormalAndEquivariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector3d l(u(rng), u(rng), u(rng)), r(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    HeadFrame<double> f;
    try {
      f = head_frame<double>(l, r, b);
    } catch (const DegenerateFrameError&) {
      continue;
    }
    EXPECT_TRUE((f.rotation.transpose() * f.rotation).isApprox(Matrix3d::Identity(), 1e-12));
    EXPECT_NEAR(f.rotation.determinant(), 1.0, 1e-12);
    const Matrix3d Q = random_rotation(rng);
    const Vector3d t(u(rng), u(rng), u(rng));
    const auto g = head_frame<double>(Q * l + t, Q * r + t, Q * b + t);
    EXPECT_TRUE(g.rotation.isApprox(Q * f.rotation, 1e-9));
    EXPECT_TRUE(g.origin.isApprox(Q * f.origin + t, 1e-9));
  }
}

TEST(RotationError, IdentityAndPureYaw) {
  const auto gt = head_frame<double>(Vector3d(-1, 0.3, 0), Vector3d(1, 0, 0.2), Vector3d(0.1, 2, 0));
  const auto zero = rotation_error(gt, gt);
  EXPECT_EQ(zero.yaw_deg, 0.0);
  EXPECT_EQ(zero.pitch_deg, 0.0);
  EXPECT_EQ(zero.roll_deg, 0.0);
  EXPECT_NEAR(zero.geodesic_deg, 0.0, 1e-12);
  const Matrix3d turn = Eigen::AngleAxisd(5.0 * kDeg, gt.up()).toRotationMatrix();
  const HeadFrame<double> pred{gt.origin, turn * gt.rotation};
  const auto e = rotation_error(pred, gt);
  EXPECT_NEAR(e.yaw_deg, 5.0, 1e-9);
  EXPECT_NEAR(e.pitch_deg, 0.0, 1e-9);
  EXPECT_NEAR(e.roll_deg, 0.0, 1e-9);
  EXPECT_NEAR(e.geodesic_deg, 5.0, 1e-9);
}

TEST(EulerAngles, RoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> angle(-179.9, 179.9), pitch(-88.9, 88.9);
  for (int trial = 0; trial < 10000; ++trial) {
    const double y = angle(rng), p = pitch(rng), r = angle(rng);
    const auto e = euler_from_rotation<double>(rotation_from_euler(y * kDeg, p * kDeg, r * kDeg));
    EXPECT_FALSE(e.gimbal_lock);
    EXPECT_NEAR(e.yaw / kDeg, y, 1e-9);
    EXPECT_NEAR(e.pitch / kDeg, p, 1e-9);
    EXPECT_NEAR(e.roll / kDeg, r, 1e-9);
  }
}

TEST(EulerAngles, GimbalLockIsFlagged) {
  const auto e = euler_from_rotation<double>(rotation_from_euler(0.3, std::numbers::pi / 2.0, 0.1));
  EXPECT_TRUE(e.gimbal_lock);
  EXPECT_EQ(e.roll, 0.0);
  EXPECT_NEAR(e.yaw, 0.3 - 0.1, 1e-9);
  const auto down = euler_from_rotation<double>(rotation_from_euler(0.3, -std::numbers::pi / 2.0, 0.1));
  EXPECT_TRUE(down.gimbal_lock);
  EXPECT_NEAR(down.yaw, 0.3 + 0.1, 1e-9);
}

TEST(RotationError, Properties) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = frame_with(random_rotation(rng));
    const auto b = frame_with(random_rotation(rng));
    const auto ab = rotation_error(a, b), ba = rotation_error(b, a);
    EXPECT_NEAR(ab.geodesic_deg, ba.geodesic_deg, 1e-9);
    EXPECT_LE(ab.geodesic_deg, ab.yaw_deg + ab.pitch_deg + ab.roll_deg + 1e-6);
    EXPECT_NEAR(rotation_error(a, a).geodesic_deg, 0.0, 1e-6);
    const Matrix3d Q = random_rotation(rng);
    const auto moved = rotation_error(frame_with(Q * a.rotation), frame_with(Q * b.rotation));
    EXPECT_NEAR(moved.yaw_deg, ab.yaw_deg, 1e-9);
    EXPECT_NEAR(moved.pitch_deg, ab.pitch_deg, 1e-9);
    EXPECT_NEAR(moved.roll_deg, ab.roll_deg, 1e-9);
    EXPECT_NEAR(moved.geodesic_deg, ab.geodesic_deg, 1e-9);
  }
}

TEST(RotationError, SingleAxisErrorsAreSymmetric) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> angle(-60.0, 60.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Matrix3d base = random_rotation(rng);
    const double a = angle(rng) * kDeg;
    for (int axis = 0; axis < 3; ++axis) {
      const Matrix3d step = Eigen::AngleAxisd(a, Vector3d::Unit(axis)).toRotationMatrix();
      const auto gt = frame_with(base), pred = frame_with(base * step);
      const auto ab = rotation_error(pred, gt), ba = rotation_error(gt, pred);
      EXPECT_NEAR(ab.yaw_deg, ba.yaw_deg, 1e-9);
      EXPECT_NEAR(ab.pitch_deg, ba.pitch_deg, 1e-9);
      EXPECT_NEAR(ab.roll_deg, ba.roll_deg, 1e-9);
    }
  }
}

TEST(AngularSummary, Examples) {
  const std::vector<RotationError<double>> zero = {error_of(0, 0, 0, 0), error_of(0, 0, 0, 0)};
  const auto z = angular_summary(zero);
  EXPECT_EQ(z.rmse_deg, 0.0);
  EXPECT_EQ(z.median_deg_pooled, 0.0);
  EXPECT_EQ(z.median_geodesic_deg, 0.0);
  const std::vector<RotationError<double>> yaw = {error_of(2, 0, 0, 2), error_of(4, 0, 0, 4)};
  const auto s = angular_summary(yaw, 3);
  EXPECT_NEAR(s.rmse_deg, 1.8257418583505538, 1e-15);
  EXPECT_EQ(s.median_yaw_deg, 3.0);
  EXPECT_EQ(s.median_pitch_deg, 0.0);
  EXPECT_EQ(s.median_deg_pooled, 0.0);
  EXPECT_EQ(s.median_geodesic_deg, 3.0);
  EXPECT_EQ(s.n_frames, 2u);
  EXPECT_EQ(s.n_degenerate, 3u);
  EXPECT_THROW(angular_summary(std::vector<RotationError<double>>{}), MetricError);
}

TEST(AngularSummary, GazeThreshold) {
  AngularErrorSummary s;
  s.median_deg_pooled = 3.34;
  EXPECT_TRUE(gaze_acceptable(s));
  s.median_deg_pooled = 5.0;
  EXPECT_TRUE(gaze_acceptable(s));
  s.median_deg_pooled = 5.01;
  EXPECT_FALSE(gaze_acceptable(s));
  EXPECT_TRUE(gaze_acceptable(s, 6.0));
}

TEST(EvaluateGaze, RigidMotionInvarianceAndThreads) {
  synth::RigSpec spec;
  spec.n_frames = 30;
  const auto data = synth::gen_rig(synth::make_rig(spec));
  const auto pred = synth::perturb_isotropic(data.gt3d, 1.5, synth::kHeadKeypoints, 5);
  const auto a = evaluate_gaze(pred, data.gt3d, {}, 1);
  EXPECT_EQ(a.errors.size(), data.gt3d.size());
  const Matrix3d Q = Eigen::AngleAxisd(1.1, Vector3d(0.3, -1, 2).normalized()).toRotationMatrix();
  auto move = [&](std::vector<KeypointFrame3D> frames) {
    for (auto& f : frames)
      for (auto& [name, p] : f.points) p = Q * p + Vector3d(5, 6, 7);
    return frames;
  };
  const auto b = evaluate_gaze(move(pred), move(data.gt3d), {}, 1);
  ASSERT_EQ(a.errors.size(), b.errors.size());
  for (std::size_t i = 0; i < a.errors.size(); ++i) {
    EXPECT_NEAR(a.errors[i].yaw_deg, b.errors[i].yaw_deg, 1e-9);
    EXPECT_NEAR(a.errors[i].pitch_deg, b.errors[i].pitch_deg, 1e-9);
    EXPECT_NEAR(a.errors[i].roll_deg, b.errors[i].roll_deg, 1e-9);
    EXPECT_NEAR(a.errors[i].geodesic_deg, b.errors[i].geodesic_deg, 1e-9);
  }
  const auto c = evaluate_gaze(pred, data.gt3d, {}, 8);
  EXPECT_EQ(c.summary.rmse_deg, a.summary.rmse_deg);
  EXPECT_EQ(c.summary.median_deg_pooled, a.summary.median_deg_pooled);
}

TEST(EvaluateGaze, CountsUnmatchedAndDegenerate) {
  std::vector<KeypointFrame3D> gt = {
      {0, "b", {{"left_eye", {0, -8, 0}}, {"right_eye", {0, 8, 0}}, {"beak", {20, 0, 0}}}},
      {1, "b", {{"left_eye", {0, -8, 0}}, {"right_eye", {0, 8, 0}}, {"beak", {20, 0, 0}}}},
      {2, "b", {{"left_eye", {0, -8, 0}}, {"right_eye", {0, 8, 0}}}},
  };
  std::vector<KeypointFrame3D> pred = gt;
  pred[1].points["beak"] = {0, 16, 0};
  const auto e = evaluate_gaze(pred, gt);
  EXPECT_EQ(e.errors.size(), 1u);
  EXPECT_EQ(e.summary.n_degenerate, 1u);
  EXPECT_EQ(e.n_unmatched, 1u);
}
