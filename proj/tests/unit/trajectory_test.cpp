#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "egofuture/error.hpp"
#include "egofuture/synthworld.hpp"
#include "egofuture/trajectory.hpp"

using namespace egofuture;

namespace {

constexpr int kF = 30;

Trajectory random_trajectory(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Trajectory t;
  double heading = 0.3 * n(rng);
  Eigen::Vector2d p(0, 0);
  const double speed = 1.0 + 0.2 * n(rng);
  for (int i = 0; i < kF; ++i) {
    heading += 0.05 * n(rng);
    p += 0.5 * speed * Eigen::Vector2d(std::sin(heading), std::cos(heading));
    t.points.push_back(p);
  }
  return t;
}

std::vector<Trajectory> random_set(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Trajectory> out;
  for (int i = 0; i < count; ++i) out.push_back(random_trajectory(rng));
  return out;
}

EgoFrame frame_of(const CameraPose& pose) { return build_ego_frame(exact_ground_plane(pose)); }

}  // namespace

TEST(EgoProjectFuture, StationaryCamera) {
  const CameraPose pose = make_camera_pose({1, 2}, 0.4, 0.5, 1.6);
  const std::vector<CameraPose> poses(kF + 1, pose);
  const Trajectory t = ego_project_future(poses, 0, kF, frame_of(pose), 0.5);
  ASSERT_EQ(t.horizon(), kF);
  for (const auto& p : t.points) EXPECT_NEAR(p.norm(), 0.0, 1e-12);
}

TEST(EgoProjectFuture, StraightWalkAlongGaze) {
  std::vector<CameraPose> poses;
  for (int i = 0; i <= kF; ++i) poses.push_back(make_camera_pose({0, 0.5 * i}, 0.0, 0.6, 1.6));
  const Trajectory t = ego_project_future(poses, 0, kF, frame_of(poses[0]), 0.5);
  for (int i = 0; i < kF; ++i) EXPECT_NEAR((t.points[i] - Eigen::Vector2d(0, 0.5 * (i + 1))).norm(), 0.0, 1e-9);
}

TEST(EgoProjectFuture, QuarterCircleMatchesArc) {
  const double radius = 5.0;
  const double omega = (std::numbers::pi / 2) / (kF * 0.5);
  std::vector<CameraPose> poses;
  for (int i = 0; i <= kF; ++i) {
    const double a = omega * 0.5 * i;
    poses.push_back(make_camera_pose({radius - radius * std::cos(a), radius * std::sin(a)}, a, 0.5, 1.6));
  }
  const Trajectory t = ego_project_future(poses, 0, kF, frame_of(poses[0]), 0.5);
  for (int i = 0; i < kF; ++i) {
    const double a = omega * 0.5 * (i + 1);
    EXPECT_NEAR((t.points[i] - Eigen::Vector2d(radius - radius * std::cos(a), radius * std::sin(a))).norm(), 0.0,
                1e-6);
  }
}

TEST(EgoProjectFuture, ShortSequenceThrows) {
  const std::vector<CameraPose> poses(5);
  EXPECT_THROW(ego_project_future(poses, 0, kF, EgoFrame{}, 0.5), Error);
}

TEST(LearnPca, IdenticalTrajectories) {
  std::mt19937_64 rng(1);
  const Trajectory t = random_trajectory(rng);
  const std::vector<Trajectory> set(20, t);
  const PcaFit fit = learn_pca_basis(set, 4);
  EXPECT_NEAR((fit.basis.mean - t.flatten()).norm(), 0.0, 1e-12);
  EXPECT_TRUE(fit.rank_deficient);
  EXPECT_EQ(fit.basis.size(), 4);
  EXPECT_NEAR((fit.basis.basis.transpose() * fit.basis.basis - Eigen::MatrixXd::Identity(4, 4)).norm(), 0.0, 1e-9);
  for (const double r : fit.explained_variance_ratio) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(LearnPca, LineFamilyNeedsOneColumn) {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd mean = random_trajectory(rng).flatten();
  Eigen::VectorXd d = random_trajectory(rng).flatten();
  std::vector<Trajectory> set;
  for (int i = -5; i <= 5; ++i) set.push_back(Trajectory::from_flat(mean + 0.3 * i * d, 0.5));
  const PcaFit fit = learn_pca_basis(set, 1);
  EXPECT_NEAR(fit.explained_variance_ratio.at(0), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(fit.basis.basis.col(0).dot(d.normalized())), 1.0, 1e-9);
}

TEST(LearnPca, RejectsBadK) {
  const auto set = random_set(10, 3);
  EXPECT_THROW(learn_pca_basis(set, 0), Error);
  EXPECT_THROW(learn_pca_basis(set, 2 * kF + 1), Error);
}

TEST(DctBasis, DcColumns) {
  const TrajectoryBasis b = make_dct_basis(kF, 2);
  ASSERT_EQ(b.size(), 2);
  const double c = 1.0 / std::sqrt(kF);
  for (int i = 0; i < kF; ++i) {
    EXPECT_NEAR(b.basis(2 * i, 0), c, 1e-12);
    EXPECT_NEAR(b.basis(2 * i + 1, 0), 0.0, 1e-12);
    EXPECT_NEAR(b.basis(2 * i, 1), 0.0, 1e-12);
    EXPECT_NEAR(b.basis(2 * i + 1, 1), c, 1e-12);
  }
}

TEST(DctBasis, CompleteBasisIsExact) {
  const TrajectoryBasis b = make_dct_basis(kF, 2 * kF);
  for (const auto& t : random_set(5, 4)) {
    EXPECT_LT(max_point_error(t, reconstruct(fit_coefficients(t, b), b)), 1e-9);
  }
}

TEST(DctBasis, RampTruncationError) {
  // Orthonormal DCT-II computed directly: the residual of keeping the first
  // K/2 frequencies per channel is the energy of the rest.
  Trajectory ramp;
  for (int i = 0; i < kF; ++i) ramp.points.emplace_back(0.0, 0.6 * (i + 1));
  double kept = 0.0;
  double total = 0.0;
  for (int k = 0; k < kF; ++k) {
    double c = 0.0;
    for (int n = 0; n < kF; ++n) c += ramp.points[n].y() * std::cos(std::numbers::pi * (n + 0.5) * k / kF);
    c *= std::sqrt((k == 0 ? 1.0 : 2.0) / kF);
    total += c * c;
    if (k < 2) kept += c * c;
  }
  const TrajectoryBasis b = make_dct_basis(kF, 4);
  const Trajectory r = reconstruct(fit_coefficients(ramp, b), b);
  EXPECT_NEAR((r.flatten() - ramp.flatten()).norm(), std::sqrt(total - kept), 1e-9);
}

TEST(DctBasis, RejectsOddK) { EXPECT_THROW(make_dct_basis(kF, 3), Error); }

TEST(FitCoefficients, MeanGivesZero) {
  const auto set = random_set(50, 5);
  const TrajectoryBasis b = learn_pca_basis(set, 6).basis;
  const Trajectory mean = Trajectory::from_flat(b.mean, 0.5);
  EXPECT_NEAR(fit_coefficients(mean, b).norm(), 0.0, 1e-12);
  const Trajectory r = reconstruct(Coefficients::Zero(6), b);
  EXPECT_NEAR((r.flatten() - b.mean).norm(), 0.0, 1e-12);
}

TEST(FitCoefficients, BasisAlignment) {
  const TrajectoryBasis b = learn_pca_basis(random_set(50, 6), 6).basis;
  const Coefficients beta = fit_coefficients(Trajectory::from_flat(b.mean + 2.0 * b.basis.col(0), 0.5), b);
  Coefficients expect = Coefficients::Zero(6);
  expect(0) = 2.0;
  EXPECT_NEAR((beta - expect).norm(), 0.0, 1e-12);
}

TEST(FitCoefficients, MatchesLeastSquares) {
  const TrajectoryBasis b = learn_pca_basis(random_set(50, 7), 6).basis;
  for (const auto& t : random_set(10, 8)) {
    const Eigen::VectorXd ls = b.basis.colPivHouseholderQr().solve(t.flatten() - b.mean);
    EXPECT_NEAR((fit_coefficients(t, b) - ls).norm(), 0.0, 1e-9);
  }
}

TEST(Reconstruct, ProjectorIdempotence) {
  const TrajectoryBasis b = learn_pca_basis(random_set(50, 9), 6).basis;
  for (const auto& t : random_set(10, 10)) {
    const Trajectory once = reconstruct(fit_coefficients(t, b), b);
    const Trajectory twice = reconstruct(fit_coefficients(once, b), b);
    EXPECT_LT(max_point_error(once, twice), 1e-9);
  }
}

TEST(PointAt, ConsistentWithReconstruct) {
  const TrajectoryBasis b = learn_pca_basis(random_set(50, 11), 6).basis;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  Coefficients beta(6);
  for (int i = 0; i < 6; ++i) beta(i) = n(rng);
  const Trajectory t = reconstruct(beta, b);
  for (int i = 0; i < kF; ++i) EXPECT_EQ(point_at(beta, b, i), t.points[i]);
  for (int i = 0; i < kF; ++i) {
    EXPECT_NEAR((point_at(Coefficients::Zero(6), b, i) - b.mean.segment<2>(2 * i)).norm(), 0.0, 1e-15);
  }
}

TEST(PointAt, JacobianIsBasisRows) {
  const TrajectoryBasis b = learn_pca_basis(random_set(50, 13), 6).basis;
  const Coefficients beta = Coefficients::Constant(6, 0.3);
  const double h = 1e-6;
  for (int i = 0; i < kF; i += 7) {
    for (int c = 0; c < 6; ++c) {
      Coefficients up = beta;
      Coefficients down = beta;
      up(c) += h;
      down(c) -= h;
      const Eigen::Vector2d d = (point_at(up, b, i) - point_at(down, b, i)) / (2 * h);
      EXPECT_NEAR(d.x(), b.basis(2 * i, c), 1e-8);
      EXPECT_NEAR(d.y(), b.basis(2 * i + 1, c), 1e-8);
    }
  }
}

TEST(Trajectory, PathLengthStartsAtOrigin) {
  Trajectory t;
  t.points = {{0, 1}, {0, 2}, {1, 2}};
  EXPECT_DOUBLE_EQ(t.path_length(), 3.0);
}

TEST(Trajectory, JsonRoundTrip) {
  const auto set = random_set(1, 14);
  const nlohmann::json j = set[0];
  const Trajectory back = j.get<Trajectory>();
  EXPECT_EQ(back.points, set[0].points);
  EXPECT_EQ(back.dt, set[0].dt);
}
