#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "egofuture/database.hpp"
#include "egofuture/error.hpp"
#include "egofuture/evalharness.hpp"
#include "egofuture/predictor.hpp"
#include "egofuture/synthworld.hpp"
#include "fixtures.hpp"

using namespace egofuture;
using namespace egofuture::testing;

namespace {

EgoSpaceMap constant_map(double value) {
  const GridSpec spec;
  return EgoSpaceMap(spec, Eigen::MatrixXd::Constant(spec.n_radius, spec.n_theta, value),
                     std::vector<CellState>(spec.cell_count(), CellState::kObserved));
}

TrajectoryBasis straight_basis() {
  std::vector<Trajectory> set;
  for (int i = 0; i < 12; ++i) {
    Trajectory t;
    const double speed = 0.8 + 0.05 * i;
    const double bend = 0.004 * (i - 6);
    for (int j = 1; j <= kF; ++j) t.points.emplace_back(bend * j * j, speed * kDt * j);
    set.push_back(t);
  }
  return learn_pca_basis(set, 6).basis;
}

Coefficients straight_beta(const TrajectoryBasis& b, double speed) {
  return fit_coefficients(straight_trajectory(speed, kF, kDt), b);
}

// Independent bilinear lookup in (theta, 1/r) written from the grid definition.
double oracle_phi(const EgoSpaceMap& m, double x, double z) {
  const GridSpec& g = m.spec();
  const double r = std::sqrt(x * x + z * z);
  if (r < g.r_min) return 0.0;
  const double theta = std::atan2(z, x);
  if (r > g.r_max || theta < g.theta_min || theta > g.theta_max) return g.phi_max;
  const double u = (theta - g.theta_min) / (g.theta_max - g.theta_min) * (g.n_theta - 1);
  const double v = (1.0 / g.r_min - 1.0 / r) / (1.0 / g.r_min - 1.0 / g.r_max) * (g.n_radius - 1);
  const int i = std::min(static_cast<int>(std::floor(u)), g.n_theta - 2);
  const int j = std::min(static_cast<int>(std::floor(v)), g.n_radius - 2);
  const double a = u - i;
  const double c = v - j;
  return (1 - a) * (1 - c) * m.phi(j, i) + a * (1 - c) * m.phi(j, i + 1) + (1 - a) * c * m.phi(j + 1, i) +
         a * c * m.phi(j + 1, i + 1);
}

struct BoxScene {
  World world;
  CameraPose pose;
  EgoFrame frame;
  EgoSpaceMap map;
};

BoxScene box_ahead(double cx) {
  BoxScene s;
  s.world.bounds = {-30, 30, -30, 30};
  s.world.boxes.push_back(Box{{cx - 0.4, 0, 3.0}, {cx + 0.4, 2.2, 3.6}});
  s.pose = make_camera_pose({0, 0}, 0.0, 30 * kDeg, 1.6);
  s.frame = build_ego_frame(exact_ground_plane(s.pose));
  s.map = compute_egospace(render_depth(s.world, s.pose, CameraIntrinsics{}), s.frame, GridSpec{});
  return s;
}

const TrainingDatabase& walk_db() {
  static const TrainingDatabase db = build_database(corpus_samples(), GridSpec{}, BuildOptions{});
  return db;
}

}  // namespace

TEST(GroundCost, FreeGroundIsZero) {
  const auto b = straight_basis();
  EXPECT_EQ(ground_cost(straight_beta(b, 1.0), b, constant_map(0.0)), 0.0);
}

TEST(GroundCost, ConstantFieldSumsOverHorizon) {
  const auto b = straight_basis();
  EXPECT_NEAR(ground_cost(straight_beta(b, 1.2), b, constant_map(1.0)), 30.0, 1e-12);
}

TEST(GroundCost, MatchesIndependentSummation) {
  const auto b = straight_basis();
  const BoxScene s = box_ahead(0.2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int c = 0; c < 100; ++c) {
    Coefficients beta(b.size());
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta(i) = n(rng);
    double expect = 0.0;
    for (const auto& p : reconstruct(beta, b).points) expect += oracle_phi(s.map, p.x(), p.y());
    EXPECT_NEAR(ground_cost(beta, b, s.map), expect, 1e-9);
  }
}

TEST(HingeCost, SaturatedReferenceIsZero) {
  const auto b = straight_basis();
  const Eigen::VectorXd ref = Eigen::VectorXd::Constant(kF, 2.0);
  const BoxScene s = box_ahead(0.0);
  EXPECT_EQ(hinge_cost(straight_beta(b, 1.0), b, s.map, ref), 0.0);
}

TEST(HingeCost, ZeroReferenceIsGroundCost) {
  const auto b = straight_basis();
  const BoxScene s = box_ahead(0.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(kF);
  for (const double speed : {0.6, 1.0, 1.4}) {
    const Coefficients beta = straight_beta(b, speed);
    EXPECT_EQ(hinge_cost(beta, b, s.map, zero), ground_cost(beta, b, s.map));
  }
}

TEST(HingeCost, PartialOverlap) {
  const auto b = straight_basis();
  const Eigen::VectorXd ref = Eigen::VectorXd::Constant(kF, 0.6);
  EXPECT_NEAR(hinge_cost(straight_beta(b, 1.2), b, constant_map(1.0), ref), 30 * 0.4, 1e-12);
}

TEST(HingeCost, WrongReferenceLengthThrows) {
  const auto b = straight_basis();
  EXPECT_THROW(hinge_cost(straight_beta(b, 1.0), b, constant_map(0.0), Eigen::VectorXd::Zero(3)), Error);
}

TEST(HingeCost, AnalyticGradientMatchesFiniteDifference) {
  const auto b = straight_basis();
  const BoxScene s = box_ahead(0.1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(kF);
  Coefficients beta = straight_beta(b, 1.0);
  beta(1) += 0.7;
  const Eigen::VectorXd g = hinge_cost_gradient(beta, b, s.map, zero);
  for (Eigen::Index c = 0; c < beta.size(); ++c) {
    Coefficients up = beta;
    Coefficients down = beta;
    up(c) += 1e-6;
    down(c) -= 1e-6;
    const double fd = (hinge_cost(up, b, s.map, zero) - hinge_cost(down, b, s.map, zero)) / 2e-6;
    EXPECT_NEAR(g(c), fd, 1e-3 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Refine, ZeroInitialCostIsPlateau) {
  const auto b = straight_basis();
  TrainingEntry e;
  e.traj_cost = Eigen::VectorXd::Zero(kF);
  const Coefficients beta = straight_beta(b, 1.0);
  const PredictedTrajectory p = refine(beta, b, constant_map(0.0), e, PredictionConfig{});
  EXPECT_EQ(p.beta, beta);
  EXPECT_EQ(p.status, RefineStatus::kPlateau);
  EXPECT_EQ(p.iterations, 0);
  EXPECT_EQ(p.cost_history.size(), 1u);
}

TEST(Refine, CostHistoryIsNonIncreasing) {
  const auto b = straight_basis();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (const double cx : {-0.5, 0.0, 0.3}) {
    const BoxScene s = box_ahead(cx);
    for (int c = 0; c < 10; ++c) {
      TrainingEntry e;
      e.traj_cost = Eigen::VectorXd::Zero(kF);
      for (int i = 0; i < kF; i += 4) e.traj_cost(i) = std::abs(n(rng));
      Coefficients beta = straight_beta(b, 0.9 + 0.1 * n(rng));
      beta(1) += 0.5 * n(rng);
      const PredictedTrajectory p = refine(beta, b, s.map, e, PredictionConfig{});
      for (std::size_t i = 1; i < p.cost_history.size(); ++i) EXPECT_LE(p.cost_history[i], p.cost_history[i - 1]);
      EXPECT_LE(p.final_cost, p.init_cost);
      EXPECT_DOUBLE_EQ(p.final_cost, hinge_cost(p.beta, b, s.map, e.traj_cost));
    }
  }
}

TEST(Refine, StraightPathThroughBoxImproves) {
  const auto b = straight_basis();
  const BoxScene s = box_ahead(0.25);
  TrainingEntry e;
  e.traj_cost = Eigen::VectorXd::Zero(kF);
  const Coefficients beta = straight_beta(b, 1.0);
  const PredictedTrajectory p = refine(beta, b, s.map, e, PredictionConfig{});
  EXPECT_GT(p.init_cost, 0.0);
  EXPECT_LT(ground_cost(p.beta, b, s.map), ground_cost(beta, b, s.map));
}

TEST(Refine, RegularizerPullsTowardRetrieved) {
  const auto b = straight_basis();
  const BoxScene s = box_ahead(0.25);
  TrainingEntry e;
  e.traj_cost = Eigen::VectorXd::Zero(kF);
  const Coefficients beta = straight_beta(b, 1.0);
  PredictionConfig loose;
  PredictionConfig tight;
  tight.reg_lambda = 10.0;
  const double d_loose = (refine(beta, b, s.map, e, loose).beta - beta).norm();
  const double d_tight = (refine(beta, b, s.map, e, tight).beta - beta).norm();
  EXPECT_LT(d_tight, d_loose);
}

TEST(Predict, EmptyFloorCostsNothing) {
  World w;
  w.bounds = {-40, 40, -40, 40};
  const CameraPose pose = make_camera_pose({0, 0}, 0.0, 30 * kDeg, 1.6);
  PredictionConfig pc;
  pc.k = 10;
  pc.up_prior = camera_up(pose);
  const Prediction p = predict(render_depth(w, pose, CameraIntrinsics{}), walk_db(), pc);
  ASSERT_EQ(p.candidates.size(), 10u);
  for (const auto& c : p.candidates) EXPECT_EQ(c.final_cost, 0.0);
}

TEST(Predict, HeldInFrameRecoversItsFuture) {
  const auto samples = corpus_samples();
  const FrameSample& s = samples[17];
  TestView view;
  view.frame = s.frame;
  view.map = s.map;
  view.pitch = s.pitch;
  PredictionConfig pc;
  pc.k = 5;
  const Prediction p = predict(view, walk_db(), pc);
  EXPECT_LT(max_point_error(reconstruct(p.candidates.front().beta, walk_db().basis()), s.future), 1.5);
  for (std::size_t i = 1; i < p.candidates.size(); ++i) {
    EXPECT_LE(p.candidates[i - 1].final_cost, p.candidates[i].final_cost);
  }
}

TEST(Predict, NoOptEqualsZeroIterations) {
  const auto samples = corpus_samples();
  const FrameSample& s = samples[40];
  TestView view;
  view.frame = s.frame;
  view.map = box_ahead(0.0).map;
  view.pitch = s.pitch;
  PredictionConfig pc;
  pc.k = 8;
  pc.max_iters = 0;
  const Prediction p = predict(view, walk_db(), pc);
  const auto noopt = baseline_predict(BaselineMode::kEgoSpaceNoOpt, view, walk_db(), pc);
  ASSERT_EQ(noopt.size(), p.candidates.size());
  for (const auto& c : p.candidates) {
    EXPECT_EQ(c.beta, c.beta_init);
    EXPECT_EQ(reconstruct(c.beta, walk_db().basis()).points, noopt[c.knn_rank].points);
  }
}

TEST(Baselines, StraightUsesMeanSpeed) {
  const Trajectory t = straight_trajectory(1.2, kF, kDt);
  for (int i = 0; i < kF; ++i) EXPECT_NEAR((t.points[i] - Eigen::Vector2d(0, 0.6 * (i + 1))).norm(), 0.0, 1e-12);
}

TEST(Baselines, MeanSpeedMatchesRecomputation) {
  const TrainingDatabase back = decode_egdb(encode_egdb(walk_db()));
  double sum = 0.0;
  for (const auto& e : back.entries()) {
    const Trajectory t = reconstruct(e.beta, back.basis());
    double length = t.points[0].norm();
    for (int i = 1; i < kF; ++i) length += (t.points[i] - t.points[i - 1]).norm();
    sum += length / (kF * back.basis().dt);
  }
  EXPECT_NEAR(mean_speed(walk_db()), sum / back.size(), 1e-9);
}

TEST(Baselines, IdenticalStraightDatabase) {
  std::vector<Sequence> seqs;
  for (std::uint32_t i = 0; i < 3; ++i) seqs.push_back(straight_walk(i, kF + 2, 1.0, 30.0));
  const TrainingDatabase db = build_database(seqs, GridSpec{}, 6, kF, kDt);
  const Trajectory base = baseline_straight(db);
  for (const auto& e : db.entries()) EXPECT_LT(max_point_error(base, reconstruct(e.beta, db.basis())), 1e-3);
}

TEST(Baselines, Pure2dSelfRetrieval) {
  const auto samples = corpus_samples();
  const DepthBaselineDatabase depth_db = build_depth_database(samples, kDt);
  const FrameSample& s = samples[23];
  TestView view;
  view.frame = s.frame;
  PredictionConfig pc;
  pc.k = 3;
  const auto out = baseline_predict(BaselineMode::kPure2d, s.depth_feature, view, depth_db, pc);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_LT(max_point_error(out.front(), camera_aligned_trajectory(s.camera_future, kDt)), 1e-5);
}

TEST(Baselines, GroundPlaneProjectionLiesOnTestPlane) {
  const auto samples = corpus_samples();
  const FrameSample& s = samples[5];
  const auto pts = to_test_ground_plane(s.camera_future, s.frame);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pts[i].y(), 0.0, 1e-9);
    const Eigen::Vector3d e = s.frame.to_ego(s.camera_future[i]);
    EXPECT_NEAR(pts[i].x(), e.x(), 1e-12);
    EXPECT_NEAR(pts[i].z(), e.z(), 1e-12);
  }
}

TEST(Predict, YJunctionPredictsBothBranches) {
  SynthConfig train;
  train.seed = 71;
  train.worlds = 10;
  train.templates = {WorldTemplate::kYJunction};
  const TrainingDatabase db = build_database(synthesize_samples(train, GridSpec{}, kF), GridSpec{}, BuildOptions{});

  SynthConfig test = train;
  test.seed = 72;
  test.worlds = 3;
  int frames = 0;
  int both = 0;
  for (const TestFrame& f : synthesize_test_frames(test, GridSpec{}, kF)) {
    const Rect& stem = f.world->find_region("stem")->rect;
    const Eigen::Vector2d at(f.pose.center.x(), f.pose.center.z());
    // Walking up the stem toward the junction. Closer in, gaze lead and
    // lateral drift already reveal the chosen branch.
    if (!stem.contains(at.x(), at.y()) || at.y() < stem.z_max - 12.0 || at.y() > stem.z_max - 6.0) continue;
    if (f.sample.future.points.back().y() < 8.0) continue;
    TestView view;
    view.frame = f.sample.frame;
    view.map = f.sample.map;
    view.pitch = f.sample.pitch;
    PredictionConfig pc;
    pc.k = 30;
    const Prediction p = predict(view, db, pc);
    bool pos = false;
    bool neg = false;
    for (const auto& c : p.candidates) {
      const Eigen::Vector2d end = ego_to_world(f.pose, f.sample.frame, point_at(c.beta, db.basis(), kF - 1));
      pos = pos || f.world->find_region("branch_pos_x")->rect.contains(end.x(), end.y());
      neg = neg || f.world->find_region("branch_neg_x")->rect.contains(end.x(), end.y());
    }
    ++frames;
    both += pos && neg;
  }
  ASSERT_GT(frames, 0);
  EXPECT_GE(both * 4, frames) << both << " of " << frames;
}
