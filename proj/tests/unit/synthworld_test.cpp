#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "egofuture/error.hpp"
#include "egofuture/geometry.hpp"
#include "egofuture/synthworld.hpp"
#include "fixtures.hpp"

using namespace egofuture;
using namespace egofuture::testing;

namespace {

World open_world() {
  WorldParams p;
  p.kind = WorldTemplate::kOpen;
  return generate_world(p, 1);
}

World single_box(std::uint64_t seed) {
  WorldParams p;
  p.kind = WorldTemplate::kSingleBox;
  return generate_world(p, seed);
}

// Breadth-first search over clear grid points; returns the visited set.
std::vector<bool> flood(const World& w, const Eigen::Vector2d& start, double step, double radius, int& cols) {
  cols = static_cast<int>(std::ceil((w.bounds.x_max - w.bounds.x_min) / step)) + 1;
  const int rows = static_cast<int>(std::ceil((w.bounds.z_max - w.bounds.z_min) / step)) + 1;
  auto at = [&](int r, int c) { return Eigen::Vector2d(w.bounds.x_min + c * step, w.bounds.z_min + r * step); };
  std::vector<bool> seen(static_cast<std::size_t>(rows * cols), false);
  std::deque<std::pair<int, int>> q;
  const int r0 = static_cast<int>(std::lround((start.y() - w.bounds.z_min) / step));
  const int c0 = static_cast<int>(std::lround((start.x() - w.bounds.x_min) / step));
  q.emplace_back(r0, c0);
  seen[static_cast<std::size_t>(r0 * cols + c0)] = true;
  while (!q.empty()) {
    const auto [r, c] = q.front();
    q.pop_front();
    const std::pair<int, int> next[] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& [nr, nc] : next) {
      if (nr < 0 || nc < 0 || nr >= rows || nc >= cols || seen[static_cast<std::size_t>(nr * cols + nc)]) continue;
      if (!point_clear(w, at(nr, nc), radius)) continue;
      seen[static_cast<std::size_t>(nr * cols + nc)] = true;
      q.emplace_back(nr, nc);
    }
  }
  return seen;
}

}  // namespace

TEST(GenerateWorld, RandomBoxCountRange) {
  WorldParams p;
  p.box_count_min = 0;
  p.box_count_max = 0;
  EXPECT_TRUE(generate_world(p, 3).boxes.empty());
  p.box_count_min = 5;
  p.box_count_max = 5;
  EXPECT_EQ(generate_world(p, 3).boxes.size(), 5u);
}

TEST(GenerateWorld, SeedDeterminesWorld) {
  WorldParams p;
  const nlohmann::json a = generate_world(p, 11);
  const nlohmann::json b = generate_world(p, 11);
  const nlohmann::json c = generate_world(p, 12);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_NE(a.dump(), c.dump());
}

TEST(GenerateWorld, JsonRoundTrip) {
  for (const auto t : kAllTemplates) {
    WorldParams p;
    p.kind = t;
    const World w = generate_world(p, 4);
    const nlohmann::json j = w;
    const World back = j.get<World>();
    EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
    EXPECT_EQ(parse_world_template(to_string(t)), t);
  }
}

TEST(GenerateWorld, BadParamsThrow) {
  WorldParams p;
  p.box_count_min = 3;
  p.box_count_max = 2;
  EXPECT_THROW(generate_world(p, 1), Error);
  EXPECT_THROW(parse_world_template("maze"), Error);
}

TEST(GenerateWorld, YJunctionBranchesReachableFromStem) {
  WorldParams p;
  p.kind = WorldTemplate::kYJunction;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const World w = generate_world(p, seed);
    const Region* stem = w.find_region("stem");
    ASSERT_NE(stem, nullptr);
    int cols = 0;
    const double step = 0.25;
    const auto seen = flood(w, stem->rect.center(), step, 0.35, cols);
    for (const char* name : {"branch_pos_x", "branch_neg_x"}) {
      const Region* b = w.find_region(name);
      ASSERT_NE(b, nullptr);
      const Eigen::Vector2d c = b->rect.center();
      const int r = static_cast<int>(std::lround((c.y() - w.bounds.z_min) / step));
      const int col = static_cast<int>(std::lround((c.x() - w.bounds.x_min) / step));
      EXPECT_TRUE(seen[static_cast<std::size_t>(r * cols + col)]) << name;
    }
    // The divider separates the branches at their far end.
    const Eigen::Vector2d mid(0.0, w.bounds.z_max - 2.0);
    EXPECT_FALSE(point_clear(w, mid, 0.35));
  }
}

TEST(Occupancy, PointAndSegmentOracles) {
  World w;
  w.bounds = {-10, 10, -10, 10};
  w.boxes.push_back(Box{{-1, 0, -1}, {1, 1, 1}});
  EXPECT_FALSE(point_clear(w, {0, 0}, 0.0));
  EXPECT_TRUE(point_clear(w, {1.5, 0}, 0.4));
  EXPECT_FALSE(point_clear(w, {1.5, 0}, 0.6));
  EXPECT_FALSE(point_clear(w, {9.8, 0}, 0.35));
  EXPECT_FALSE(segment_clear(w, {-3, 0}, {3, 0}, 0.0));
  EXPECT_TRUE(segment_clear(w, {-3, 2}, {3, 2}, 0.5));
  EXPECT_NEAR(clearance(w, {3, 0}), 2.0, 1e-12);
  EXPECT_NEAR(clearance(w, {0.5, 0}), -0.5, 1e-12);
}

TEST(SimulateAgent, StraightInOpenWorld) {
  const World w = open_world();
  AgentParams params;
  const AgentPath path = simulate_agent(w, {{0, -10}, {0, 10}}, params, 5);
  ASSERT_GT(path.poses.size(), 10u);
  EXPECT_GE(path.speed, params.speed_min);
  EXPECT_LE(path.speed, params.speed_max);
  for (std::size_t i = 0; i < path.poses.size(); ++i) {
    EXPECT_NEAR(path.poses[i].position.x(), 0.0, 1e-9);
    if (i > 0) {
      EXPECT_NEAR((path.poses[i].position - path.poses[i - 1].position).norm(), path.speed * path.dt, 1e-9);
    }
  }
  EXPECT_NEAR((path.poses.back().position - Eigen::Vector2d(0, 10)).norm(), 0.0, path.speed * path.dt);
}

TEST(SimulateAgent, DetourKeepsClearance) {
  AgentParams params;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const World w = single_box(seed);
    const AgentPath path = simulate_agent(w, {{0, -20}, {0, 20}}, params, seed);
    for (std::size_t i = 1; i < path.polyline.size(); ++i) {
      EXPECT_TRUE(segment_clear(w, path.polyline[i - 1], path.polyline[i], params.radius - 1e-6));
    }
    for (const auto& pose : path.poses) EXPECT_TRUE(point_clear(w, pose.position, params.radius - 1e-6));
    double length = 0.0;
    for (std::size_t i = 1; i < path.polyline.size(); ++i) length += (path.polyline[i] - path.polyline[i - 1]).norm();
    EXPECT_GT(length, 40.0);
    EXPECT_LT(length, 48.0);
  }
}

TEST(SimulateAgent, BlockedWaypointThrows) {
  const World w = single_box(1);
  const Box& b = w.boxes[0];
  const Eigen::Vector2d inside(0.5 * (b.min.x() + b.max.x()), 0.5 * (b.min.z() + b.max.z()));
  EXPECT_THROW(simulate_agent(w, {{0, -20}, inside}, AgentParams{}, 1), Error);
}

TEST(SimulateAgent, SameSeedSamePath) {
  WorldParams p;
  const World w = generate_world(p, 8);
  const auto wp = sample_waypoints(w, 40.0, AgentParams{}, 8);
  const AgentPath a = simulate_agent(w, wp, AgentParams{}, 8);
  const AgentPath b = simulate_agent(w, wp, AgentParams{}, 8);
  ASSERT_EQ(a.poses.size(), b.poses.size());
  for (std::size_t i = 0; i < a.poses.size(); ++i) {
    EXPECT_EQ(a.poses[i].position, b.poses[i].position);
    EXPECT_EQ(a.poses[i].yaw, b.poses[i].yaw);
    EXPECT_EQ(a.poses[i].pitch, b.poses[i].pitch);
  }
}

TEST(RenderDepth, LevelFloorRows) {
  World w;
  w.bounds = {-500, 500, -500, 500};
  const CameraIntrinsics k;
  const DepthImage d = render_depth(w, make_camera_pose({0, 0}, 0.0, 0.0, 1.6), k);
  for (int v = 70; v < k.height; v += 7) {
    EXPECT_NEAR(d.at(80, v), 1.6 * k.fy / (v - k.cy), 1e-9);
  }
  EXPECT_EQ(d.at(80, 10), 0.0);
}

TEST(RenderDepth, FrontalWall) {
  World w;
  w.bounds = {-50, 50, -50, 50};
  w.boxes.push_back(Box{{-20, 0, 4}, {20, 10, 5}});
  const DepthImage d = render_depth(w, make_camera_pose({0, 0}, 0.0, 0.0, 1.6), CameraIntrinsics{});
  for (int u = 10; u < 150; u += 20) EXPECT_NEAR(d.at(u, 40), 4.0, 1e-9);
}

TEST(RenderDepth, NoiseIsSeeded) {
  const World w = single_box(2);
  const CameraPose pose = make_camera_pose({0, -10}, 0.0, 30 * kDeg, 1.6);
  RenderOptions o;
  o.noise_sigma = 0.01;
  const DepthImage a = render_depth(w, pose, CameraIntrinsics{}, o, 3);
  const DepthImage b = render_depth(w, pose, CameraIntrinsics{}, o, 3);
  const DepthImage c = render_depth(w, pose, CameraIntrinsics{}, o, 4);
  EXPECT_TRUE(std::ranges::equal(a.data(), b.data()));
  EXPECT_FALSE(std::ranges::equal(a.data(), c.data()));
}

TEST(RenderDepth, RefitGroundWithinOneCentimeter) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const World w = box_world();
  for (int i = 0; i < 10; ++i) {
    const double eye = 1.5 + 0.25 * u(rng);
    const CameraPose pose = make_camera_pose({2 * u(rng) - 1, -15 + 5 * u(rng)}, 0.3 * u(rng) - 0.15,
                                             (20 + 30 * u(rng)) * kDeg, eye);
    const PlaneFit fit = fit_ground_plane(backproject(render_depth(w, pose, CameraIntrinsics{})), camera_up(pose), 1.6);
    const GroundPlane truth = exact_ground_plane(pose);
    EXPECT_NEAR(fit.plane.camera_height(), eye, 0.01);
    EXPECT_GT(fit.plane.normal.dot(truth.normal), std::cos(0.5 * kDeg));
  }
}

TEST(OracleOccluded, EmptyWorldHasNone) {
  const CameraPose pose = make_camera_pose({0, 0}, 0.0, 30 * kDeg, 1.6);
  const EgoFrame frame = build_ego_frame(exact_ground_plane(pose));
  const GroundGrid g = GroundGrid::make(GroundExtent{}, 0.5);
  for (const bool b : oracle_occluded_free(open_world(), pose, frame, g)) EXPECT_FALSE(b);
}

TEST(OracleOccluded, BoxCastsShadow) {
  World w;
  w.bounds = {-30, 30, -30, 30};
  w.boxes.push_back(Box{{-1, 0, 4}, {1, 1, 5}});
  const CameraPose pose = make_camera_pose({0, 0}, 0.0, 30 * kDeg, 1.6);
  const EgoFrame frame = build_ego_frame(exact_ground_plane(pose));
  const GroundGrid g = GroundGrid::make(GroundExtent{}, 0.25);
  const auto labels = oracle_occluded_free(w, pose, frame, g);
  int hidden = 0;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const Eigen::Vector2d e = g.cell_center(r, c);
      const Eigen::Vector2d p = ego_to_world(pose, frame, e);
      const bool label = labels[static_cast<std::size_t>(r) * g.cols + c];
      hidden += label;
      // Hidden implies free and beyond the box's near face.
      if (label) {
        EXPECT_FALSE(w.boxes[0].contains_ground(p.x(), p.y()));
        EXPECT_GT(p.y(), 4.0);
      }
      // Directly behind the box within its shadow length (1.6 / 0.6 * 5 = 13.3).
      if (std::abs(p.x()) < 0.5 && p.y() > 5.2 && p.y() < 13.0) EXPECT_TRUE(label);
    }
  }
  EXPECT_GT(hidden, 50);
}

TEST(EgoToWorld, InvertsCameraProjection) {
  const CameraPose pose = make_camera_pose({3, -2}, 0.7, 25 * kDeg, 1.7);
  const EgoFrame frame = build_ego_frame(exact_ground_plane(pose));
  const Eigen::Vector2d p = ego_to_world(pose, frame, {0, 4});
  // Four meters along the yaw heading; forward is (sin yaw, cos yaw).
  EXPECT_NEAR((p - Eigen::Vector2d(3 + 4 * std::sin(0.7), -2 + 4 * std::cos(0.7))).norm(), 0.0, 1e-9);
}
