#pragma once

// Synthetic egocentric worlds: a ground plane (world y = 0, y up) carrying
// axis-aligned boxes, agents walking between waypoints, an analytic depth
// renderer and closed-form oracles for EgoSpace maps and occluded space.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "egofuture/discovery.hpp"
#include "egofuture/egospace_map.hpp"
#include "egofuture/geometry.hpp"
#include "egofuture/trajectory.hpp"

namespace egofuture {

struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains_ground(double x, double z) const { return x > min.x() && x < max.x() && z > min.z() && z < max.z(); }
  /// 2D distance from (x, z) to the footprint; 0 inside.
  double footprint_distance(double x, double z) const;
};

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;

  bool contains(double x, double z) const { return x >= x_min && x <= x_max && z >= z_min && z <= z_max; }
  Eigen::Vector2d center() const { return {0.5 * (x_min + x_max), 0.5 * (z_min + z_max)}; }
};

enum class WorldTemplate { kOpen, kSingleBox, kCorridor, kYJunction, kCornerTurn, kRandom };

const char* to_string(WorldTemplate t);
WorldTemplate parse_world_template(std::string_view name);
inline constexpr WorldTemplate kAllTemplates[] = {WorldTemplate::kOpen,      WorldTemplate::kSingleBox,
                                                  WorldTemplate::kCorridor,  WorldTemplate::kYJunction,
                                                  WorldTemplate::kCornerTurn, WorldTemplate::kRandom};

/// Named walkable area of a template ("stem", "junction", "branch", ...).
struct Region {
  std::string name;
  std::string kind;
  Rect rect;
};

struct World {
  WorldTemplate kind = WorldTemplate::kOpen;
  std::vector<Box> boxes;
  Rect bounds;
  std::vector<Region> regions;
  std::uint64_t seed = 0;

  void validate() const;
  const Region* find_region(std::string_view name) const;
};

struct WorldParams {
  WorldTemplate kind = WorldTemplate::kRandom;
  int box_count_min = 4;
  int box_count_max = 10;
  double footprint_min = 0.5;
  double footprint_max = 3.0;
  double height_min = 0.5;
  double height_max = 2.5;
};

World generate_world(const WorldParams& params, std::uint64_t seed);

void to_json(nlohmann::json& j, const World& w);
void from_json(const nlohmann::json& j, World& w);

// Occupancy oracle (footprints are the obstacles; space outside `bounds`
// counts as blocked for walking).
bool point_clear(const World& world, const Eigen::Vector2d& p, double radius);
bool segment_clear(const World& world, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double radius);
/// Signed distance to the nearest footprint or bound; negative inside a box.
double clearance(const World& world, const Eigen::Vector2d& p);

struct AgentParams {
  double radius = 0.35;
  double grid_resolution = 0.25;
  double speed_min = 0.8;
  double speed_max = 1.3;
  double dt = 0.5;
  std::vector<double> pitch_bands{24.0, 34.0, 44.0};  // degrees below the horizon
  double pitch_band_halfwidth = 2.0;
  double pitch_jitter = 0.5;
  double eye_height_min = 1.5;
  double eye_height_max = 1.75;
  int smoothing_iterations = 6;
  /// Gaze aims at the route point this many seconds ahead, plus a slowly
  /// wandering yaw offset.
  double gaze_lookahead = 3.0;
  double gaze_wander_sigma = 8.0;   // degrees
  double gaze_wander_tau = 2.0;     // seconds
};

struct AgentPose {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // world (x, z)
  double yaw = 0.0;      // gaze; forward is (sin yaw, cos yaw)
  double pitch = 0.0;    // radians below the horizon
  double eye_height = 1.6;

  CameraPose camera_pose() const;
};

struct AgentPath {
  std::vector<Eigen::Vector2d> waypoints;
  std::vector<Eigen::Vector2d> polyline;  // smoothed route
  std::vector<AgentPose> poses;           // sampled every dt at constant speed
  double speed = 1.0;
  double dt = 0.5;
};

/// A* on an inflated occupancy grid through every waypoint in order,
/// shortcut by line of sight, corner-cut with clearance preserved and
/// resampled at constant speed.
AgentPath simulate_agent(const World& world, const std::vector<Eigen::Vector2d>& waypoints,
                         const AgentParams& params, std::uint64_t seed);

/// Template-aware tour of at least `min_length` meters (0: one natural tour).
std::vector<Eigen::Vector2d> sample_waypoints(const World& world, double min_length, const AgentParams& params,
                                              std::uint64_t seed);

/// Camera axes in world coordinates for a heading, pitch and eye height.
CameraPose make_camera_pose(const Eigen::Vector2d& position, double yaw, double pitch, double eye_height);

/// Ground plane y = 0 expressed in the camera frame of `pose`.
GroundPlane exact_ground_plane(const CameraPose& pose);

struct RenderOptions {
  double max_depth = 60.0;
  double noise_sigma = 0.0;
};

DepthImage render_depth(const World& world, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                        const RenderOptions& options = {}, std::uint64_t noise_seed = 0);

/// Parameter along the segment a -> b (0..1) of the first box hit, if any.
std::optional<double> first_box_hit(const World& world, const Eigen::Vector3d& a, const Eigen::Vector3d& b);

/// Exact EgoSpace map by ray-box intersection. `frame` maps the camera of
/// `pose` to ego coordinates.
EgoSpaceMap oracle_egospace(const World& world, const CameraPose& pose, const EgoFrame& frame,
                            const CameraIntrinsics& intrinsics, const GridSpec& spec);

/// Per ground cell: free of boxes and hidden from the eye. Layout matches
/// OccludedSpaceMap (row-major, rows along z).
std::vector<bool> oracle_occluded_free(const World& world, const CameraPose& pose, const EgoFrame& frame,
                                       const GroundGrid& grid);

/// Ego-frame ground point (x, z) expressed in world (x, z).
Eigen::Vector2d ego_to_world(const CameraPose& pose, const EgoFrame& frame, const Eigen::Vector2d& ego_xz);

}  // namespace egofuture
