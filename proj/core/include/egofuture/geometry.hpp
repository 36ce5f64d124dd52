#pragma once

// Camera model, depth back-projection, ground-plane fitting and the
// gaze-normalized egocentric frame.
//
// Camera coordinates follow the pinhole convention: +x right, +y down,
// +z along the optical axis. Ego coordinates put the feet at the origin,
// +Y along the ground normal (up), +Z along the ground projection of the
// gaze and +X = Y x Z (to the wearer's left).

#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace egofuture {

struct CameraIntrinsics {
  double fx = 48.0;
  double fy = 48.0;
  double cx = 79.5;
  double cy = 59.5;
  int width = 160;
  int height = 120;

  void validate() const;

  /// Pixel coordinates of a camera-frame point, or nullopt when the point is
  /// behind the camera or projects outside the image rectangle.
  std::optional<Eigen::Vector2d> project(const Eigen::Vector3d& p_cam) const;
};

/// Per-pixel z-depth in meters. Non-finite or non-positive samples are
/// invalid and stored as 0.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(CameraIntrinsics intrinsics, std::vector<double> depth);

  const CameraIntrinsics& intrinsics() const { return intrinsics_; }
  int width() const { return intrinsics_.width; }
  int height() const { return intrinsics_.height; }

  double at(int u, int v) const { return depth_[static_cast<std::size_t>(v) * width() + u]; }
  bool valid(int u, int v) const { return at(u, v) > 0.0; }
  std::span<const double> data() const { return depth_; }
  std::size_t valid_count() const;

 private:
  CameraIntrinsics intrinsics_{};
  std::vector<double> depth_;
};

std::vector<Eigen::Vector3d> backproject(const DepthImage& depth);

/// Plane n.p + d = 0 in camera coordinates, oriented so the camera center
/// sits on the positive side (d > 0).
struct GroundPlane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitY();
  double offset = 0.0;

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }
  double camera_height() const { return offset; }
};

struct RansacConfig {
  int iterations = 500;
  double inlier_threshold = 0.05;
  double angle_tol = 15.0 * std::numbers::pi / 180.0;
  double height_tol = 0.5;
  std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
  /// Hypotheses are scored on a fixed random subset of this many points;
  /// the final inlier set and refit always use every point.
  std::size_t max_scoring_points = 2000;
};

struct PlaneFit {
  GroundPlane plane;
  std::vector<std::size_t> inliers;
};

/// RANSAC plane search restricted to planes whose normal lies within
/// angle_tol of `up_prior` (the expected normal, i.e. opposite to gravity)
/// and whose camera height is within height_tol of `height_prior`.
PlaneFit fit_ground_plane(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& up_prior,
                          double height_prior, const RansacConfig& config = {});

/// Least-squares plane through `points`, oriented toward the camera.
GroundPlane fit_plane_least_squares(std::span<const Eigen::Vector3d> points);

struct EgoFrame {
  double eye_height = 0.0;
  Eigen::Vector3d gaze = Eigen::Vector3d::UnitZ();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // camera -> ego
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();   // camera -> ego

  Eigen::Vector3d to_ego(const Eigen::Vector3d& p_cam) const { return rotation * p_cam + translation; }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_ego) const {
    return rotation.transpose() * (p_ego - translation);
  }
  Eigen::Vector3d eye() const { return {0.0, eye_height, 0.0}; }
};

EgoFrame build_ego_frame(const GroundPlane& plane,
                         const Eigen::Vector3d& optical_axis = Eigen::Vector3d::UnitZ());

/// arccos(v_z) of the ego-frame gaze; 0 for a level gaze.
double pitch_angle(const EgoFrame& frame);

/// Same magnitude as pitch_angle, negative when the gaze points above the horizon.
double signed_pitch(const EgoFrame& frame);

}  // namespace egofuture
