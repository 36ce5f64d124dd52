#include "egofuture/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "egofuture/error.hpp"

namespace egofuture {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

std::optional<Eigen::Vector2d> CameraIntrinsics::project(const Eigen::Vector3d& p_cam) const {
  if (p_cam.z() <= 1e-9) return std::nullopt;
  const double u = fx * p_cam.x() / p_cam.z() + cx;
  const double v = fy * p_cam.y() / p_cam.z() + cy;
  if (u < -0.5 || u >= width - 0.5 || v < -0.5 || v >= height - 0.5) return std::nullopt;
  return Eigen::Vector2d(u, v);
}

DepthImage::DepthImage(CameraIntrinsics intrinsics, std::vector<double> depth)
    : intrinsics_(intrinsics), depth_(std::move(depth)) {
  intrinsics_.validate();
  if (depth_.size() != static_cast<std::size_t>(intrinsics_.width) * intrinsics_.height) {
    throw Error(ErrorCode::kDimensionMismatch, "depth grid does not match intrinsics");
  }
  for (double& z : depth_) {
    if (!std::isfinite(z) || z <= 0.0) z = 0.0;
  }
}

std::size_t DepthImage::valid_count() const {
  return static_cast<std::size_t>(std::count_if(depth_.begin(), depth_.end(), [](double z) { return z > 0.0; }));
}

std::vector<Eigen::Vector3d> backproject(const DepthImage& depth) {
  const auto& k = depth.intrinsics();
  std::vector<Eigen::Vector3d> points;
  points.reserve(depth.valid_count());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const double z = depth.at(u, v);
      if (z <= 0.0) continue;
      points.emplace_back((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
    }
  }
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "depth image has no valid pixels");
  return points;
}

namespace {

GroundPlane oriented(Eigen::Vector3d normal, double offset) {
  if (offset < 0.0) {
    normal = -normal;
    offset = -offset;
  }
  return {normal, offset};
}

std::vector<std::size_t> collect_inliers(std::span<const Eigen::Vector3d> points, const GroundPlane& plane,
                                         double threshold) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::abs(plane.signed_distance(points[i])) < threshold) inliers.push_back(i);
  }
  return inliers;
}

}  // namespace

GroundPlane fit_plane_least_squares(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 3) throw Error(ErrorCode::kEmptyInput, "plane fit needs at least 3 points");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d q = p - centroid;
    scatter += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  const Eigen::Vector3d normal = solver.eigenvectors().col(0).normalized();
  return oriented(normal, -normal.dot(centroid));
}

PlaneFit fit_ground_plane(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& up_prior,
                          double height_prior, const RansacConfig& config) {
  if (points.size() < 3) throw Error(ErrorCode::kEmptyInput, "plane fit needs at least 3 points");
  if (up_prior.norm() < 1e-12) throw Error(ErrorCode::kInvalidArgument, "up prior must be non-zero");
  const Eigen::Vector3d up = up_prior.normalized();
  const double cos_tol = std::cos(config.angle_tol);

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

  std::vector<std::size_t> scoring;
  if (points.size() <= config.max_scoring_points) {
    scoring.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) scoring[i] = i;
  } else {
    scoring.reserve(config.max_scoring_points);
    for (std::size_t i = 0; i < config.max_scoring_points; ++i) scoring.push_back(pick(rng));
  }

  auto admissible = [&](const GroundPlane& plane) {
    return plane.normal.dot(up) >= cos_tol && std::abs(plane.camera_height() - height_prior) <= config.height_tol;
  };

  std::optional<GroundPlane> best;
  std::size_t best_count = 0;
  for (int it = 0; it < config.iterations; ++it) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    const std::size_t c = pick(rng);
    if (a == b || b == c || a == c) continue;
    Eigen::Vector3d n = (points[b] - points[a]).cross(points[c] - points[a]);
    const double len = n.norm();
    if (len < 1e-12) continue;
    n /= len;
    const GroundPlane candidate = oriented(n, -n.dot(points[a]));
    if (candidate.offset <= 0.0 || !admissible(candidate)) continue;
    std::size_t count = 0;
    for (std::size_t i : scoring) {
      if (std::abs(candidate.signed_distance(points[i])) < config.inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = candidate;
    }
  }
  if (!best) throw Error(ErrorCode::kPlaneNotFound, "no plane satisfies the gravity and height priors");

  PlaneFit fit{*best, collect_inliers(points, *best, config.inlier_threshold)};
  for (int round = 0; round < 2 && fit.inliers.size() >= 3; ++round) {
    std::vector<Eigen::Vector3d> subset;
    subset.reserve(fit.inliers.size());
    for (std::size_t i : fit.inliers) subset.push_back(points[i]);
    const GroundPlane refit = fit_plane_least_squares(subset);
    if (!admissible(refit)) break;
    fit.plane = refit;
    fit.inliers = collect_inliers(points, refit, config.inlier_threshold);
  }
  return fit;
}

EgoFrame build_ego_frame(const GroundPlane& plane, const Eigen::Vector3d& optical_axis) {
  const Eigen::Vector3d n = plane.normal.normalized();
  const Eigen::Vector3d a = optical_axis.normalized();
  const Eigen::Vector3d tangential = a - a.dot(n) * n;
  if (std::abs(a.dot(n)) >= std::cos(std::numbers::pi / 180.0) || tangential.norm() < 1e-12) {
    throw Error(ErrorCode::kDegenerateGaze, "gaze is (nearly) parallel to the ground normal");
  }
  const Eigen::Vector3d z_axis = tangential.normalized();
  const Eigen::Vector3d x_axis = n.cross(z_axis).normalized();

  EgoFrame frame;
  frame.rotation.row(0) = x_axis.transpose();
  frame.rotation.row(1) = n.transpose();
  frame.rotation.row(2) = z_axis.transpose();
  frame.eye_height = plane.camera_height();
  frame.translation = Eigen::Vector3d(0.0, frame.eye_height, 0.0);
  frame.gaze = frame.rotation * a;
  frame.gaze.x() = 0.0;
  frame.gaze.normalize();
  return frame;
}

double pitch_angle(const EgoFrame& frame) { return std::acos(std::clamp(frame.gaze.z(), -1.0, 1.0)); }

double signed_pitch(const EgoFrame& frame) {
  const double p = pitch_angle(frame);
  return frame.gaze.y() > 0.0 ? -p : p;
}

}  // namespace egofuture
