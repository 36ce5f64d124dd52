#include <algorithm>
#include <cmath>
#include <limits>

#include "egofuture/error.hpp"
#include "egofuture/rng.hpp"
#include "egofuture/synthworld.hpp"

namespace egofuture {

namespace {

/// Entry parameter of the ray o + t d into `box` within [t_lo, t_hi].
std::optional<double> ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Box& box, double t_lo,
                              double t_hi) {
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < box.min[a] || o[a] > box.max[a]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[a] - o[a]) / d[a];
    double t1 = (box.max[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
    if (t_lo > t_hi) return std::nullopt;
  }
  return t_lo;
}

}  // namespace

GroundPlane exact_ground_plane(const CameraPose& pose) {
  GroundPlane plane;
  plane.normal = pose.rotation.transpose() * Eigen::Vector3d::UnitY();
  plane.offset = pose.center.y();
  return plane;
}

DepthImage render_depth(const World& world, const CameraPose& pose, const CameraIntrinsics& intrinsics,
                        const RenderOptions& options, std::uint64_t noise_seed) {
  intrinsics.validate();
  if (!(pose.center.y() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "camera must be above the ground");
  const int w = intrinsics.width;
  const int h = intrinsics.height;
  std::vector<double> depth(static_cast<std::size_t>(w) * h, 0.0);
  Rng rng(noise_seed);
  std::normal_distribution<double> noise(0.0, options.noise_sigma > 0.0 ? options.noise_sigma : 1.0);
  const Eigen::Vector3d& o = pose.center;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Eigen::Vector3d ray_cam((u - intrinsics.cx) / intrinsics.fx, (v - intrinsics.cy) / intrinsics.fy, 1.0);
      const Eigen::Vector3d d = pose.rotation * ray_cam;
      double t = std::numeric_limits<double>::infinity();
      if (d.y() < 0.0) t = -o.y() / d.y();
      for (const auto& box : world.boxes) {
        if (const auto hit = ray_box(o, d, box, 0.0, t)) t = std::min(t, *hit);
      }
      if (!(t <= options.max_depth)) continue;
      double z = t;  // the camera-frame ray has unit z, so t is z-depth
      if (options.noise_sigma > 0.0) z += noise(rng);
      depth[static_cast<std::size_t>(v) * w + u] = z;
    }
  }
  return DepthImage(intrinsics, std::move(depth));
}

std::optional<double> first_box_hit(const World& world, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const Eigen::Vector3d d = b - a;
  std::optional<double> best;
  for (const auto& box : world.boxes) {
    const auto hit = ray_box(a, d, box, 0.0, 1.0);
    if (hit && *hit < 1.0 - 1e-9 && (!best || *hit < *best)) best = hit;
  }
  return best;
}

Eigen::Vector2d ego_to_world(const CameraPose& pose, const EgoFrame& frame, const Eigen::Vector2d& ego_xz) {
  const Eigen::Vector3d w = pose.rotation * frame.to_camera({ego_xz.x(), 0.0, ego_xz.y()}) + pose.center;
  return {w.x(), w.z()};
}

EgoSpaceMap oracle_egospace(const World& world, const CameraPose& pose, const EgoFrame& frame,
                            const CameraIntrinsics& intrinsics, const GridSpec& spec) {
  spec.validate();
  Eigen::MatrixXd phi(spec.n_radius, spec.n_theta);
  std::vector<CellState> mask(static_cast<std::size_t>(spec.cell_count()), CellState::kObserved);
  const Eigen::Vector3d eye = pose.rotation * frame.to_camera(frame.eye()) + pose.center;
  for (int ir = 0; ir < spec.n_radius; ++ir) {
    for (int it = 0; it < spec.n_theta; ++it) {
      const Eigen::Vector2d g = ground_point(spec, ir, it);
      const Eigen::Vector3d g_cam = frame.to_camera({g.x(), 0.0, g.y()});
      if (!intrinsics.project(g_cam)) {
        phi(ir, it) = spec.phi_max;
        mask[static_cast<std::size_t>(ir) * spec.n_theta + it] = CellState::kOutsideFov;
        continue;
      }
      const Eigen::Vector3d g_world = pose.rotation * g_cam + pose.center;
      const auto hit = first_box_hit(world, eye, g_world);
      phi(ir, it) = hit ? std::clamp((eye + (g_world - eye) * *hit).y(), 0.0, spec.phi_max) : 0.0;
    }
  }
  return EgoSpaceMap(spec, std::move(phi), std::move(mask));
}

std::vector<bool> oracle_occluded_free(const World& world, const CameraPose& pose, const EgoFrame& frame,
                                       const GroundGrid& grid) {
  std::vector<bool> out(grid.cell_count(), false);
  const Eigen::Vector3d eye = pose.rotation * frame.to_camera(frame.eye()) + pose.center;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const Eigen::Vector2d e = grid.cell_center(r, c);
      const Eigen::Vector3d g_world = pose.rotation * frame.to_camera({e.x(), 0.0, e.y()}) + pose.center;
      const bool occupied = std::any_of(world.boxes.begin(), world.boxes.end(),
                                        [&](const Box& b) { return b.contains_ground(g_world.x(), g_world.z()); });
      if (occupied) continue;
      out[static_cast<std::size_t>(r) * grid.cols + c] = first_box_hit(world, eye, g_world).has_value();
    }
  }
  return out;
}

}  // namespace egofuture
