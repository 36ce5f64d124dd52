#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>

#include "egofuture/error.hpp"
#include "egofuture/rng.hpp"
#include "egofuture/synthworld.hpp"

namespace egofuture {

namespace {

constexpr double kGridMargin = 0.1;
constexpr double kPathMargin = 0.05;
constexpr double kLegBerth = 1.5;
constexpr double kMaxTourTurn = std::numbers::pi / 3.0;

class OccupancyGrid {
 public:
  OccupancyGrid(const World& world, double resolution, double radius)
      : origin_(world.bounds.x_min, world.bounds.z_min), res_(resolution) {
    nx_ = static_cast<int>(std::floor((world.bounds.x_max - world.bounds.x_min) / res_)) + 1;
    nz_ = static_cast<int>(std::floor((world.bounds.z_max - world.bounds.z_min) / res_)) + 1;
    free_.resize(static_cast<std::size_t>(nx_) * nz_);
    for (int iz = 0; iz < nz_; ++iz) {
      for (int ix = 0; ix < nx_; ++ix) free_[index(ix, iz)] = point_clear(world, center(ix, iz), radius);
    }
  }

  int nx() const { return nx_; }
  int nz() const { return nz_; }
  std::size_t index(int ix, int iz) const { return static_cast<std::size_t>(iz) * nx_ + ix; }
  bool free(int ix, int iz) const { return ix >= 0 && iz >= 0 && ix < nx_ && iz < nz_ && free_[index(ix, iz)]; }
  Eigen::Vector2d center(int ix, int iz) const { return origin_ + Eigen::Vector2d(ix * res_, iz * res_); }

  /// Free cell nearest to p (breadth-first over growing rings).
  std::pair<int, int> nearest_free(const Eigen::Vector2d& p) const {
    const int cx = std::clamp(static_cast<int>(std::lround((p.x() - origin_.x()) / res_)), 0, nx_ - 1);
    const int cz = std::clamp(static_cast<int>(std::lround((p.y() - origin_.y()) / res_)), 0, nz_ - 1);
    const int max_ring = std::max(nx_, nz_);
    for (int ring = 0; ring <= max_ring; ++ring) {
      double best = std::numeric_limits<double>::infinity();
      std::pair<int, int> found{-1, -1};
      for (int dz = -ring; dz <= ring; ++dz) {
        for (int dx = -ring; dx <= ring; ++dx) {
          if (std::max(std::abs(dx), std::abs(dz)) != ring || !free(cx + dx, cz + dz)) continue;
          const double d = (center(cx + dx, cz + dz) - p).squaredNorm();
          if (d < best) {
            best = d;
            found = {cx + dx, cz + dz};
          }
        }
      }
      if (found.first >= 0) return found;
    }
    throw Error(ErrorCode::kUnreachable, "occupancy grid has no free cell");
  }

 private:
  Eigen::Vector2d origin_;
  double res_;
  int nx_ = 0;
  int nz_ = 0;
  std::vector<bool> free_;
};

std::vector<Eigen::Vector2d> astar(const OccupancyGrid& grid, std::pair<int, int> start, std::pair<int, int> goal) {
  const std::size_t n = static_cast<std::size_t>(grid.nx()) * grid.nz();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, n);
  std::vector<bool> closed(n, false);
  auto heuristic = [&](int ix, int iz) {
    const double dx = std::abs(ix - goal.first);
    const double dz = std::abs(iz - goal.second);
    return std::max(dx, dz) + (std::numbers::sqrt2 - 1.0) * std::min(dx, dz);
  };
  using Item = std::tuple<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const std::size_t s = grid.index(start.first, start.second);
  const std::size_t t = grid.index(goal.first, goal.second);
  g[s] = 0.0;
  open.emplace(heuristic(start.first, start.second), s);
  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = true;
    if (cur == t) break;
    const int ix = static_cast<int>(cur % grid.nx());
    const int iz = static_cast<int>(cur / grid.nx());
    for (int dz = -1; dz <= 1; ++dz) {
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx == 0 && dz == 0) || !grid.free(ix + dx, iz + dz)) continue;
        if (dx != 0 && dz != 0 && (!grid.free(ix + dx, iz) || !grid.free(ix, iz + dz))) continue;
        const std::size_t nb = grid.index(ix + dx, iz + dz);
        const double cand = g[cur] + ((dx != 0 && dz != 0) ? std::numbers::sqrt2 : 1.0);
        if (cand < g[nb]) {
          g[nb] = cand;
          parent[nb] = cur;
          open.emplace(cand + heuristic(ix + dx, iz + dz), nb);
        }
      }
    }
  }
  if (!closed[t]) throw Error(ErrorCode::kUnreachable, "no path between waypoints");
  std::vector<Eigen::Vector2d> path;
  for (std::size_t c = t; c != n; c = parent[c]) {
    path.push_back(grid.center(static_cast<int>(c % grid.nx()), static_cast<int>(c / grid.nx())));
    if (c == s) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Eigen::Vector2d> shortcut(const World& world, const std::vector<Eigen::Vector2d>& path, double radius) {
  std::vector<Eigen::Vector2d> out{path.front()};
  std::size_t i = 0;
  while (i + 1 < path.size()) {
    std::size_t next = i + 1;
    for (std::size_t j = path.size() - 1; j > i + 1; --j) {
      if (segment_clear(world, path[i], path[j], radius)) {
        next = j;
        break;
      }
    }
    out.push_back(path[next]);
    i = next;
  }
  return out;
}

std::vector<Eigen::Vector2d> cut_corners(const World& world, const std::vector<Eigen::Vector2d>& path, double radius,
                                         int iterations) {
  std::vector<Eigen::Vector2d> cur = path;
  for (int it = 0; it < iterations && cur.size() > 2; ++it) {
    std::vector<Eigen::Vector2d> next{cur.front()};
    for (std::size_t i = 1; i < cur.size(); ++i) {
      const Eigen::Vector2d mid = 0.5 * (cur[i - 1] + cur[i]);
      if (i > 1) {
        const Eigen::Vector2d& a = cur[i - 2];
        const Eigen::Vector2d& b = cur[i - 1];
        const Eigen::Vector2d v = (a + 6.0 * b + cur[i]) / 8.0;
        const Eigen::Vector2d prev_mid = 0.5 * (a + b);
        Eigen::Vector2d chosen = b;
        for (double blend = 1.0; blend > 0.1; blend *= 0.5) {
          const Eigen::Vector2d u = b + blend * (v - b);
          if (segment_clear(world, prev_mid, u, radius) && segment_clear(world, u, mid, radius)) {
            chosen = u;
            break;
          }
        }
        next.push_back(chosen);
      }
      next.push_back(mid);
    }
    next.push_back(cur.back());
    cur = std::move(next);
  }
  return cur;
}

Eigen::Vector2d point_at_arclength(const std::vector<Eigen::Vector2d>& poly, const std::vector<double>& cum, double s) {
  s = std::clamp(s, 0.0, cum.back());
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), poly.size() - 1);
  if (i == 0) return poly.front();
  const double seg = cum[i] - cum[i - 1];
  if (seg <= 0.0) return poly[i];
  return poly[i - 1] + (poly[i] - poly[i - 1]) * ((s - cum[i - 1]) / seg);
}

}  // namespace

CameraPose make_camera_pose(const Eigen::Vector2d& position, double yaw, double pitch, double eye_height) {
  const double s = std::sin(yaw);
  const double c = std::cos(yaw);
  const double sp = std::sin(pitch);
  const double cp = std::cos(pitch);
  CameraPose pose;
  pose.rotation.col(0) = Eigen::Vector3d(-c, 0.0, s);
  pose.rotation.col(1) = Eigen::Vector3d(-sp * s, -cp, -sp * c);
  pose.rotation.col(2) = Eigen::Vector3d(s * cp, -sp, c * cp);
  pose.center = Eigen::Vector3d(position.x(), eye_height, position.y());
  return pose;
}

CameraPose AgentPose::camera_pose() const { return make_camera_pose(position, yaw, pitch, eye_height); }

AgentPath simulate_agent(const World& world, const std::vector<Eigen::Vector2d>& waypoints,
                         const AgentParams& params, std::uint64_t seed) {
  if (waypoints.size() < 2) throw Error(ErrorCode::kInvalidArgument, "agent needs at least two waypoints");
  if (!(params.radius > 0.0) || !(params.grid_resolution > 0.0) || !(params.dt > 0.0) ||
      !(params.speed_min > 0.0) || params.speed_max < params.speed_min || params.pitch_bands.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid agent parameters");
  }
  for (const auto& w : waypoints) {
    if (!point_clear(world, w, params.radius)) throw Error(ErrorCode::kUnreachable, "waypoint is not in free space");
  }
  const double path_radius = params.radius + kPathMargin;
  const OccupancyGrid grid(world, params.grid_resolution, params.radius + kGridMargin);

  std::vector<Eigen::Vector2d> route{waypoints.front()};
  for (std::size_t leg = 0; leg + 1 < waypoints.size(); ++leg) {
    std::vector<Eigen::Vector2d> raw{waypoints[leg]};
    const auto cells = astar(grid, grid.nearest_free(waypoints[leg]), grid.nearest_free(waypoints[leg + 1]));
    raw.insert(raw.end(), cells.begin(), cells.end());
    raw.push_back(waypoints[leg + 1]);
    const auto direct = shortcut(world, raw, path_radius);
    route.insert(route.end(), direct.begin() + 1, direct.end());
  }
  std::vector<Eigen::Vector2d> poly;
  for (const auto& p : cut_corners(world, route, path_radius, params.smoothing_iterations)) {
    if (poly.empty() || (p - poly.back()).norm() > 1e-9) poly.push_back(p);
  }
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    if (!segment_clear(world, poly[i], poly[i + 1], params.radius)) {
      throw Error(ErrorCode::kUnreachable, "smoothed path violates clearance");
    }
  }

  Rng rng(seed);
  AgentPath out;
  out.waypoints = waypoints;
  out.polyline = poly;
  out.dt = params.dt;
  out.speed = std::uniform_real_distribution<double>(params.speed_min, params.speed_max)(rng);
  const std::size_t band = std::uniform_int_distribution<std::size_t>(0, params.pitch_bands.size() - 1)(rng);
  const double base_pitch =
      params.pitch_bands[band] +
      std::uniform_real_distribution<double>(-params.pitch_band_halfwidth, params.pitch_band_halfwidth)(rng);
  const double eye = std::uniform_real_distribution<double>(params.eye_height_min, params.eye_height_max)(rng);
  std::normal_distribution<double> jitter(0.0, params.pitch_jitter);

  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < poly.size(); ++i) cum.push_back(cum.back() + (poly[i] - poly[i - 1]).norm());
  const double step = out.speed * params.dt;
  const auto count = static_cast<std::size_t>(std::floor(cum.back() / step)) + 1;
  constexpr double kHeadingWindow = 0.5;
  constexpr double kDegree = std::numbers::pi / 180.0;
  const double look = params.gaze_lookahead * out.speed;
  const double wander_sd = std::max(params.gaze_wander_sigma, 0.0);
  const double decay = params.gaze_wander_tau > 0.0 ? std::exp(-params.dt / params.gaze_wander_tau) : 0.0;
  std::normal_distribution<double> unit(0.0, 1.0);
  double wander = wander_sd * unit(rng);
  out.poses.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double s = static_cast<double>(k) * step;
    AgentPose pose;
    pose.position = point_at_arclength(poly, cum, s);
    const Eigen::Vector2d ahead = point_at_arclength(poly, cum, s + std::max(look, kHeadingWindow));
    const Eigen::Vector2d dir = (ahead - pose.position).norm() > 1e-6
                                    ? Eigen::Vector2d(ahead - pose.position)
                                    : Eigen::Vector2d(pose.position - point_at_arclength(poly, cum, s - kHeadingWindow));
    wander = wander * decay + wander_sd * std::sqrt(1.0 - decay * decay) * unit(rng);
    pose.yaw = std::atan2(dir.x(), dir.y()) + wander * kDegree;
    pose.pitch = (base_pitch + (params.pitch_jitter > 0.0 ? jitter(rng) : 0.0)) * kDegree;
    pose.eye_height = eye;
    out.poses.push_back(pose);
  }
  return out;
}

std::vector<Eigen::Vector2d> sample_waypoints(const World& world, double min_length, const AgentParams& params,
                                              std::uint64_t seed) {
  Rng rng(seed);
  const double margin = params.radius + 0.4;
  auto in_rect = [&](const Rect& r) -> Eigen::Vector2d {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double x0 = r.x_min + margin;
      const double x1 = r.x_max - margin;
      const double z0 = r.z_min + margin;
      const double z1 = r.z_max - margin;
      const Eigen::Vector2d p(x0 < x1 ? std::uniform_real_distribution<double>(x0, x1)(rng) : r.center().x(),
                              z0 < z1 ? std::uniform_real_distribution<double>(z0, z1)(rng) : r.center().y());
      if (point_clear(world, p, margin)) return p;
    }
    throw Error(ErrorCode::kGeneration, "no free waypoint in region");
  };
  auto region = [&](std::string_view name) -> const Rect& {
    const Region* r = world.find_region(name);
    if (!r) throw Error(ErrorCode::kGeneration, "world lacks region '" + std::string(name) + "'");
    return r->rect;
  };
  auto far_end = [](const Rect& r, bool high_z, double depth) {
    Rect out = r;
    if (high_z) out.z_min = std::max(r.z_min, r.z_max - depth);
    else out.z_max = std::min(r.z_max, r.z_min + depth);
    return out;
  };

  std::vector<Eigen::Vector2d> out;
  double length = 0.0;
  auto push = [&](const Eigen::Vector2d& p) {
    if (!out.empty()) length += (p - out.back()).norm();
    out.push_back(p);
  };
  const bool natural = min_length <= 0.0;
  double heading = 0.0;
  std::vector<Eigen::Vector2d> arc;
  int leg = 0;
  while (out.size() < 2 || length < min_length) {
    switch (world.kind) {
      case WorldTemplate::kSingleBox:
      case WorldTemplate::kCorridor:
        if (out.empty()) push(in_rect(region("start")));
        push(in_rect(region(leg % 2 == 0 ? "goal" : "start")));
        break;
      case WorldTemplate::kYJunction: {
        const Rect& stem = region("stem");
        if (out.empty()) push(in_rect(far_end(stem, false, 2.5)));
        if (leg % 2 == 0) {
          const bool pos = std::bernoulli_distribution(0.5)(rng);
          push(in_rect(far_end(region(pos ? "branch_pos_x" : "branch_neg_x"), true, 2.5)));
        } else {
          push(in_rect(far_end(stem, false, 2.5)));
        }
        break;
      }
      case WorldTemplate::kCornerTurn: {
        if (out.empty()) {
          // Sweep a wide arc that hugs the outer walls at both ends and clears the inner corner.
          const Rect& leg1 = region("leg1");
          const Rect& leg2 = region("leg2");
          const Rect& corner = region("corner");
          const double sx = leg2.center().x() > leg1.center().x() ? 1.0 : -1.0;
          const double outer = sx > 0.0 ? leg1.x_min : leg1.x_max;
          const double width = corner.x_max - corner.x_min;
          const double top = corner.z_max;
          const double m = std::uniform_real_distribution<double>(0.8, 1.5)(rng);
          const double clear = params.radius + 1.0;
          const double r_max = (std::numbers::sqrt2 * (width - m) - clear) / (std::numbers::sqrt2 - 1.0);
          const double r = std::uniform_real_distribution<double>(0.6, 0.9)(rng) * r_max;
          auto world_pt = [&](double u, double z) { return Eigen::Vector2d(outer + sx * u, z); };
          const double far = sx > 0.0 ? leg2.x_max - outer : outer - leg2.x_min;
          arc.push_back(world_pt(m, std::uniform_real_distribution<double>(1.0, 3.0)(rng)));
          constexpr int kArcSteps = 6;
          for (int i = 0; i <= kArcSteps; ++i) {
            const double th = std::numbers::pi * (1.0 - 0.5 * i / kArcSteps);
            arc.push_back(world_pt(m + r + r * std::cos(th), top - m - r + r * std::sin(th)));
          }
          arc.push_back(world_pt(far - std::uniform_real_distribution<double>(1.0, 3.0)(rng), top - m));
          for (const auto& p : arc) {
            if (!point_clear(world, p, params.radius + 0.4)) throw Error(ErrorCode::kGeneration, "corner arc is blocked");
          }
          for (const auto& p : arc) push(p);
        } else {
          if (leg % 2 == 0) {
            for (auto it = arc.begin() + 1; it != arc.end(); ++it) push(*it);
          } else {
            for (auto it = arc.rbegin() + 1; it != arc.rend(); ++it) push(*it);
          }
        }
        break;
      }
      case WorldTemplate::kOpen:
      case WorldTemplate::kRandom: {
        Rect inner = world.bounds;
        inner.x_min += 1.0;
        inner.x_max -= 1.0;
        inner.z_min += 1.0;
        inner.z_max -= 1.0;
        const Eigen::Vector2d center = inner.center();
        const double half = 0.5 * std::min(inner.x_max - inner.x_min, inner.z_max - inner.z_min);
        if (out.empty()) {
          const double r = 0.25 * half;
          push(in_rect(Rect{center.x() - r, center.x() + r, center.y() - r, center.y() + r}));
          heading = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
        }
        std::uniform_real_distribution<double> step(15.0, 25.0);
        std::uniform_real_distribution<double> turn(-kMaxTourTurn, kMaxTourTurn);
        Eigen::Vector2d p = out.back();
        bool found = false;
        for (int attempt = 0; attempt < 400 && !found; ++attempt) {
          const Eigen::Vector2d to_center = center - out.back();
          const double home = std::remainder(std::atan2(to_center.x(), to_center.y()) - heading, 2.0 * std::numbers::pi);
          const double pull = std::clamp(to_center.norm() / half, 0.0, 1.0);
          const double h = heading + std::clamp(pull * home + (1.0 - 0.5 * pull) * turn(rng), -kMaxTourTurn, kMaxTourTurn);
          const double d = step(rng) * (attempt < 200 ? 1.0 : 0.6);
          p = out.back() + d * Eigen::Vector2d(std::sin(h), std::cos(h));
          const bool open_leg = attempt >= 300 || segment_clear(world, out.back(), p, params.radius + kLegBerth);
          if (inner.contains(p.x(), p.y()) && point_clear(world, p, margin) && open_leg) {
            heading = h;
            found = true;
          }
        }
        if (!found) throw Error(ErrorCode::kGeneration, "waypoint tour is boxed in");
        push(p);
        if (natural && out.size() < 5) continue;
        break;
      }
    }
    ++leg;
    if (natural && out.size() >= 2 && world.kind != WorldTemplate::kOpen && world.kind != WorldTemplate::kRandom) break;
    if (natural && out.size() >= 5) break;
    if (leg > 10000) throw Error(ErrorCode::kGeneration, "waypoint tour does not grow");
  }
  return out;
}

}  // namespace egofuture
