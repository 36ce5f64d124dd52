#include "egofuture/egospace_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "egofuture/error.hpp"

namespace egofuture {

void GridSpec::validate() const {
  if (n_theta < 2 || n_radius < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs at least 2 bins per axis");
  if (!(theta_min < theta_max)) throw Error(ErrorCode::kInvalidArgument, "theta_min must be below theta_max");
  if (!(r_min > 0.0 && r_min < r_max)) throw Error(ErrorCode::kInvalidArgument, "need 0 < r_min < r_max");
  if (!(phi_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "phi_max must be positive");
}

double GridSpec::theta_at(int i_theta) const {
  return theta_min + (theta_max - theta_min) * i_theta / static_cast<double>(n_theta - 1);
}

double GridSpec::inverse_radius_at(int i_radius) const {
  const double a = 1.0 / r_min;
  const double b = 1.0 / r_max;
  return a + (b - a) * i_radius / static_cast<double>(n_radius - 1);
}

Eigen::Vector2d ground_point(const GridSpec& spec, int i_radius, int i_theta) {
  if (i_radius < 0 || i_radius >= spec.n_radius || i_theta < 0 || i_theta >= spec.n_theta) {
    throw Error(ErrorCode::kIndexOutOfRange, "cell index outside the grid");
  }
  // Pin the endpoints so r_min/r_max come back exactly.
  const double r = i_radius == 0                   ? spec.r_min
                   : i_radius == spec.n_radius - 1 ? spec.r_max
                                                   : spec.radius_at(i_radius);
  const double theta = spec.theta_at(i_theta);
  return {r * std::cos(theta), r * std::sin(theta)};
}

EgoSpaceMap::EgoSpaceMap(GridSpec spec, Eigen::MatrixXd phi, std::vector<CellState> mask)
    : spec_(spec), phi_(std::move(phi)), mask_(std::move(mask)) {
  spec_.validate();
  if (phi_.rows() != spec_.n_radius || phi_.cols() != spec_.n_theta ||
      mask_.size() != static_cast<std::size_t>(spec_.cell_count())) {
    throw Error(ErrorCode::kDimensionMismatch, "map arrays do not match the grid spec");
  }
}

std::size_t EgoSpaceMap::observed_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), CellState::kObserved));
}

Eigen::VectorXd EgoSpaceMap::flatten() const {
  Eigen::VectorXd out(spec_.cell_count());
  for (int r = 0; r < spec_.n_radius; ++r) {
    for (int t = 0; t < spec_.n_theta; ++t) out(r * spec_.n_theta + t) = phi_(r, t);
  }
  return out;
}

namespace {

struct Splat {
  double key = std::numeric_limits<double>::infinity();
  double lambda = std::numeric_limits<double>::infinity();
  double height = 0.0;
  bool set = false;

  bool beats(const Splat& other) const {
    if (!other.set) return true;
    if (key != other.key) return key < other.key;
    if (lambda != other.lambda) return lambda < other.lambda;
    return height > other.height;
  }
};

// Fractional grid coordinates of a ground point; false if it lies off-grid.
bool nearest_cell(const GridSpec& spec, double x, double z, int& i_radius, int& i_theta) {
  const double r = std::hypot(x, z);
  if (r <= 0.0) return false;
  const double theta = std::atan2(z, x);
  const double ft = (theta - spec.theta_min) / (spec.theta_max - spec.theta_min) * (spec.n_theta - 1);
  const double fr = (1.0 / r - 1.0 / spec.r_min) / (1.0 / spec.r_max - 1.0 / spec.r_min) * (spec.n_radius - 1);
  if (ft < -0.5 || ft >= spec.n_theta - 0.5 || fr < -0.5 || fr >= spec.n_radius - 0.5) return false;
  i_theta = static_cast<int>(std::lround(ft));
  i_radius = static_cast<int>(std::lround(fr));
  i_theta = std::clamp(i_theta, 0, spec.n_theta - 1);
  i_radius = std::clamp(i_radius, 0, spec.n_radius - 1);
  return true;
}

}  // namespace

EgoSpaceMap compute_egospace(const DepthImage& depth, const EgoFrame& frame, const GridSpec& spec,
                             const EgoSpaceOptions& options) {
  spec.validate();
  if (depth.data().empty() || depth.valid_count() == 0) {
    throw Error(ErrorCode::kEmptyInput, "depth image has no valid pixels");
  }
  if (!(frame.eye_height > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eye height must be positive");

  const auto& k = depth.intrinsics();
  const int n_cells = spec.cell_count();
  std::vector<CellState> mask(n_cells, CellState::kOutsideFov);
  std::vector<Eigen::Vector2d> center_pixel(n_cells, Eigen::Vector2d::Zero());

  for (int ir = 0; ir < spec.n_radius; ++ir) {
    for (int it = 0; it < spec.n_theta; ++it) {
      const Eigen::Vector2d g = ground_point(spec, ir, it);
      const auto pixel = k.project(frame.to_camera(Eigen::Vector3d(g.x(), 0.0, g.y())));
      if (!pixel) continue;
      const int idx = ir * spec.n_theta + it;
      mask[idx] = CellState::kObserved;
      center_pixel[idx] = *pixel;
    }
  }

  std::vector<Splat> best(n_cells);
  const double h = frame.eye_height;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const double z = depth.at(u, v);
      if (z <= 0.0) continue;
      const Eigen::Vector3d e = frame.to_ego(Eigen::Vector3d((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z));
      const Eigen::Vector3d ray = e - frame.eye();
      if (ray.y() >= -1e-12) continue;  // never meets the ground
      const double s = h / -ray.y();
      int ir = 0;
      int it = 0;
      if (!nearest_cell(spec, s * ray.x(), s * ray.z(), ir, it)) continue;
      const int idx = ir * spec.n_theta + it;
      if (mask[idx] != CellState::kObserved) continue;

      Splat cand;
      cand.set = true;
      cand.lambda = 1.0 / s;
      cand.height = e.y();
      cand.key = options.reduction == SplatReduction::kNearestRay
                     ? (Eigen::Vector2d(u, v) - center_pixel[idx]).squaredNorm()
                     : cand.lambda;
      if (cand.beats(best[idx])) best[idx] = cand;
    }
  }

  Eigen::MatrixXd phi = Eigen::MatrixXd::Constant(spec.n_radius, spec.n_theta, spec.phi_max);
  std::vector<int> splatted;
  for (int idx = 0; idx < n_cells; ++idx) {
    if (!best[idx].set) continue;
    const double height = best[idx].height;
    phi(idx / spec.n_theta, idx % spec.n_theta) = height < options.ground_tol ? 0.0 : std::min(height, spec.phi_max);
    splatted.push_back(idx);
  }

  // In-FOV cells that received no sample copy their nearest splatted cell.
  for (int idx = 0; idx < n_cells; ++idx) {
    if (mask[idx] != CellState::kObserved || best[idx].set) continue;
    const int r0 = idx / spec.n_theta;
    const int t0 = idx % spec.n_theta;
    int nearest = -1;
    int nearest_d2 = std::numeric_limits<int>::max();
    for (int s : splatted) {
      const int dr = s / spec.n_theta - r0;
      const int dt = s % spec.n_theta - t0;
      const int d2 = dr * dr + dt * dt;
      if (d2 < nearest_d2) {
        nearest_d2 = d2;
        nearest = s;
      }
    }
    if (nearest >= 0) phi(r0, t0) = phi(nearest / spec.n_theta, nearest % spec.n_theta);
  }

  return EgoSpaceMap(spec, std::move(phi), std::move(mask));
}

namespace {

enum class Region { kInner, kOuter, kGrid };

Region classify(const GridSpec& spec, double r, double theta) {
  // Round-off slack so that samples at the edge cells' centres stay on the grid.
  constexpr double kSlack = 1e-12;
  if (r < spec.r_min * (1.0 - kSlack)) return Region::kInner;
  if (r > spec.r_max * (1.0 + kSlack) || theta < spec.theta_min - kSlack || theta > spec.theta_max + kSlack) {
    return Region::kOuter;
  }
  return Region::kGrid;
}

}  // namespace

PhiSample sample_phi_with_gradient(const EgoSpaceMap& map, double x, double z) {
  const GridSpec& spec = map.spec();
  const double r = std::hypot(x, z);
  const double theta = std::atan2(z, x);
  switch (classify(spec, r, theta)) {
    case Region::kInner: return {0.0, Eigen::Vector2d::Zero()};
    case Region::kOuter: return {spec.phi_max, Eigen::Vector2d::Zero()};
    case Region::kGrid: break;
  }

  const double dtheta = (spec.theta_max - spec.theta_min) / (spec.n_theta - 1);
  const double dinv = (1.0 / spec.r_max - 1.0 / spec.r_min) / (spec.n_radius - 1);
  const double ft = std::clamp((theta - spec.theta_min) / dtheta, 0.0, spec.n_theta - 1.0);
  const double fr = std::clamp((1.0 / r - 1.0 / spec.r_min) / dinv, 0.0, spec.n_radius - 1.0);
  const int t0 = std::min(static_cast<int>(ft), spec.n_theta - 2);
  const int r0 = std::min(static_cast<int>(fr), spec.n_radius - 2);
  const double wt = ft - t0;
  const double wr = fr - r0;

  const auto& phi = map.phi();
  const double p00 = phi(r0, t0);
  const double p01 = phi(r0, t0 + 1);
  const double p10 = phi(r0 + 1, t0);
  const double p11 = phi(r0 + 1, t0 + 1);

  PhiSample out;
  out.value = (1 - wr) * ((1 - wt) * p00 + wt * p01) + wr * ((1 - wt) * p10 + wt * p11);

  const double d_wt = (1 - wr) * (p01 - p00) + wr * (p11 - p10);
  const double d_wr = (1 - wt) * (p10 - p00) + wt * (p11 - p01);
  // wt = (theta - theta_min)/dtheta, wr = (1/r - 1/r_min)/dinv.
  const double r2 = r * r;
  const double r3 = r2 * r;
  const Eigen::Vector2d dtheta_dxz(-z / r2, x / r2);
  const Eigen::Vector2d dinv_dxz(-x / r3, -z / r3);
  out.gradient = d_wt / dtheta * dtheta_dxz + d_wr / dinv * dinv_dxz;
  return out;
}

double sample_phi(const EgoSpaceMap& map, double x, double z) { return sample_phi_with_gradient(map, x, z).value; }

void write_phi_csv(std::ostream& out, const EgoSpaceMap& map) {
  const auto& spec = map.spec();
  out.precision(9);
  out << "r\\theta";
  for (int t = 0; t < spec.n_theta; ++t) out << ',' << spec.theta_at(t);
  out << '\n';
  for (int r = 0; r < spec.n_radius; ++r) {
    out << spec.radius_at(r);
    for (int t = 0; t < spec.n_theta; ++t) out << ',' << map.phi(r, t);
    out << '\n';
  }
}

void write_mask_csv(std::ostream& out, const EgoSpaceMap& map) {
  const auto& spec = map.spec();
  out.precision(9);
  out << "r\\theta";
  for (int t = 0; t < spec.n_theta; ++t) out << ',' << spec.theta_at(t);
  out << '\n';
  for (int r = 0; r < spec.n_radius; ++r) {
    out << spec.radius_at(r);
    for (int t = 0; t < spec.n_theta; ++t) out << ',' << (map.state(r, t) == CellState::kOutsideFov ? 1 : 0);
    out << '\n';
  }
}

}  // namespace egofuture
