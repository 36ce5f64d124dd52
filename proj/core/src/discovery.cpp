#include "egofuture/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "egofuture/error.hpp"

namespace egofuture {

void DiscoveryConfig::validate() const {
  if (!(extent.x_max > extent.x_min) || !(extent.z_max > extent.z_min)) {
    throw Error(ErrorCode::kInvalidArgument, "discovery extent is empty");
  }
  if (!(resolution > 0.0) || !(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "resolution and sigma must be positive");
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "detection threshold must be positive");
}

GroundGrid GroundGrid::make(const GroundExtent& extent, double resolution) {
  GroundGrid g;
  g.extent = extent;
  g.resolution = resolution;
  g.cols = std::max(1, static_cast<int>(std::lround((extent.x_max - extent.x_min) / resolution)));
  g.rows = std::max(1, static_cast<int>(std::lround((extent.z_max - extent.z_min) / resolution)));
  return g;
}

Eigen::Vector2d GroundGrid::cell_center(int row, int col) const {
  return {extent.x_min + (col + 0.5) * resolution, extent.z_min + (row + 0.5) * resolution};
}

OccludedSpaceMap::OccludedSpaceMap(GroundGrid grid, double sigma, double phi_max, Eigen::MatrixXd psi,
                                   std::vector<bool> defined)
    : grid_(grid), sigma_(sigma), phi_max_(phi_max), psi_(std::move(psi)), defined_(std::move(defined)) {
  if (psi_.rows() != grid_.rows || psi_.cols() != grid_.cols || defined_.size() != grid_.cell_count()) {
    throw Error(ErrorCode::kDimensionMismatch, "psi does not match its grid");
  }
}

OccludedSpaceMap discover(std::span<const Coefficients> betas, const TrajectoryBasis& basis,
                          const EgoSpaceMap& test_map, const DiscoveryConfig& config) {
  config.validate();
  if (betas.empty()) throw Error(ErrorCode::kEmptyInput, "discovery needs at least one prediction");
  const GroundGrid grid = GroundGrid::make(config.extent, config.resolution);
  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
  Eigen::MatrixXd den = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
  const double support = 4.0 * config.sigma;
  const double inv_two_s2 = 1.0 / (2.0 * config.sigma * config.sigma);

  for (const auto& beta : betas) {
    for (int i = 0; i < basis.horizon; ++i) {
      const Eigen::Vector2d p = point_at(beta, basis, i);
      const double phi = sample_phi(test_map, p.x(), p.y());
      const int c0 = std::max(0, static_cast<int>(std::floor((p.x() - support - grid.extent.x_min) / grid.resolution)));
      const int c1 = std::min(grid.cols - 1,
                              static_cast<int>(std::floor((p.x() + support - grid.extent.x_min) / grid.resolution)));
      const int r0 = std::max(0, static_cast<int>(std::floor((p.y() - support - grid.extent.z_min) / grid.resolution)));
      const int r1 = std::min(grid.rows - 1,
                              static_cast<int>(std::floor((p.y() + support - grid.extent.z_min) / grid.resolution)));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const double d2 = (grid.cell_center(r, c) - p).squaredNorm();
          if (d2 > support * support) continue;
          const double w = std::exp(-d2 * inv_two_s2);
          num(r, c) += w * phi;
          den(r, c) += w;
        }
      }
    }
  }

  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
  std::vector<bool> defined(grid.cell_count(), false);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (den(r, c) < 1e-12) continue;
      psi(r, c) = std::clamp(num(r, c) / den(r, c), 0.0, test_map.spec().phi_max);
      defined[static_cast<std::size_t>(r) * grid.cols + c] = true;
    }
  }
  return OccludedSpaceMap(grid, config.sigma, test_map.spec().phi_max, std::move(psi), std::move(defined));
}

OccludedSpaceMap discover(std::span<const PredictedTrajectory> predictions, const TrajectoryBasis& basis,
                          const EgoSpaceMap& test_map, const DiscoveryConfig& config) {
  std::vector<Coefficients> betas;
  betas.reserve(predictions.size());
  for (const auto& p : predictions) betas.push_back(p.beta);
  return discover(std::span<const Coefficients>(betas), basis, test_map, config);
}

std::vector<Detection> extract_detections(const OccludedSpaceMap& map, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "detection threshold must be positive");
  const GroundGrid& g = map.grid();
  std::vector<bool> seen(g.cell_count(), false);
  std::vector<Detection> out;
  std::vector<std::pair<int, int>> stack;
  auto idx = [&](int r, int c) { return static_cast<std::size_t>(r) * g.cols + c; };

  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (seen[idx(r, c)] || map.psi(r, c) < threshold) continue;
      Detection d;
      seen[idx(r, c)] = true;
      stack.assign(1, {r, c});
      while (!stack.empty()) {
        const auto [cr, cc] = stack.back();
        stack.pop_back();
        d.cells.emplace_back(cr, cc);
        const std::pair<int, int> next[] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
        for (const auto& [nr, nc] : next) {
          if (nr < 0 || nc < 0 || nr >= g.rows || nc >= g.cols) continue;
          if (seen[idx(nr, nc)] || map.psi(nr, nc) < threshold) continue;
          seen[idx(nr, nc)] = true;
          stack.emplace_back(nr, nc);
        }
      }
      std::sort(d.cells.begin(), d.cells.end());
      for (const auto& [cr, cc] : d.cells) {
        d.peak = std::max(d.peak, map.psi(cr, cc));
        d.centroid += g.cell_center(cr, cc);
      }
      d.centroid /= static_cast<double>(d.cells.size());
      out.push_back(std::move(d));
    }
  }
  // Components were discovered in row-major order of their first cell, so a
  // stable sort keeps the tie order deterministic.
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.peak > b.peak; });
  return out;
}

void write_psi_csv(std::ostream& out, const OccludedSpaceMap& map) {
  const GroundGrid& g = map.grid();
  out << "z\\x";
  for (int c = 0; c < g.cols; ++c) out << ',' << g.cell_center(0, c).x();
  out << '\n';
  for (int r = 0; r < g.rows; ++r) {
    out << g.cell_center(r, 0).y();
    for (int c = 0; c < g.cols; ++c) out << ',' << map.psi(r, c);
    out << '\n';
  }
}

void write_psi_pgm(std::ostream& out, const OccludedSpaceMap& map) {
  const GroundGrid& g = map.grid();
  out << "P5\n" << g.cols << ' ' << g.rows << "\n255\n";
  for (int r = g.rows - 1; r >= 0; --r) {
    for (int c = 0; c < g.cols; ++c) {
      const double v = std::clamp(map.psi(r, c) / map.phi_max(), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

nlohmann::json detections_to_json(const std::vector<Detection>& detections) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : detections) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [r, c] : d.cells) cells.push_back({r, c});
    arr.push_back({{"peak", d.peak}, {"centroid", {d.centroid.x(), d.centroid.y()}}, {"cell_count", d.cells.size()},
                   {"cells", std::move(cells)}});
  }
  return arr;
}

}  // namespace egofuture
