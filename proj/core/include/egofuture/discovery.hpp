#pragma once

// Occluded-space likelihood: a Gaussian-kernel average of map heights
// sampled along the predicted trajectories, on a Cartesian ground grid.

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "egofuture/egospace_map.hpp"
#include "egofuture/predictor.hpp"
#include "egofuture/trajectory.hpp"

namespace egofuture {

/// Axis-aligned window on the ego ground plane.
struct GroundExtent {
  double x_min = -10.0;
  double x_max = 10.0;
  double z_min = 0.0;
  double z_max = 20.0;
};

struct DiscoveryConfig {
  GroundExtent extent;
  double resolution = 0.25;
  double sigma = 0.5;
  double threshold = 0.3;

  void validate() const;
};

/// Cell layout shared by the likelihood map and the oracle labels: row
/// index runs along z, column index along x.
struct GroundGrid {
  GroundExtent extent;
  double resolution = 0.25;
  int rows = 0;
  int cols = 0;

  static GroundGrid make(const GroundExtent& extent, double resolution);
  Eigen::Vector2d cell_center(int row, int col) const;
  std::size_t cell_count() const { return static_cast<std::size_t>(rows) * cols; }
};

class OccludedSpaceMap {
 public:
  OccludedSpaceMap() = default;
  OccludedSpaceMap(GroundGrid grid, double sigma, double phi_max, Eigen::MatrixXd psi, std::vector<bool> defined);

  const GroundGrid& grid() const { return grid_; }
  double sigma() const { return sigma_; }
  double phi_max() const { return phi_max_; }
  const Eigen::MatrixXd& psi() const { return psi_; }
  double psi(int row, int col) const { return psi_(row, col); }
  /// False where the kernel weight vanished (psi reads 0 there).
  bool defined(int row, int col) const { return defined_[static_cast<std::size_t>(row) * grid_.cols + col]; }

 private:
  GroundGrid grid_;
  double sigma_ = 0.5;
  double phi_max_ = 2.0;
  Eigen::MatrixXd psi_;
  std::vector<bool> defined_;
};

OccludedSpaceMap discover(std::span<const Coefficients> betas, const TrajectoryBasis& basis,
                          const EgoSpaceMap& test_map, const DiscoveryConfig& config = {});
OccludedSpaceMap discover(std::span<const PredictedTrajectory> predictions, const TrajectoryBasis& basis,
                          const EgoSpaceMap& test_map, const DiscoveryConfig& config = {});

struct Detection {
  std::vector<std::pair<int, int>> cells;  // (row, col), row-major order
  double peak = 0.0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();  // (x, z)
};

/// 4-connected components of cells with psi >= threshold, by peak descending.
std::vector<Detection> extract_detections(const OccludedSpaceMap& map, double threshold);

void write_psi_csv(std::ostream& out, const OccludedSpaceMap& map);
/// Binary 8-bit PGM, 0..phi_max mapped linearly to 0..255, far rows on top.
void write_psi_pgm(std::ostream& out, const OccludedSpaceMap& map);
nlohmann::json detections_to_json(const std::vector<Detection>& detections);

}  // namespace egofuture
