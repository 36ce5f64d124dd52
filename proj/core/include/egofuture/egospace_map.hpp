#pragma once

// The EgoSpace map: a log-polar grid on the ground plane storing, per cell,
// the height of the first scene surface met by the ray from the eye to the
// cell's ground point. Angles are uniform in theta, radii uniform in 1/r.
// theta is measured from ego +X, so theta = pi/2 looks straight ahead.

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "egofuture/geometry.hpp"

namespace egofuture {

struct GridSpec {
  int n_theta = 24;
  int n_radius = 16;
  double theta_min = std::numbers::pi / 6.0;
  double theta_max = 5.0 * std::numbers::pi / 6.0;
  double r_min = 0.5;
  double r_max = 20.0;
  double phi_max = 2.0;

  void validate() const;
  int cell_count() const { return n_theta * n_radius; }
  double theta_at(int i_theta) const;
  double inverse_radius_at(int i_radius) const;
  double radius_at(int i_radius) const { return 1.0 / inverse_radius_at(i_radius); }

  bool operator==(const GridSpec&) const = default;
};

/// Cartesian (x, z) ground location of cell (i_radius, i_theta).
Eigen::Vector2d ground_point(const GridSpec& spec, int i_radius, int i_theta);

enum class CellState : std::uint8_t { kObserved = 0, kOutsideFov = 1 };

class EgoSpaceMap {
 public:
  EgoSpaceMap() = default;
  /// `phi` is n_radius x n_theta; `mask` is row-major in the same layout.
  EgoSpaceMap(GridSpec spec, Eigen::MatrixXd phi, std::vector<CellState> mask);

  const GridSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& phi() const { return phi_; }
  double phi(int i_radius, int i_theta) const { return phi_(i_radius, i_theta); }
  CellState state(int i_radius, int i_theta) const {
    return mask_[static_cast<std::size_t>(i_radius) * spec_.n_theta + i_theta];
  }
  const std::vector<CellState>& mask() const { return mask_; }
  std::size_t observed_count() const;

  /// Row-major (radius-major) copy of phi, the KNN feature vector.
  Eigen::VectorXd flatten() const;

 private:
  GridSpec spec_{};
  Eigen::MatrixXd phi_;
  std::vector<CellState> mask_;
};

/// How competing splats inside one cell are resolved.
enum class SplatReduction {
  /// The sample whose pixel lies closest to the projection of the cell
  /// center wins; min lambda then larger height break ties.
  kNearestRay,
  /// The sample with the smallest lambda (nearest occluder anywhere in the
  /// cell footprint) wins; larger height breaks ties.
  kMinLambda,
};

struct EgoSpaceOptions {
  double ground_tol = 0.1;
  SplatReduction reduction = SplatReduction::kNearestRay;
};

EgoSpaceMap compute_egospace(const DepthImage& depth, const EgoFrame& frame, const GridSpec& spec,
                             const EgoSpaceOptions& options = {});

/// Bilinear lookup of the map at Cartesian ground point (x, z). Points
/// closer than r_min read 0; points beyond r_max or outside the angular
/// range read phi_max.
double sample_phi(const EgoSpaceMap& map, double x, double z);

struct PhiSample {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();  // d/dx, d/dz
};

/// sample_phi plus its analytic gradient (zero in the constant regions).
PhiSample sample_phi_with_gradient(const EgoSpaceMap& map, double x, double z);

void write_phi_csv(std::ostream& out, const EgoSpaceMap& map);
void write_mask_csv(std::ostream& out, const EgoSpaceMap& map);

}  // namespace egofuture
