#pragma once

// Ego-frame trajectories and their linear subspace X = B beta + mean.
// A trajectory of horizon F is flattened as [x1 z1 x2 z2 ... xF zF].

#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "egofuture/geometry.hpp"

namespace egofuture {

struct Trajectory {
  std::vector<Eigen::Vector2d> points;  // (x, z) at t = dt, 2 dt, ..., F dt
  double dt = 0.5;

  int horizon() const { return static_cast<int>(points.size()); }
  void validate() const;
  Eigen::VectorXd flatten() const;
  static Trajectory from_flat(const Eigen::VectorXd& flat, double dt);

  /// Polyline length starting from the origin (the wearer's feet at t = 0).
  double path_length() const;
};

using Coefficients = Eigen::VectorXd;

struct TrajectoryBasis {
  Eigen::VectorXd mean;   // 2F
  Eigen::MatrixXd basis;  // 2F x K, orthonormal columns
  int horizon = 0;
  double dt = 0.5;

  int size() const { return static_cast<int>(basis.cols()); }
  void validate() const;
};

/// Camera pose in world coordinates; `rotation` maps camera axes to world axes.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();

  Eigen::Vector3d world_to_camera(const Eigen::Vector3d& p) const { return rotation.transpose() * (p - center); }
};

/// Camera centers f+1..f+horizon expressed in frame f's ego coordinates and
/// dropped onto the ground plane.
Trajectory ego_project_future(std::span<const CameraPose> poses, int frame, int horizon, const EgoFrame& ego,
                              double dt);

struct PcaFit {
  TrajectoryBasis basis;
  std::vector<double> explained_variance_ratio;  // one per retained column
  int effective_rank = 0;
  /// Set when the centered data has rank below K; the returned columns are
  /// still an orthonormal completion so K is kept.
  bool rank_deficient = false;
};

PcaFit learn_pca_basis(std::span<const Trajectory> trajectories, int k);

/// Block DCT-II basis: the k/2 lowest frequencies on the x channel and on
/// the z channel, interleaved [x0 z0 x1 z1 ...], zero mean.
TrajectoryBasis make_dct_basis(int horizon, int k, double dt = 0.5);

Coefficients fit_coefficients(const Trajectory& trajectory, const TrajectoryBasis& basis);
Trajectory reconstruct(const Coefficients& beta, const TrajectoryBasis& basis);

/// Point at 0-based time index i (time (i+1) dt), mean included.
Eigen::Vector2d point_at(const Coefficients& beta, const TrajectoryBasis& basis, int i);

/// Largest per-time-step distance between two trajectories of equal horizon.
double max_point_error(const Trajectory& a, const Trajectory& b);

void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

}  // namespace egofuture
