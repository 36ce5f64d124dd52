#pragma once

// Trajectory prediction: retrieve neighbours by EgoSpace map, then refine
// each retrieved coefficient vector against the test map with the
// occlusion-difference hinge cost.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "egofuture/database.hpp"
#include "egofuture/egospace_map.hpp"
#include "egofuture/geometry.hpp"
#include "egofuture/trajectory.hpp"

namespace egofuture {

struct PredictionConfig {
  std::size_t k = 30;
  int max_iters = 100;
  double cost_tol = 1e-4;
  double step_init = 0.5;
  double reg_lambda = 0.0;  // Tikhonov weight pulling beta toward the retrieved beta
  double fd_step = 1e-4;
  double armijo_c = 1e-4;
  int max_halvings = 30;
  KnnMethod knn_method = KnnMethod::kLinearScan;

  // Test-time geometry.
  Eigen::Vector3d up_prior{0.0, -1.0, 0.0};
  double height_prior = 1.6;
  RansacConfig ransac;
  EgoSpaceOptions egospace;

  void validate() const;
};

/// Sum over time steps of the map height under the trajectory.
double ground_cost(const Coefficients& beta, const TrajectoryBasis& basis, const EgoSpaceMap& map);

/// Sum over time steps of max(0, phi(B_i beta) - reference[i]).
double hinge_cost(const Coefficients& beta, const TrajectoryBasis& basis, const EgoSpaceMap& map,
                  const Eigen::VectorXd& reference);
inline double hinge_cost(const Coefficients& beta, const TrajectoryBasis& basis, const EgoSpaceMap& map,
                         const TrainingEntry& entry) {
  return hinge_cost(beta, basis, map, entry.traj_cost);
}

/// Analytic gradient of hinge_cost (valid away from cell and hinge kinks).
Eigen::VectorXd hinge_cost_gradient(const Coefficients& beta, const TrajectoryBasis& basis, const EgoSpaceMap& map,
                                    const Eigen::VectorXd& reference);

enum class RefineStatus {
  kPlateau,          // zero cost or zero gradient at the current iterate
  kConverged,        // last accepted step decreased the cost by less than cost_tol
  kMaxIterations,
  kLineSearchFailed, // no Armijo step found; best iterate returned
};

const char* to_string(RefineStatus status);

struct PredictedTrajectory {
  Coefficients beta;
  Coefficients beta_init;
  std::size_t source_entry = 0;
  std::uint32_t source_scene = 0;
  std::uint32_t source_frame = 0;
  double knn_distance = 0.0;
  std::size_t knn_rank = 0;
  double init_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  RefineStatus status = RefineStatus::kPlateau;
  std::vector<double> cost_history;  // objective after every accepted step, starting with the initial value
};

PredictedTrajectory refine(const Coefficients& beta_init, const TrajectoryBasis& basis, const EgoSpaceMap& test_map,
                           const TrainingEntry& entry, const PredictionConfig& config);

/// Geometry derived from a single test depth image.
struct TestView {
  PlaneFit plane;
  EgoFrame frame;
  EgoSpaceMap map;
  double pitch = 0.0;
};

TestView prepare_test_view(const DepthImage& depth, const GridSpec& grid, const PredictionConfig& config);

struct Prediction {
  TestView view;
  KnnResult knn;
  std::vector<PredictedTrajectory> candidates;  // ascending final_cost, ties by KNN rank
};

Prediction predict(const DepthImage& depth, const TrainingDatabase& db, const PredictionConfig& config);
Prediction predict(const TestView& view, const TrainingDatabase& db, const PredictionConfig& config);

/// Mean over entries of (reconstructed path length / horizon duration).
double mean_speed(const TrainingDatabase& db);

/// Straight walk along the gaze (+Z) at constant speed.
Trajectory straight_trajectory(double speed, int horizon, double dt);
Trajectory baseline_straight(const TrainingDatabase& db);

enum class BaselineMode { kPure2d, kGroundPlane2d, kEgoSpaceNoOpt };

/// Future camera centers re-expressed in the test ego frame and dropped onto
/// its ground plane (Y = 0).
std::vector<Eigen::Vector3d> to_test_ground_plane(const std::vector<Eigen::Vector3d>& camera_future,
                                                  const EgoFrame& test_frame);

/// Future camera centers read in camera-aligned axes: (-x_cam, z_cam).
Trajectory camera_aligned_trajectory(const std::vector<Eigen::Vector3d>& camera_future, double dt);

/// Depth-only baselines (pure2d, groundplane2d), ordered by KNN rank.
std::vector<Trajectory> baseline_predict(BaselineMode mode, const DepthImage& depth, const TestView& view,
                                         const DepthBaselineDatabase& db, const PredictionConfig& config);
/// Same, from an already subsampled depth feature.
std::vector<Trajectory> baseline_predict(BaselineMode mode, const Eigen::VectorXd& depth_feature,
                                         const TestView& view, const DepthBaselineDatabase& db,
                                         const PredictionConfig& config);

/// EgoSpace retrieval without refinement, ordered by KNN rank.
std::vector<Trajectory> baseline_predict(BaselineMode mode, const TestView& view, const TrainingDatabase& db,
                                         const PredictionConfig& config);

}  // namespace egofuture
