#include "egofuture/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "egofuture/error.hpp"

namespace egofuture {

void PredictionConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (max_iters < 0) throw Error(ErrorCode::kInvalidArgument, "max_iters must be non-negative");
  if (!(cost_tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cost_tol must be positive");
  if (!(step_init > 0.0) || !(fd_step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "steps must be positive");
  if (reg_lambda < 0.0) throw Error(ErrorCode::kInvalidArgument, "reg_lambda must be non-negative");
}

const char* to_string(RefineStatus status) {
  switch (status) {
    case RefineStatus::kPlateau: return "plateau";
    case RefineStatus::kConverged: return "converged";
    case RefineStatus::kMaxIterations: return "max_iterations";
    case RefineStatus::kLineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

double ground_cost(const Coefficients& beta, const TrajectoryBasis& basis, const EgoSpaceMap& map) {
  double total = 0.0;
  for (int i = 0; i < basis.horizon; ++i) {
    const Eigen::Vector2d p = point_at(beta, basis, i);
    total += sample_phi(map, p.x(), p.y());
  }
  return total;
}

double hinge_cost(const Coefficients& beta, const TrajectoryBasis& basis, const EgoSpaceMap& map,
                  const Eigen::VectorXd& reference) {
  if (reference.size() != basis.horizon) throw Error(ErrorCode::kDimensionMismatch, "reference cost length != F");
  double total = 0.0;
  for (int i = 0; i < basis.horizon; ++i) {
    const Eigen::Vector2d p = point_at(beta, basis, i);
    total += std::max(0.0, sample_phi(map, p.x(), p.y()) - reference(i));
  }
  return total;
}

Eigen::VectorXd hinge_cost_gradient(const Coefficients& beta, const TrajectoryBasis& basis, const EgoSpaceMap& map,
                                    const Eigen::VectorXd& reference) {
  if (reference.size() != basis.horizon) throw Error(ErrorCode::kDimensionMismatch, "reference cost length != F");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(beta.size());
  for (int i = 0; i < basis.horizon; ++i) {
    const Eigen::Vector2d p = point_at(beta, basis, i);
    const PhiSample s = sample_phi_with_gradient(map, p.x(), p.y());
    if (s.value - reference(i) <= 0.0) continue;
    grad += basis.basis.middleRows(2 * i, 2).transpose() * s.gradient;
  }
  return grad;
}

PredictedTrajectory refine(const Coefficients& beta_init, const TrajectoryBasis& basis, const EgoSpaceMap& test_map,
                           const TrainingEntry& entry, const PredictionConfig& config) {
  config.validate();
  const Eigen::VectorXd& reference = entry.traj_cost;
  auto objective = [&](const Coefficients& beta) {
    double value = hinge_cost(beta, basis, test_map, reference);
    if (config.reg_lambda > 0.0) value += config.reg_lambda * (beta - beta_init).squaredNorm();
    return value;
  };

  PredictedTrajectory out;
  out.beta_init = beta_init;
  out.beta = beta_init;
  out.init_cost = hinge_cost(beta_init, basis, test_map, reference);
  double current = out.init_cost;
  out.cost_history.push_back(current);

  if (current <= 0.0) {
    out.status = RefineStatus::kPlateau;
    out.final_cost = out.init_cost;
    return out;
  }

  out.status = RefineStatus::kMaxIterations;
  Coefficients beta = beta_init;
  Eigen::VectorXd grad(beta.size());
  for (int it = 0; it < config.max_iters; ++it) {
    for (Eigen::Index c = 0; c < beta.size(); ++c) {
      Coefficients up = beta;
      Coefficients down = beta;
      up(c) += config.fd_step;
      down(c) -= config.fd_step;
      grad(c) = (objective(up) - objective(down)) / (2.0 * config.fd_step);
    }
    const double g2 = grad.squaredNorm();
    if (g2 == 0.0) {
      out.status = RefineStatus::kPlateau;
      break;
    }

    // step_init is a length in coefficient space along the unit descent direction.
    const double gnorm = std::sqrt(g2);
    const Coefficients direction = grad / gnorm;
    double step = config.step_init;
    bool accepted = false;
    Coefficients candidate;
    double candidate_cost = current;
    for (int h = 0; h <= config.max_halvings; ++h, step *= 0.5) {
      candidate = beta - step * direction;
      candidate_cost = objective(candidate);
      if (candidate_cost <= current - config.armijo_c * step * gnorm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.status = RefineStatus::kLineSearchFailed;
      break;
    }

    const double decrease = current - candidate_cost;
    beta = candidate;
    current = candidate_cost;
    out.cost_history.push_back(current);
    out.iterations = it + 1;
    if (current <= 0.0) {
      out.status = RefineStatus::kPlateau;
      break;
    }
    if (decrease < config.cost_tol) {
      out.status = RefineStatus::kConverged;
      break;
    }
  }
  out.beta = beta;
  out.final_cost = hinge_cost(beta, basis, test_map, reference);
  return out;
}

TestView prepare_test_view(const DepthImage& depth, const GridSpec& grid, const PredictionConfig& config) {
  TestView view;
  const auto points = backproject(depth);
  view.plane = fit_ground_plane(points, config.up_prior, config.height_prior, config.ransac);
  view.frame = build_ego_frame(view.plane.plane);
  view.map = compute_egospace(depth, view.frame, grid, config.egospace);
  view.pitch = pitch_angle(view.frame);
  return view;
}

Prediction predict(const TestView& view, const TrainingDatabase& db, const PredictionConfig& config) {
  config.validate();
  if (db.size() == 0) throw Error(ErrorCode::kEmptyBin, "training database is empty");
  Prediction out;
  out.view = view;
  out.knn = db.knn(view.map, view.pitch, config.k, config.knn_method);
  out.candidates.reserve(out.knn.neighbors.size());
  for (std::size_t rank = 0; rank < out.knn.neighbors.size(); ++rank) {
    const Neighbor& n = out.knn.neighbors[rank];
    const TrainingEntry& entry = db.entry(n.index);
    PredictedTrajectory p = refine(entry.beta, db.basis(), view.map, entry, config);
    p.source_entry = n.index;
    p.source_scene = entry.scene_id;
    p.source_frame = entry.frame_id;
    p.knn_distance = n.distance;
    p.knn_rank = rank;
    out.candidates.push_back(std::move(p));
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const PredictedTrajectory& a, const PredictedTrajectory& b) {
                     return std::tie(a.final_cost, a.knn_rank) < std::tie(b.final_cost, b.knn_rank);
                   });
  return out;
}

Prediction predict(const DepthImage& depth, const TrainingDatabase& db, const PredictionConfig& config) {
  return predict(prepare_test_view(depth, db.grid(), config), db, config);
}

double mean_speed(const TrainingDatabase& db) {
  if (db.size() == 0) throw Error(ErrorCode::kEmptyInput, "training database is empty");
  const auto& basis = db.basis();
  const double duration = basis.horizon * basis.dt;
  double sum = 0.0;
  for (const auto& e : db.entries()) sum += reconstruct(e.beta, basis).path_length() / duration;
  return sum / static_cast<double>(db.size());
}

Trajectory straight_trajectory(double speed, int horizon, double dt) {
  Trajectory t;
  t.dt = dt;
  for (int i = 1; i <= horizon; ++i) t.points.emplace_back(0.0, speed * dt * i);
  return t;
}

Trajectory baseline_straight(const TrainingDatabase& db) {
  return straight_trajectory(mean_speed(db), db.basis().horizon, db.basis().dt);
}

std::vector<Eigen::Vector3d> to_test_ground_plane(const std::vector<Eigen::Vector3d>& camera_future,
                                                  const EgoFrame& test_frame) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(camera_future.size());
  for (const auto& p : camera_future) {
    Eigen::Vector3d e = test_frame.to_ego(p);
    e.y() = 0.0;
    out.push_back(e);
  }
  return out;
}

Trajectory camera_aligned_trajectory(const std::vector<Eigen::Vector3d>& camera_future, double dt) {
  Trajectory t;
  t.dt = dt;
  for (const auto& p : camera_future) t.points.emplace_back(-p.x(), p.z());
  return t;
}

std::vector<Trajectory> baseline_predict(BaselineMode mode, const DepthImage& depth, const TestView& view,
                                         const DepthBaselineDatabase& db, const PredictionConfig& config) {
  const auto& grid = view.map.spec();
  return baseline_predict(mode, subsample_depth(depth, grid.n_radius, grid.n_theta, grid.r_max), view, db, config);
}

std::vector<Trajectory> baseline_predict(BaselineMode mode, const Eigen::VectorXd& depth_feature,
                                         const TestView& view, const DepthBaselineDatabase& db,
                                         const PredictionConfig& config) {
  if (mode == BaselineMode::kEgoSpaceNoOpt) {
    throw Error(ErrorCode::kInvalidArgument, "egospace_noopt needs the EgoSpace database");
  }
  const KnnResult knn = db.knn(depth_feature, config.k, config.knn_method);
  std::vector<Trajectory> out;
  out.reserve(knn.neighbors.size());
  for (const auto& n : knn.neighbors) {
    const auto& future = db.entries()[n.index].camera_future;
    if (mode == BaselineMode::kPure2d) {
      out.push_back(camera_aligned_trajectory(future, db.dt()));
    } else {
      Trajectory t;
      t.dt = db.dt();
      for (const auto& p : to_test_ground_plane(future, view.frame)) t.points.emplace_back(p.x(), p.z());
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<Trajectory> baseline_predict(BaselineMode mode, const TestView& view, const TrainingDatabase& db,
                                         const PredictionConfig& config) {
  if (mode != BaselineMode::kEgoSpaceNoOpt) {
    throw Error(ErrorCode::kInvalidArgument, "depth-only baselines need the depth baseline database");
  }
  const KnnResult knn = db.knn(view.map, view.pitch, config.k, config.knn_method);
  std::vector<Trajectory> out;
  out.reserve(knn.neighbors.size());
  for (const auto& n : knn.neighbors) out.push_back(reconstruct(db.entry(n.index).beta, db.basis()));
  return out;
}

}  // namespace egofuture
