#include "egofuture/trajectory.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "egofuture/error.hpp"

namespace egofuture {

void Trajectory::validate() const {
  if (points.size() < 2) throw Error(ErrorCode::kInvalidArgument, "trajectory needs at least 2 points");
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kInvalidArgument, "trajectory has non-finite coordinates");
  }
}

Eigen::VectorXd Trajectory::flatten() const {
  Eigen::VectorXd out(2 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out(2 * i) = points[i].x();
    out(2 * i + 1) = points[i].y();
  }
  return out;
}

Trajectory Trajectory::from_flat(const Eigen::VectorXd& flat, double dt) {
  if (flat.size() % 2 != 0) throw Error(ErrorCode::kDimensionMismatch, "flattened trajectory has odd length");
  Trajectory t;
  t.dt = dt;
  t.points.reserve(flat.size() / 2);
  for (Eigen::Index i = 0; i < flat.size() / 2; ++i) t.points.emplace_back(flat(2 * i), flat(2 * i + 1));
  return t;
}

double Trajectory::path_length() const {
  double length = 0.0;
  Eigen::Vector2d prev = Eigen::Vector2d::Zero();
  for (const auto& p : points) {
    length += (p - prev).norm();
    prev = p;
  }
  return length;
}

void TrajectoryBasis::validate() const {
  if (horizon < 2) throw Error(ErrorCode::kInvalidArgument, "basis horizon must be at least 2");
  if (mean.size() != 2 * horizon || basis.rows() != 2 * horizon) {
    throw Error(ErrorCode::kDimensionMismatch, "basis rows do not match 2 * horizon");
  }
}

Trajectory ego_project_future(std::span<const CameraPose> poses, int frame, int horizon, const EgoFrame& ego,
                              double dt) {
  if (frame < 0 || horizon < 1 || static_cast<std::size_t>(frame + horizon) >= poses.size()) {
    throw Error(ErrorCode::kHorizon, "not enough future poses after frame " + std::to_string(frame));
  }
  const CameraPose& now = poses[frame];
  Trajectory out;
  out.dt = dt;
  out.points.reserve(horizon);
  for (int j = frame + 1; j <= frame + horizon; ++j) {
    const Eigen::Vector3d e = ego.to_ego(now.world_to_camera(poses[j].center));
    out.points.emplace_back(e.x(), e.z());
  }
  return out;
}

PcaFit learn_pca_basis(std::span<const Trajectory> trajectories, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be at least 1");
  if (trajectories.empty()) throw Error(ErrorCode::kEmptyInput, "PCA needs at least one trajectory");
  const int horizon = trajectories.front().horizon();
  const double dt = trajectories.front().dt;
  if (2 * horizon < k) throw Error(ErrorCode::kInvalidArgument, "K exceeds trajectory dimension");
  const Eigen::Index dim = 2 * horizon;
  const auto n = static_cast<Eigen::Index>(trajectories.size());

  Eigen::MatrixXd data(dim, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& t = trajectories[c];
    if (t.horizon() != horizon || t.dt != dt) {
      throw Error(ErrorCode::kDimensionMismatch, "trajectories differ in horizon or dt");
    }
    t.validate();
    data.col(c) = t.flatten();
  }
  const Eigen::VectorXd mean = data.rowwise().mean();
  data.colwise() -= mean;
  const Eigen::MatrixXd cov = data * data.transpose() / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  // Eigenvalues at the round-off level of the centering are treated as zero.
  const double scale = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, mean.cwiseAbs().maxCoeff());
  const double floor = scale * scale * static_cast<double>(dim);
  auto clean = [&](double v) { return v > floor ? v : 0.0; };
  double total = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) total += clean(values(i));
  const double largest = clean(values(dim - 1));
  PcaFit fit;
  fit.basis.mean = mean;
  fit.basis.horizon = horizon;
  fit.basis.dt = dt;
  fit.basis.basis.resize(dim, k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = dim - 1 - c;
    Eigen::VectorXd col = vectors.col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    fit.basis.basis.col(c) = col;
    const double value = clean(values(src));
    fit.explained_variance_ratio.push_back(total > 0.0 ? value / total : 0.0);
  }
  const double rank_tol = std::max(largest, 1e-300) * 1e-12;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (largest > 0.0 && clean(values(i)) > rank_tol) ++fit.effective_rank;
  }
  fit.rank_deficient = fit.effective_rank < k;
  return fit;
}

TrajectoryBasis make_dct_basis(int horizon, int k, double dt) {
  if (horizon < 2) throw Error(ErrorCode::kInvalidArgument, "horizon must be at least 2");
  if (k < 2 || k % 2 != 0 || k > 2 * horizon) {
    throw Error(ErrorCode::kInvalidArgument, "DCT basis needs an even K in [2, 2F]");
  }
  TrajectoryBasis out;
  out.horizon = horizon;
  out.dt = dt;
  out.mean = Eigen::VectorXd::Zero(2 * horizon);
  out.basis = Eigen::MatrixXd::Zero(2 * horizon, k);
  for (int freq = 0; freq < k / 2; ++freq) {
    const double scale = freq == 0 ? std::sqrt(1.0 / horizon) : std::sqrt(2.0 / horizon);
    for (int n = 0; n < horizon; ++n) {
      const double value = scale * std::cos(std::numbers::pi * (2 * n + 1) * freq / (2.0 * horizon));
      out.basis(2 * n, 2 * freq) = value;
      out.basis(2 * n + 1, 2 * freq + 1) = value;
    }
  }
  return out;
}

Coefficients fit_coefficients(const Trajectory& trajectory, const TrajectoryBasis& basis) {
  if (trajectory.horizon() != basis.horizon) {
    throw Error(ErrorCode::kDimensionMismatch, "trajectory horizon does not match the basis");
  }
  return basis.basis.transpose() * (trajectory.flatten() - basis.mean);
}

Trajectory reconstruct(const Coefficients& beta, const TrajectoryBasis& basis) {
  if (beta.size() != basis.basis.cols()) throw Error(ErrorCode::kDimensionMismatch, "beta length does not match K");
  return Trajectory::from_flat(basis.basis * beta + basis.mean, basis.dt);
}

Eigen::Vector2d point_at(const Coefficients& beta, const TrajectoryBasis& basis, int i) {
  if (beta.size() != basis.basis.cols()) throw Error(ErrorCode::kDimensionMismatch, "beta length does not match K");
  if (i < 0 || i >= basis.horizon) throw Error(ErrorCode::kIndexOutOfRange, "time index outside the horizon");
  return basis.basis.middleRows(2 * i, 2) * beta + basis.mean.segment(2 * i, 2);
}

double max_point_error(const Trajectory& a, const Trajectory& b) {
  if (a.horizon() != b.horizon()) throw Error(ErrorCode::kDimensionMismatch, "trajectories differ in horizon");
  double worst = 0.0;
  for (int i = 0; i < a.horizon(); ++i) worst = std::max(worst, (a.points[i] - b.points[i]).norm());
  return worst;
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  j = nlohmann::json{{"dt", t.dt}, {"points", nlohmann::json::array()}};
  for (const auto& p : t.points) j["points"].push_back({p.x(), p.y()});
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  t.dt = j.at("dt").get<double>();
  t.points.clear();
  for (const auto& p : j.at("points")) t.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
}

}  // namespace egofuture
