#include "egofuture/database.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "egofuture/error.hpp"

namespace egofuture {

namespace {

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Eigen::VectorXd to_f32(const Eigen::VectorXd& v) { return v.cast<float>().cast<double>(); }

Eigen::MatrixXd to_f32(const Eigen::MatrixXd& m) { return m.cast<float>().cast<double>(); }

}  // namespace

int assign_pitch_bin(double pitch, const PitchEdges& edges) {
  if (pitch < edges[0]) return 0;
  if (pitch < edges[1]) return 1;
  return 2;
}

PitchEdges tercile_edges(std::span<const double> pitches) {
  if (pitches.empty()) throw Error(ErrorCode::kEmptyInput, "no pitches to split");
  std::vector<double> sorted(pitches.begin(), pitches.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return {sorted[n / 3], sorted[(2 * n) / 3]};
}

TrainingDatabase::TrainingDatabase(GridSpec grid, TrajectoryBasis basis, PitchEdges edges,
                                   std::vector<TrainingEntry> entries)
    : grid_(grid), basis_(std::move(basis)), edges_(edges), entries_(std::move(entries)) {
  grid_.validate();
  basis_.validate();
  if (!(edges_[0] <= edges_[1])) throw Error(ErrorCode::kInvalidArgument, "pitch edges must be sorted");
  const Eigen::Index dim = grid_.cell_count();
  for (const auto& e : entries_) {
    if (e.feature.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "entry feature does not match grid");
    if (e.beta.size() != basis_.size()) throw Error(ErrorCode::kDimensionMismatch, "entry beta does not match K");
    if (e.traj_cost.size() != basis_.horizon) {
      throw Error(ErrorCode::kDimensionMismatch, "entry trajectory cost does not match F");
    }
    if (e.pitch_bin != assign_pitch_bin(e.pitch, edges_)) {
      throw Error(ErrorCode::kInvalidArgument, "entry pitch bin disagrees with the stored edges");
    }
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) members_[entries_[i].pitch_bin].push_back(i);
  for (int b = 0; b < kPitchBins; ++b) {
    Eigen::MatrixXd features(dim, static_cast<Eigen::Index>(members_[b].size()));
    std::vector<std::uint64_t> keys;
    keys.reserve(members_[b].size());
    for (std::size_t j = 0; j < members_[b].size(); ++j) {
      const auto& e = entries_[members_[b][j]];
      features.col(static_cast<Eigen::Index>(j)) = e.feature;
      keys.push_back(e.tie_key());
    }
    index_[b] = FeatureIndex(std::move(features), std::move(keys));
  }
}

KnnResult TrainingDatabase::knn(const Eigen::VectorXd& feature, double pitch, std::size_t k,
                                KnnMethod method) const {
  KnnResult out;
  out.pitch_bin = assign_pitch_bin(pitch, edges_);
  const auto& members = members_[out.pitch_bin];
  if (members.empty()) {
    throw Error(ErrorCode::kEmptyBin, "pitch bin " + std::to_string(out.pitch_bin) + " has no entries");
  }
  out.truncated = members.size() < k;
  out.neighbors = index_[out.pitch_bin].query(feature, k, method);
  for (auto& n : out.neighbors) n.index = members[n.index];
  return out;
}

Eigen::Vector3d camera_up(const CameraPose& pose) { return pose.rotation.transpose() * Eigen::Vector3d::UnitY(); }

Eigen::VectorXd subsample_depth(const DepthImage& depth, int rows, int cols, double max_depth) {
  Eigen::VectorXd out(rows * cols);
  const int w = depth.width();
  const int h = depth.height();
  for (int r = 0; r < rows; ++r) {
    const int v0 = r * h / rows;
    const int v1 = std::max(v0 + 1, (r + 1) * h / rows);
    for (int c = 0; c < cols; ++c) {
      const int u0 = c * w / cols;
      const int u1 = std::max(u0 + 1, (c + 1) * w / cols);
      double sum = 0.0;
      int count = 0;
      for (int v = v0; v < v1; ++v) {
        for (int u = u0; u < u1; ++u) {
          const double z = depth.at(u, v);
          sum += z > 0.0 ? std::min(z, max_depth) : max_depth;
          ++count;
        }
      }
      out(r * cols + c) = sum / count;
    }
  }
  return out;
}

std::vector<FrameSample> extract_samples(const Sequence& sequence, const GridSpec& grid, int horizon, double dt,
                                         const SampleOptions& options, ExtractStats* stats) {
  if (sequence.depths.size() != sequence.poses.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "sequence needs one pose per depth frame");
  }
  std::vector<FrameSample> out;
  const int n = static_cast<int>(sequence.depths.size());
  ExtractStats local;
  local.frames = static_cast<std::size_t>(n);
  for (int f = 0; f + horizon < n; ++f) {
    const DepthImage& depth = sequence.depths[f];
    const CameraPose& pose = sequence.poses[f];
    EgoFrame frame;
    try {
      const auto points = backproject(depth);
      const PlaneFit fit = fit_ground_plane(points, camera_up(pose), options.height_prior, options.ransac);
      frame = build_ego_frame(fit.plane);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPlaneNotFound && e.code() != ErrorCode::kEmptyInput &&
          e.code() != ErrorCode::kDegenerateGaze) {
        throw;
      }
      ++local.plane_failures;
      continue;
    }
    FrameSample s;
    s.scene_id = sequence.scene_id;
    s.frame_id = static_cast<std::uint32_t>(f);
    s.pitch = pitch_angle(frame);
    s.eye_height = frame.eye_height;
    s.frame = frame;
    s.map = compute_egospace(depth, frame, grid, options.egospace);
    s.future = ego_project_future(sequence.poses, f, horizon, frame, dt);
    s.depth_feature = subsample_depth(depth, grid.n_radius, grid.n_theta, grid.r_max);
    s.camera_future.reserve(horizon);
    for (int j = f + 1; j <= f + horizon; ++j) s.camera_future.push_back(pose.world_to_camera(sequence.poses[j].center));
    out.push_back(std::move(s));
  }
  local.samples = out.size();
  if (stats) {
    stats->frames += local.frames;
    stats->samples += local.samples;
    stats->plane_failures += local.plane_failures;
  }
  return out;
}

TrainingDatabase build_database(std::span<const FrameSample> samples, const GridSpec& grid,
                                const BuildOptions& options, BuildReport* report) {
  grid.validate();
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no training samples");
  std::vector<Trajectory> trajectories;
  trajectories.reserve(samples.size());
  for (const auto& s : samples) trajectories.push_back(s.future);
  PcaFit pca;
  if (options.basis) {
    options.basis->validate();
    if (options.basis->horizon != trajectories.front().horizon()) {
      throw Error(ErrorCode::kDimensionMismatch, "basis horizon differs from the sample trajectories");
    }
    pca.basis = *options.basis;
    pca.effective_rank = options.basis->size();
  } else {
    pca = learn_pca_basis(trajectories, options.k);
  }

  TrajectoryBasis basis = pca.basis;
  basis.mean = to_f32(basis.mean);
  basis.basis = to_f32(basis.basis);
  basis.dt = to_f32(basis.dt);

  std::vector<TrainingEntry> entries;
  entries.reserve(samples.size());
  std::vector<double> pitches;
  for (const auto& s : samples) {
    if (!(s.map.spec() == grid)) throw Error(ErrorCode::kDimensionMismatch, "sample map uses a different grid");
    TrainingEntry e;
    e.scene_id = s.scene_id;
    e.frame_id = s.frame_id;
    e.pitch = to_f32(s.pitch);
    e.feature = to_f32(s.map.flatten());
    e.beta = to_f32(fit_coefficients(s.future, basis));
    e.traj_cost.resize(basis.horizon);
    for (int i = 0; i < basis.horizon; ++i) {
      const Eigen::Vector2d p = point_at(e.beta, basis, i);
      e.traj_cost(i) = to_f32(sample_phi(s.map, p.x(), p.y()));
    }
    pitches.push_back(e.pitch);
    entries.push_back(std::move(e));
  }

  PitchEdges edges = options.pitch_edges ? *options.pitch_edges : tercile_edges(pitches);
  edges = {to_f32(edges[0]), to_f32(edges[1])};
  for (auto& e : entries) e.pitch_bin = static_cast<std::uint8_t>(assign_pitch_bin(e.pitch, edges));
  std::sort(entries.begin(), entries.end(), [](const TrainingEntry& a, const TrainingEntry& b) {
    return std::tie(a.scene_id, a.frame_id) < std::tie(b.scene_id, b.frame_id);
  });

  if (report) {
    report->effective_rank = pca.effective_rank;
    report->rank_deficient = pca.rank_deficient;
    report->explained_variance_ratio = pca.explained_variance_ratio;
  }
  return TrainingDatabase(grid, std::move(basis), edges, std::move(entries));
}

TrainingDatabase build_database(std::span<const Sequence> sequences, const GridSpec& grid, int k, int horizon,
                                double dt, const SampleOptions& options, BuildReport* report) {
  std::vector<FrameSample> samples;
  for (const auto& seq : sequences) {
    auto part = extract_samples(seq, grid, horizon, dt, options);
    std::move(part.begin(), part.end(), std::back_inserter(samples));
  }
  BuildOptions build;
  build.k = k;
  return build_database(samples, grid, build, report);
}

DepthBaselineDatabase::DepthBaselineDatabase(std::vector<DepthEntry> entries, double dt)
    : entries_(std::move(entries)), dt_(dt) {
  std::sort(entries_.begin(), entries_.end(), [](const DepthEntry& a, const DepthEntry& b) {
    return std::tie(a.scene_id, a.frame_id) < std::tie(b.scene_id, b.frame_id);
  });
  if (entries_.empty()) return;
  const Eigen::Index dim = entries_.front().feature.size();
  Eigen::MatrixXd features(dim, static_cast<Eigen::Index>(entries_.size()));
  std::vector<std::uint64_t> keys;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].feature.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "depth features differ in size");
    features.col(static_cast<Eigen::Index>(i)) = entries_[i].feature;
    keys.push_back((static_cast<std::uint64_t>(entries_[i].scene_id) << 32) | entries_[i].frame_id);
  }
  index_ = FeatureIndex(std::move(features), std::move(keys));
}

KnnResult DepthBaselineDatabase::knn(const Eigen::VectorXd& feature, std::size_t k, KnnMethod method) const {
  if (entries_.empty()) throw Error(ErrorCode::kEmptyBin, "depth baseline database is empty");
  KnnResult out;
  out.truncated = entries_.size() < k;
  out.neighbors = index_.query(feature, k, method);
  return out;
}

DepthBaselineDatabase build_depth_database(std::span<const FrameSample> samples, double dt) {
  std::vector<DepthEntry> entries;
  entries.reserve(samples.size());
  for (const auto& s : samples) entries.push_back({s.scene_id, s.frame_id, s.depth_feature, s.camera_future});
  return DepthBaselineDatabase(std::move(entries), dt);
}

}  // namespace egofuture
