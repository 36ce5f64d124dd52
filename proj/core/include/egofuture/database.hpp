#pragma once

// Training database of (EgoSpace map, trajectory coefficients) pairs,
// partitioned into three gaze-pitch bins and searched by exact KNN.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "egofuture/egospace_map.hpp"
#include "egofuture/geometry.hpp"
#include "egofuture/knn_index.hpp"
#include "egofuture/trajectory.hpp"

namespace egofuture {

inline constexpr int kPitchBins = 3;
using PitchEdges = std::array<double, 2>;

/// Half-open bins (-inf, e0), [e0, e1), [e1, inf).
int assign_pitch_bin(double pitch, const PitchEdges& edges);

/// Edges at the 1/3 and 2/3 empirical quantiles.
PitchEdges tercile_edges(std::span<const double> pitches);

struct TrainingEntry {
  std::uint32_t scene_id = 0;
  std::uint32_t frame_id = 0;
  std::uint8_t pitch_bin = 0;
  double pitch = 0.0;
  Eigen::VectorXd feature;    // flattened phi grid
  Coefficients beta;          // K
  Eigen::VectorXd traj_cost;  // F: phi of the entry's own map at its reconstructed points

  std::uint64_t tie_key() const { return (static_cast<std::uint64_t>(scene_id) << 32) | frame_id; }
};

struct KnnResult {
  std::vector<Neighbor> neighbors;  // Neighbor::index is the database entry index
  int pitch_bin = 0;
  bool truncated = false;  // the bin held fewer than k entries
};

class TrainingDatabase {
 public:
  TrainingDatabase() = default;
  TrainingDatabase(GridSpec grid, TrajectoryBasis basis, PitchEdges edges, std::vector<TrainingEntry> entries);

  const GridSpec& grid() const { return grid_; }
  const TrajectoryBasis& basis() const { return basis_; }
  const PitchEdges& pitch_edges() const { return edges_; }
  const std::vector<TrainingEntry>& entries() const { return entries_; }
  const TrainingEntry& entry(std::size_t i) const { return entries_.at(i); }
  std::size_t size() const { return entries_.size(); }
  std::size_t bin_size(int bin) const { return members_.at(bin).size(); }

  KnnResult knn(const Eigen::VectorXd& feature, double pitch, std::size_t k,
                KnnMethod method = KnnMethod::kLinearScan) const;
  KnnResult knn(const EgoSpaceMap& query, double pitch, std::size_t k,
                KnnMethod method = KnnMethod::kLinearScan) const {
    return knn(query.flatten(), pitch, k, method);
  }

 private:
  GridSpec grid_{};
  TrajectoryBasis basis_;
  PitchEdges edges_{};
  std::vector<TrainingEntry> entries_;
  std::array<std::vector<std::size_t>, kPitchBins> members_;
  std::array<FeatureIndex, kPitchBins> index_;
};

/// One recorded stream: depth frames with their camera poses (poses give
/// the gravity direction and the future camera centers).
struct Sequence {
  std::uint32_t scene_id = 0;
  std::vector<DepthImage> depths;
  std::vector<CameraPose> poses;
};

struct SampleOptions {
  RansacConfig ransac;
  double height_prior = 1.6;
  EgoSpaceOptions egospace;
};

/// Everything extracted from a single frame with a full future horizon.
struct FrameSample {
  std::uint32_t scene_id = 0;
  std::uint32_t frame_id = 0;
  double pitch = 0.0;
  double eye_height = 0.0;
  EgoFrame frame;
  EgoSpaceMap map;
  Trajectory future;
  /// Inputs of the depth-only baselines.
  Eigen::VectorXd depth_feature;
  std::vector<Eigen::Vector3d> camera_future;  // future centers in this frame's camera coordinates
};

struct ExtractStats {
  std::size_t frames = 0;
  std::size_t samples = 0;
  std::size_t plane_failures = 0;
};

/// Camera-frame up direction implied by a pose (world +Y).
Eigen::Vector3d camera_up(const CameraPose& pose);

/// Fits the ground plane of frame f, builds its ego frame and EgoSpace map
/// and projects the next `horizon` poses. Frames whose plane fit fails are
/// skipped and counted.
std::vector<FrameSample> extract_samples(const Sequence& sequence, const GridSpec& grid, int horizon, double dt,
                                         const SampleOptions& options = {}, ExtractStats* stats = nullptr);

/// Depth image block-averaged to rows x cols; invalid pixels read max_depth.
Eigen::VectorXd subsample_depth(const DepthImage& depth, int rows, int cols, double max_depth);

struct BuildOptions {
  int k = 6;
  std::optional<PitchEdges> pitch_edges;  // default: terciles of the training pitches
  /// Fit coefficients in this basis instead of learning one; `k` is then ignored.
  std::optional<TrajectoryBasis> basis;
};

struct BuildReport {
  int effective_rank = 0;
  bool rank_deficient = false;
  std::vector<double> explained_variance_ratio;
};

/// Learns the basis from every sample's trajectory, then fits coefficients
/// and precomputes per-entry trajectory costs. Stored values are rounded to
/// float precision so an in-memory database equals its EGDB reload.
TrainingDatabase build_database(std::span<const FrameSample> samples, const GridSpec& grid,
                                const BuildOptions& options, BuildReport* report = nullptr);

TrainingDatabase build_database(std::span<const Sequence> sequences, const GridSpec& grid, int k, int horizon,
                                double dt, const SampleOptions& options = {}, BuildReport* report = nullptr);

// EGDB: little-endian; "EGDB", u32 version; u32 n_theta, u32 n_radius,
// f64 theta_min, theta_max, r_min, r_max, phi_max; u32 F, u32 K, f32 dt;
// f32 mean[2F], f32 basis columns[K][2F]; f32 pitch edges[2]; u32 count;
// per entry u32 scene, u32 frame, u8 bin, f32 pitch, f32 feature[], f32
// beta[K], f32 traj_cost[F].
inline constexpr std::uint32_t kEgdbVersion = 1;

std::vector<std::uint8_t> encode_egdb(const TrainingDatabase& db);
TrainingDatabase decode_egdb(std::vector<std::uint8_t> bytes);
void save_database(const std::filesystem::path& path, const TrainingDatabase& db);
TrainingDatabase load_database(const std::filesystem::path& path);

/// Entries for the depth-only baselines: a subsampled depth image keyed to
/// the future camera centers in that frame's camera coordinates.
struct DepthEntry {
  std::uint32_t scene_id = 0;
  std::uint32_t frame_id = 0;
  Eigen::VectorXd feature;
  std::vector<Eigen::Vector3d> camera_future;
};

class DepthBaselineDatabase {
 public:
  DepthBaselineDatabase() = default;
  explicit DepthBaselineDatabase(std::vector<DepthEntry> entries, double dt);

  const std::vector<DepthEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  double dt() const { return dt_; }
  KnnResult knn(const Eigen::VectorXd& feature, std::size_t k, KnnMethod method = KnnMethod::kLinearScan) const;

 private:
  std::vector<DepthEntry> entries_;
  FeatureIndex index_;
  double dt_ = 0.5;
};

DepthBaselineDatabase build_depth_database(std::span<const FrameSample> samples, double dt);

}  // namespace egofuture
