#pragma once

// Evaluation protocols: spatiotemporal precision over time windows,
// occluded-space detection rate, basis reconstruction curves and
// gaze/destination statistics.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "egofuture/database.hpp"
#include "egofuture/dataset.hpp"
#include "egofuture/discovery.hpp"
#include "egofuture/predictor.hpp"
#include "egofuture/synthworld.hpp"
#include "egofuture/trajectory.hpp"

namespace egofuture {

/// Half-open time window (begin, end] in seconds.
struct TimeWindow {
  double begin = 0.0;
  double end = 5.0;

  std::string label() const;
};

struct PrecisionConfig {
  double epsilon = 1.5;
  std::vector<TimeWindow> windows{{0.0, 5.0}, {5.0, 10.0}, {10.0, 15.0}};
  std::vector<std::size_t> k_values{30, 60, 100};

  void validate() const;
  std::size_t max_k() const;
};

/// 0-based trajectory indices i whose time (i + 1) dt falls in the window.
std::vector<int> window_indices(const TimeWindow& window, double dt, int horizon);

/// True iff some prediction stays strictly within epsilon of the ground
/// truth at every time step of the window.
bool trajectory_hit(std::span<const Trajectory> predictions, const Trajectory& ground_truth, const TimeWindow& window,
                    double epsilon);

/// Detection is a true positive when at least half of its cells are labelled true.
bool is_true_positive(const Detection& detection, const std::vector<bool>& labels, const GroundGrid& grid);
std::size_t count_true_positives(const std::vector<Detection>& detections, const std::vector<bool>& labels,
                                 const GroundGrid& grid);
/// TP / detections; nullopt when there are no detections.
std::optional<double> detection_rate(const std::vector<Detection>& detections, const std::vector<bool>& labels,
                                     const GroundGrid& grid);

enum class BasisType { kPca, kDct };

struct ReconstructionCurve {
  BasisType basis = BasisType::kPca;
  std::vector<int> k;
  std::vector<double> rms_error;  // pooled RMS point error per K
};

ReconstructionCurve reconstruction_curve(std::span<const Trajectory> trajectories, BasisType basis,
                                         std::span<const int> k_values);

/// Fraction of trajectories whose worst point error is within `tolerance`
/// times their path length.
double subspace_accuracy(std::span<const Trajectory> trajectories, const TrajectoryBasis& basis,
                         double tolerance = 0.01);

struct GazeDestinationStats {
  double bin_degrees = 5.0;
  double horizon_seconds = 10.0;
  std::vector<double> yaw_bin_centers;    // degrees, [-180, 180)
  std::vector<double> pitch_bin_centers;  // degrees, [0, 90)
  std::vector<std::vector<std::size_t>> joint;     // [pitch bin][yaw bin]
  std::vector<std::vector<std::size_t>> per_bin;   // [database pitch bin][yaw bin]
  std::vector<double> yaw_mode;                    // per database pitch bin; NaN when empty

  std::size_t total() const;
};

/// Destination yaw is atan2(x, z) of the reconstructed point at
/// horizon_seconds; positive yaw is toward ego +X.
GazeDestinationStats gaze_destination_stats(const TrainingDatabase& db, double horizon_seconds = 10.0,
                                            double bin_degrees = 5.0);

/// A held-out frame with everything the methods and oracles need.
struct TestFrame {
  FrameSample sample;
  CameraPose pose;
  std::shared_ptr<const World> world;  // null disables detection scoring
};

std::vector<TestFrame> collect_test_frames(const DatasetIndex& index, const GridSpec& grid, int horizon,
                                           const SampleOptions& options = {});

std::vector<TestFrame> synthesize_test_frames(const SynthConfig& config, const GridSpec& grid, int horizon,
                                              const SampleOptions& options = {});

struct EvalConfig {
  PrecisionConfig precision;
  PredictionConfig prediction;
  DiscoveryConfig discovery;
  std::size_t discovery_k = 30;
  bool include_oracle = false;
  bool score_detection = true;
};

inline constexpr const char* kMethodStraight = "going_straight";
inline constexpr const char* kMethodPure2d = "pure_2d";
inline constexpr const char* kMethodGroundPlane2d = "2d_ground_plane";
inline constexpr const char* kMethodNoOpt = "egospace_no_opt";
inline constexpr const char* kMethodOpt = "egospace_opt";
inline constexpr const char* kMethodOracle = "oracle";

struct MethodPrecision {
  std::string method;
  std::vector<std::vector<double>> precision;  // [window][k index]
};

struct SceneDetection {
  std::uint32_t scene_id = 0;
  std::string world_template;
  std::size_t frames = 0;
  std::size_t detections = 0;
  std::size_t true_positives = 0;
  std::optional<double> rate;
};

struct EvalReport {
  PrecisionConfig precision;
  std::size_t test_frames = 0;
  std::vector<MethodPrecision> methods;
  std::vector<SceneDetection> detection;
  std::vector<ReconstructionCurve> reconstruction;
  std::size_t refinements = 0;
  std::size_t refinements_worsened = 0;  // final cost above initial cost

  const MethodPrecision& method(std::string_view name) const;
};

EvalReport evaluate(const TrainingDatabase& db, const DepthBaselineDatabase& depth_db,
                    std::span<const TestFrame> frames, const EvalConfig& config);

nlohmann::json report_to_json(const EvalReport& report);
/// One row per method, one column per (window, k) pair.
void write_precision_csv(std::ostream& out, const EvalReport& report);
void write_detection_csv(std::ostream& out, const EvalReport& report);
void write_reconstruction_csv(std::ostream& out, std::span<const ReconstructionCurve> curves);

}  // namespace egofuture
