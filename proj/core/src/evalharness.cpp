#include "egofuture/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include <nlohmann/json.hpp>

#include "egofuture/error.hpp"

namespace egofuture {

namespace {

constexpr double kTimeSlack = 1e-9;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string format_fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string TimeWindow::label() const { return format_number(begin) + "-" + format_number(end) + "s"; }

void PrecisionConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (windows.empty() || k_values.empty()) throw Error(ErrorCode::kInvalidArgument, "need windows and k values");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!(windows[i].end > windows[i].begin) || windows[i].begin < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "time window must satisfy 0 <= begin < end");
    }
    if (i > 0 && windows[i].begin < windows[i - 1].end) {
      throw Error(ErrorCode::kInvalidArgument, "time windows must be disjoint and ordered");
    }
  }
  for (const auto k : k_values) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k values must be positive");
  }
}

std::size_t PrecisionConfig::max_k() const { return *std::max_element(k_values.begin(), k_values.end()); }

std::vector<int> window_indices(const TimeWindow& window, double dt, int horizon) {
  if (window.end > horizon * dt + kTimeSlack) {
    throw Error(ErrorCode::kHorizon, "window " + window.label() + " extends past the horizon");
  }
  std::vector<int> out;
  for (int i = 0; i < horizon; ++i) {
    const double t = (i + 1) * dt;
    if (t > window.begin + kTimeSlack && t <= window.end + kTimeSlack) out.push_back(i);
  }
  if (out.empty()) throw Error(ErrorCode::kHorizon, "window " + window.label() + " contains no time step");
  return out;
}

bool trajectory_hit(std::span<const Trajectory> predictions, const Trajectory& ground_truth, const TimeWindow& window,
                    double epsilon) {
  const auto indices = window_indices(window, ground_truth.dt, ground_truth.horizon());
  for (const auto& p : predictions) {
    if (p.horizon() != ground_truth.horizon() || std::abs(p.dt - ground_truth.dt) > kTimeSlack) {
      throw Error(ErrorCode::kDimensionMismatch, "prediction and ground truth differ in horizon or dt");
    }
    double worst = 0.0;
    for (const int i : indices) worst = std::max(worst, (p.points[i] - ground_truth.points[i]).norm());
    if (worst < epsilon) return true;
  }
  return false;
}

bool is_true_positive(const Detection& detection, const std::vector<bool>& labels, const GroundGrid& grid) {
  if (labels.size() != grid.cell_count()) throw Error(ErrorCode::kDimensionMismatch, "labels do not cover the grid");
  std::size_t hits = 0;
  for (const auto& [r, c] : detection.cells) hits += labels[static_cast<std::size_t>(r) * grid.cols + c] ? 1 : 0;
  return 2 * hits >= detection.cells.size() && !detection.cells.empty();
}

std::size_t count_true_positives(const std::vector<Detection>& detections, const std::vector<bool>& labels,
                                 const GroundGrid& grid) {
  return static_cast<std::size_t>(std::count_if(detections.begin(), detections.end(),
                                                [&](const Detection& d) { return is_true_positive(d, labels, grid); }));
}

std::optional<double> detection_rate(const std::vector<Detection>& detections, const std::vector<bool>& labels,
                                     const GroundGrid& grid) {
  if (detections.empty()) return std::nullopt;
  return static_cast<double>(count_true_positives(detections, labels, grid)) / static_cast<double>(detections.size());
}

ReconstructionCurve reconstruction_curve(std::span<const Trajectory> trajectories, BasisType basis,
                                         std::span<const int> k_values) {
  if (trajectories.empty()) throw Error(ErrorCode::kEmptyInput, "no trajectories");
  ReconstructionCurve out;
  out.basis = basis;
  const int horizon = trajectories.front().horizon();
  const double dt = trajectories.front().dt;
  for (const int k : k_values) {
    const TrajectoryBasis b =
        basis == BasisType::kPca ? learn_pca_basis(trajectories, k).basis : make_dct_basis(horizon, k, dt);
    double sum = 0.0;
    for (const auto& t : trajectories) {
      const Eigen::VectorXd x = t.flatten();
      const Eigen::VectorXd centered = x - b.mean;
      const Eigen::VectorXd rec = b.basis * (b.basis.transpose() * centered) + b.mean;
      sum += (rec - x).squaredNorm();
    }
    out.k.push_back(k);
    out.rms_error.push_back(std::sqrt(sum / (static_cast<double>(trajectories.size()) * horizon)));
  }
  return out;
}

double subspace_accuracy(std::span<const Trajectory> trajectories, const TrajectoryBasis& basis, double tolerance) {
  if (trajectories.empty()) throw Error(ErrorCode::kEmptyInput, "no trajectories");
  std::size_t ok = 0;
  for (const auto& t : trajectories) {
    const Trajectory rec = reconstruct(fit_coefficients(t, basis), basis);
    const double err = max_point_error(t, rec);
    if (err <= std::max(tolerance * t.path_length(), 1e-12)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(trajectories.size());
}

std::size_t GazeDestinationStats::total() const {
  std::size_t n = 0;
  for (const auto& row : joint) {
    for (const auto v : row) n += v;
  }
  return n;
}

GazeDestinationStats gaze_destination_stats(const TrainingDatabase& db, double horizon_seconds, double bin_degrees) {
  if (!(bin_degrees > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bin width must be positive");
  const auto& basis = db.basis();
  const int index = static_cast<int>(std::lround(horizon_seconds / basis.dt)) - 1;
  if (index < 0 || index >= basis.horizon) throw Error(ErrorCode::kHorizon, "destination time outside the horizon");
  GazeDestinationStats s;
  s.bin_degrees = bin_degrees;
  s.horizon_seconds = horizon_seconds;
  const int n_yaw = static_cast<int>(std::lround(360.0 / bin_degrees));
  const int n_pitch = static_cast<int>(std::lround(90.0 / bin_degrees));
  for (int i = 0; i < n_yaw; ++i) s.yaw_bin_centers.push_back(-180.0 + (i + 0.5) * bin_degrees);
  for (int i = 0; i < n_pitch; ++i) s.pitch_bin_centers.push_back((i + 0.5) * bin_degrees);
  s.joint.assign(n_pitch, std::vector<std::size_t>(n_yaw, 0));
  s.per_bin.assign(kPitchBins, std::vector<std::size_t>(n_yaw, 0));
  constexpr double kDeg = 180.0 / std::numbers::pi;
  for (const auto& e : db.entries()) {
    const Eigen::Vector2d p = point_at(e.beta, basis, index);
    const double yaw = std::atan2(p.x(), p.y()) * kDeg;
    const int yb = std::clamp(static_cast<int>(std::floor((yaw + 180.0) / bin_degrees)), 0, n_yaw - 1);
    const int pb = std::clamp(static_cast<int>(std::floor(e.pitch * kDeg / bin_degrees)), 0, n_pitch - 1);
    ++s.joint[pb][yb];
    ++s.per_bin[e.pitch_bin][yb];
  }
  for (const auto& hist : s.per_bin) {
    const auto it = std::max_element(hist.begin(), hist.end());
    s.yaw_mode.push_back(*it == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : s.yaw_bin_centers[static_cast<std::size_t>(it - hist.begin())]);
  }
  return s;
}

std::vector<TestFrame> collect_test_frames(const DatasetIndex& index, const GridSpec& grid, int horizon,
                                           const SampleOptions& options) {
  std::vector<TestFrame> out;
  for (std::size_t i = 0; i < index.items.size(); ++i) {
    const LoadedSequence s = load_sequence(index, i);
    for (auto& sample : extract_samples(s.sequence, grid, horizon, index.dt, options)) {
      TestFrame t;
      t.pose = s.sequence.poses[sample.frame_id];
      t.world = s.world;
      t.sample = std::move(sample);
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<TestFrame> synthesize_test_frames(const SynthConfig& config, const GridSpec& grid, int horizon,
                                              const SampleOptions& options) {
  std::vector<TestFrame> out;
  for (int i = 0; i < config.sequence_count(); ++i) {
    const SynthSequence s = synthesize_sequence(config, i, true);
    for (auto& sample : extract_samples(s.sequence, grid, horizon, config.agent.dt, options)) {
      TestFrame t;
      t.pose = s.sequence.poses[sample.frame_id];
      t.world = s.world;
      t.sample = std::move(sample);
      out.push_back(std::move(t));
    }
  }
  return out;
}

const MethodPrecision& EvalReport::method(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "report has no method '" + std::string(name) + "'");
}

EvalReport evaluate(const TrainingDatabase& db, const DepthBaselineDatabase& depth_db,
                    std::span<const TestFrame> frames, const EvalConfig& config) {
  config.precision.validate();
  config.discovery.validate();
  if (frames.empty()) throw Error(ErrorCode::kEmptyInput, "no test frames");
  const auto& pc = config.precision;
  const std::size_t max_k = pc.max_k();
  PredictionConfig pred = config.prediction;
  pred.k = max_k;

  std::vector<std::string> names{kMethodStraight, kMethodPure2d, kMethodGroundPlane2d, kMethodNoOpt, kMethodOpt};
  if (config.include_oracle) names.emplace_back(kMethodOracle);
  std::vector<std::vector<std::vector<std::size_t>>> hits(
      names.size(), std::vector<std::vector<std::size_t>>(pc.windows.size(), std::vector<std::size_t>(pc.k_values.size(), 0)));

  EvalReport report;
  report.precision = pc;
  report.test_frames = frames.size();
  const Trajectory straight = baseline_straight(db);
  const GroundGrid det_grid = GroundGrid::make(config.discovery.extent, config.discovery.resolution);

  auto score = [&](std::size_t method, const std::vector<Trajectory>& ranked, const Trajectory& gt) {
    for (std::size_t w = 0; w < pc.windows.size(); ++w) {
      for (std::size_t ki = 0; ki < pc.k_values.size(); ++ki) {
        const std::size_t n = std::min(ranked.size(), pc.k_values[ki]);
        if (trajectory_hit(std::span<const Trajectory>(ranked.data(), n), gt, pc.windows[w], pc.epsilon)) {
          ++hits[method][w][ki];
        }
      }
    }
  };

  for (const auto& frame : frames) {
    const FrameSample& s = frame.sample;
    TestView view;
    view.frame = s.frame;
    view.map = s.map;
    view.pitch = s.pitch;
    const Trajectory& gt = s.future;

    score(0, {straight}, gt);
    score(1, baseline_predict(BaselineMode::kPure2d, s.depth_feature, view, depth_db, pred), gt);
    score(2, baseline_predict(BaselineMode::kGroundPlane2d, s.depth_feature, view, depth_db, pred), gt);

    Prediction p = predict(view, db, pred);
    std::sort(p.candidates.begin(), p.candidates.end(),
              [](const PredictedTrajectory& a, const PredictedTrajectory& b) { return a.knn_rank < b.knn_rank; });
    std::vector<Trajectory> no_opt;
    std::vector<Trajectory> opt;
    for (const auto& c : p.candidates) {
      no_opt.push_back(reconstruct(c.beta_init, db.basis()));
      opt.push_back(reconstruct(c.beta, db.basis()));
      ++report.refinements;
      if (c.final_cost > c.init_cost + 1e-9) ++report.refinements_worsened;
    }
    score(3, no_opt, gt);
    score(4, opt, gt);
    if (config.include_oracle) score(5, {gt}, gt);

    if (config.score_detection && frame.world) {
      const std::size_t n = std::min(config.discovery_k, p.candidates.size());
      const auto occ = discover(std::span<const PredictedTrajectory>(p.candidates.data(), n), db.basis(), s.map,
                                config.discovery);
      const auto detections = extract_detections(occ, config.discovery.threshold);
      const auto labels = oracle_occluded_free(*frame.world, frame.pose, s.frame, det_grid);
      auto it = std::find_if(report.detection.begin(), report.detection.end(),
                             [&](const SceneDetection& d) { return d.scene_id == s.scene_id; });
      if (it == report.detection.end()) {
        report.detection.push_back({s.scene_id, to_string(frame.world->kind), 0, 0, 0, std::nullopt});
        it = std::prev(report.detection.end());
      }
      ++it->frames;
      it->detections += detections.size();
      it->true_positives += count_true_positives(detections, labels, det_grid);
    }
  }

  for (auto& d : report.detection) {
    if (d.detections > 0) d.rate = static_cast<double>(d.true_positives) / static_cast<double>(d.detections);
  }
  std::sort(report.detection.begin(), report.detection.end(),
            [](const SceneDetection& a, const SceneDetection& b) { return a.scene_id < b.scene_id; });
  for (std::size_t m = 0; m < names.size(); ++m) {
    MethodPrecision mp;
    mp.method = names[m];
    for (std::size_t w = 0; w < pc.windows.size(); ++w) {
      std::vector<double> row;
      for (std::size_t ki = 0; ki < pc.k_values.size(); ++ki) {
        row.push_back(static_cast<double>(hits[m][w][ki]) / static_cast<double>(frames.size()));
      }
      mp.precision.push_back(std::move(row));
    }
    report.methods.push_back(std::move(mp));
  }
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["epsilon"] = report.precision.epsilon;
  j["windows"] = nlohmann::json::array();
  for (const auto& w : report.precision.windows) j["windows"].push_back({{"begin", w.begin}, {"end", w.end}});
  j["k_values"] = report.precision.k_values;
  j["test_frames"] = report.test_frames;
  j["methods"] = nlohmann::json::array();
  for (const auto& m : report.methods) j["methods"].push_back({{"method", m.method}, {"precision", m.precision}});
  j["detection"] = nlohmann::json::array();
  for (const auto& d : report.detection) {
    j["detection"].push_back({{"scene_id", d.scene_id},
                              {"template", d.world_template},
                              {"frames", d.frames},
                              {"detections", d.detections},
                              {"true_positives", d.true_positives},
                              {"rate", d.rate ? nlohmann::json(*d.rate) : nlohmann::json(nullptr)}});
  }
  j["reconstruction"] = nlohmann::json::array();
  for (const auto& c : report.reconstruction) {
    j["reconstruction"].push_back(
        {{"basis", c.basis == BasisType::kPca ? "pca" : "dct"}, {"k", c.k}, {"rms_error", c.rms_error}});
  }
  j["refinements"] = report.refinements;
  j["refinements_worsened"] = report.refinements_worsened;
  return j;
}

void write_precision_csv(std::ostream& out, const EvalReport& report) {
  out << "method";
  for (const auto& w : report.precision.windows) {
    for (const auto k : report.precision.k_values) out << ',' << w.label() << " k=" << k;
  }
  out << '\n';
  for (const auto& m : report.methods) {
    out << m.method;
    for (const auto& row : m.precision) {
      for (const double v : row) out << ',' << format_fixed(v);
    }
    out << '\n';
  }
}

void write_detection_csv(std::ostream& out, const EvalReport& report) {
  out << "scene_id,template,frames,detections,true_positives,detection_rate\n";
  for (const auto& d : report.detection) {
    out << d.scene_id << ',' << d.world_template << ',' << d.frames << ',' << d.detections << ',' << d.true_positives
        << ',' << (d.rate ? format_fixed(*d.rate) : std::string("undefined")) << '\n';
  }
}

void write_reconstruction_csv(std::ostream& out, std::span<const ReconstructionCurve> curves) {
  out << "basis,k,rms_error\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.k.size(); ++i) {
      out << (c.basis == BasisType::kPca ? "pca" : "dct") << ',' << c.k[i] << ',' << format_fixed(c.rms_error[i])
          << '\n';
    }
  }
}

}  // namespace egofuture
