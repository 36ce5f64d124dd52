#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>

#include "egofuture/database.hpp"
#include "egofuture/dataset.hpp"
#include "egofuture/depth_io.hpp"
#include "egofuture/discovery.hpp"
#include "egofuture/error.hpp"
#include "egofuture/evalharness.hpp"
#include "egofuture/predictor.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace egofuture::cli {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

struct Context {
  CLI::Option* config = nullptr;

  fs::path config_file() const { return config && config->count() ? config->as<std::string>() : std::string(); }
};

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

template <class Writer>
void write_text(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  writer(out);
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// synth ---------------------------------------------------------------------

struct SynthOptions {
  fs::path out;
  std::uint64_t seed = 1;
  int worlds = 1;
  int agents = 1;
  int frames = 0;
  std::vector<std::string> templates;
  double noise = 0.0;
};

void cmd_synth(const CLI::App& cmd, const Context& ctx, const SynthOptions& o) {
  RunManifest manifest(cmd, ctx.config_file());
  SynthConfig config;
  config.seed = o.seed;
  config.worlds = o.worlds;
  config.agents_per_world = o.agents;
  config.frames = o.frames;
  for (const auto& t : o.templates) config.templates.push_back(parse_world_template(t));
  config.render.noise_sigma = o.noise;
  config.validate();

  make_dir(o.out);
  write_dataset(config, o.out);
  const DatasetIndex index = load_dataset_index(o.out);
  if (static_cast<int>(index.items.size()) != config.sequence_count()) {
    throw Error(ErrorCode::kIo, "dataset index lists the wrong number of sequences");
  }

  std::size_t frames = 0;
  for (const auto& item : index.items) frames += static_cast<std::size_t>(item.frames);
  for (const auto& p : files_under(o.out)) {
    if (p.filename() != "manifest.json") manifest.add_output(p, o.out);
  }
  manifest.add_seed("master", o.seed);
  manifest.report() = {{"sequences", index.items.size()}, {"frames", frames}};
  manifest.write(o.out / "manifest.json");
  std::printf("wrote %zu sequences, %zu frames to %s\n", index.items.size(), frames, o.out.string().c_str());
}

// train ---------------------------------------------------------------------

struct TrainOptions {
  fs::path data;
  fs::path out;
  int k = 6;
  int horizon = 30;
  std::vector<double> pitch_edges;  // degrees
};

void cmd_train(const CLI::App& cmd, const Context& ctx, const TrainOptions& o) {
  RunManifest manifest(cmd, ctx.config_file());
  manifest.add_input("data", o.data);
  const DatasetIndex index = load_dataset_index(o.data);
  const GridSpec grid;
  ExtractStats stats;
  const auto samples = collect_samples(index, grid, o.horizon, SampleOptions{}, &stats);

  BuildOptions build;
  build.k = o.k;
  if (!o.pitch_edges.empty()) {
    if (o.pitch_edges.size() != 2) throw Error(ErrorCode::kInvalidArgument, "--pitch-edges needs two values");
    build.pitch_edges = PitchEdges{o.pitch_edges[0] * kDegree, o.pitch_edges[1] * kDegree};
  }
  BuildReport report;
  const TrainingDatabase db = build_database(samples, grid, build, &report);

  const fs::path dir = o.out.has_parent_path() ? o.out.parent_path() : fs::path(".");
  make_dir(dir);
  save_database(o.out, db);
  if (encode_egdb(load_database(o.out)) != encode_egdb(db)) {
    throw Error(ErrorCode::kIo, "EGDB reload differs from the built database");
  }

  manifest.add_output(o.out, dir);
  manifest.add_seed("ransac", SampleOptions{}.ransac.seed);
  manifest.report() = {{"entries", db.size()},
                       {"frames", stats.frames},
                       {"plane_failures", stats.plane_failures},
                       {"effective_rank", report.effective_rank},
                       {"rank_deficient", report.rank_deficient},
                       {"explained_variance_ratio", report.explained_variance_ratio},
                       {"pitch_edges_degrees", {db.pitch_edges()[0] / kDegree, db.pitch_edges()[1] / kDegree}},
                       {"bin_sizes", {db.bin_size(0), db.bin_size(1), db.bin_size(2)}}};
  manifest.write(o.out.string() + ".manifest.json");
  std::printf("%zu entries, K=%d, explained variance", db.size(), db.basis().size());
  for (const double r : report.explained_variance_ratio) std::printf(" %.4f", r);
  std::printf("\n");
}

// predict -------------------------------------------------------------------

struct PredictOptions {
  fs::path db;
  fs::path depth;
  fs::path poses;
  int frame = -1;
  std::vector<double> up{0.0, -1.0, 0.0};
  double height_prior = 1.6;
  std::size_t k = 30;
  int max_iters = 100;
  double cost_tol = 1e-4;
  double step_init = 0.5;
  double reg_lambda = 0.0;
  std::string knn = "linear";
  double sigma = 0.5;
  double threshold = 0.3;
  double resolution = 0.25;
  fs::path out;
};

KnnMethod parse_knn(const std::string& s) {
  if (s == "linear") return KnnMethod::kLinearScan;
  if (s == "kdtree") return KnnMethod::kKdTree;
  throw Error(ErrorCode::kInvalidArgument, "unknown knn method '" + s + "'");
}

Eigen::Vector3d up_prior(const PredictOptions& o) {
  if (!o.poses.empty()) {
    const nlohmann::json poses = read_json_file(o.poses).at("poses");
    if (o.frame < 0 || o.frame >= static_cast<int>(poses.size())) {
      throw Error(ErrorCode::kIndexOutOfRange, "--frame outside the pose file");
    }
    return camera_up(pose_from_json(poses.at(static_cast<std::size_t>(o.frame))));
  }
  if (o.up.size() != 3) throw Error(ErrorCode::kInvalidArgument, "--up needs three values");
  return {o.up[0], o.up[1], o.up[2]};
}

nlohmann::json prediction_json(const Prediction& p, const TrainingDatabase& db, std::size_t k) {
  const auto& basis = db.basis();
  nlohmann::json candidates = nlohmann::json::array();
  for (std::size_t i = 0; i < p.candidates.size(); ++i) {
    const PredictedTrajectory& c = p.candidates[i];
    const Trajectory t = reconstruct(c.beta, basis);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& q : t.points) points.push_back({q.x(), q.y()});
    candidates.push_back({{"rank", i},
                          {"beta", vec_json(c.beta)},
                          {"beta_init", vec_json(c.beta_init)},
                          {"points", std::move(points)},
                          {"init_cost", c.init_cost},
                          {"final_cost", c.final_cost},
                          {"iterations", c.iterations},
                          {"status", to_string(c.status)},
                          {"source_entry", c.source_entry},
                          {"source_scene", c.source_scene},
                          {"source_frame", c.source_frame},
                          {"knn_rank", c.knn_rank},
                          {"knn_distance", c.knn_distance}});
  }
  const GroundPlane& plane = p.view.plane.plane;
  return {{"format", "egofuture-prediction"},
          {"version", 1},
          {"k", k},
          {"dt", basis.dt},
          {"horizon", basis.horizon},
          {"pitch", p.view.pitch},
          {"pitch_bin", p.knn.pitch_bin},
          {"truncated", p.knn.truncated},
          {"eye_height", p.view.frame.eye_height},
          {"ground_plane", {{"normal", {plane.normal.x(), plane.normal.y(), plane.normal.z()}}, {"offset", plane.offset}}},
          {"candidates", std::move(candidates)}};
}

void cmd_predict(const CLI::App& cmd, const Context& ctx, const PredictOptions& o) {
  RunManifest manifest(cmd, ctx.config_file());
  manifest.add_input("db", o.db);
  manifest.add_input("depth", o.depth);
  if (!o.poses.empty()) manifest.add_input("poses", o.poses);

  const TrainingDatabase db = load_database(o.db);
  const DepthImage depth = read_egod(o.depth);
  PredictionConfig pc;
  pc.k = o.k;
  pc.max_iters = o.max_iters;
  pc.cost_tol = o.cost_tol;
  pc.step_init = o.step_init;
  pc.reg_lambda = o.reg_lambda;
  pc.knn_method = parse_knn(o.knn);
  pc.up_prior = up_prior(o);
  pc.height_prior = o.height_prior;
  const Prediction p = predict(depth, db, pc);

  DiscoveryConfig dc;
  dc.sigma = o.sigma;
  dc.threshold = o.threshold;
  dc.resolution = o.resolution;
  const OccludedSpaceMap psi = discover(p.candidates, db.basis(), p.view.map, dc);
  const auto detections = extract_detections(psi, dc.threshold);

  make_dir(o.out);
  const nlohmann::json pred = prediction_json(p, db, o.k);
  write_json_file(o.out / "predictions.json", pred);
  write_text(o.out / "psi.csv", [&](std::ostream& s) { write_psi_csv(s, psi); });
  write_text(o.out / "psi.pgm", [&](std::ostream& s) { write_psi_pgm(s, psi); });
  write_json_file(o.out / "detections.json",
                  {{"format", "egofuture-detections"}, {"version", 1}, {"resolution", dc.resolution},
                   {"threshold", dc.threshold}, {"detections", detections_to_json(detections)}});

  if (read_json_file(o.out / "predictions.json") != pred) {
    throw Error(ErrorCode::kIo, "predictions.json does not read back");
  }
  for (const char* name : {"predictions.json", "psi.csv", "psi.pgm", "detections.json"}) {
    manifest.add_output(o.out / name, o.out);
  }
  manifest.add_seed("ransac", pc.ransac.seed);
  manifest.report() = {{"candidates", p.candidates.size()}, {"detections", detections.size()}};
  manifest.write(o.out / "manifest.json");
  const double best = p.candidates.empty() ? 0.0 : p.candidates.front().final_cost;
  std::printf("%zu candidates (best cost %.4f), %zu detections\n", p.candidates.size(), best, detections.size());
}

// eval ----------------------------------------------------------------------

struct EvalOptions {
  fs::path db;
  fs::path train_data;
  fs::path test_data;
  std::vector<std::size_t> k_values{30, 60, 100};
  double epsilon = 1.5;
  int max_iters = 100;
  std::size_t discovery_k = 30;
  bool oracle = false;
  bool no_detection = false;
  fs::path out;
};

void cmd_eval(const CLI::App& cmd, const Context& ctx, const EvalOptions& o) {
  RunManifest manifest(cmd, ctx.config_file());
  manifest.add_input("db", o.db);
  manifest.add_input("train_data", o.train_data);
  manifest.add_input("test_data", o.test_data);

  const TrainingDatabase db = load_database(o.db);
  const int horizon = db.basis().horizon;
  const DatasetIndex train = load_dataset_index(o.train_data);
  const DepthBaselineDatabase depth_db =
      build_depth_database(collect_samples(train, db.grid(), horizon), train.dt);
  const auto frames = collect_test_frames(load_dataset_index(o.test_data), db.grid(), horizon);

  EvalConfig ec;
  ec.precision.k_values = o.k_values;
  ec.precision.epsilon = o.epsilon;
  ec.prediction.max_iters = o.max_iters;
  ec.discovery_k = o.discovery_k;
  ec.include_oracle = o.oracle;
  ec.score_detection = !o.no_detection;
  const EvalReport report = evaluate(db, depth_db, frames, ec);

  make_dir(o.out);
  const nlohmann::json rj = report_to_json(report);
  write_json_file(o.out / "report.json", rj);
  write_text(o.out / "precision.csv", [&](std::ostream& s) { write_precision_csv(s, report); });
  std::vector<std::string> written{"report.json", "precision.csv"};
  if (ec.score_detection) {
    write_text(o.out / "detection.csv", [&](std::ostream& s) { write_detection_csv(s, report); });
    written.push_back("detection.csv");
  }
  if (read_json_file(o.out / "report.json") != rj) throw Error(ErrorCode::kIo, "report.json does not read back");
  for (const auto& name : written) manifest.add_output(o.out / name, o.out);
  manifest.add_seed("ransac", ec.prediction.ransac.seed);
  manifest.report() = {{"test_frames", report.test_frames},
                       {"refinements", report.refinements},
                       {"refinements_worsened", report.refinements_worsened}};
  manifest.write(o.out / "manifest.json");
  std::ifstream csv(o.out / "precision.csv");
  std::cout << csv.rdbuf();
}

// bases ---------------------------------------------------------------------

struct BasesOptions {
  fs::path data;
  int horizon = 30;
  std::vector<int> k_values{2, 4, 6, 8, 10, 12};
  fs::path out;
};

void cmd_bases(const CLI::App& cmd, const Context& ctx, const BasesOptions& o) {
  RunManifest manifest(cmd, ctx.config_file());
  manifest.add_input("data", o.data);
  std::vector<Trajectory> trajectories;
  for (auto& s : collect_samples(load_dataset_index(o.data), GridSpec{}, o.horizon)) {
    trajectories.push_back(std::move(s.future));
  }
  if (trajectories.empty()) throw Error(ErrorCode::kEmptyInput, "dataset yields no trajectories");
  const std::vector<ReconstructionCurve> curves{reconstruction_curve(trajectories, BasisType::kPca, o.k_values),
                                                reconstruction_curve(trajectories, BasisType::kDct, o.k_values)};
  make_dir(o.out);
  write_text(o.out / "bases.csv", [&](std::ostream& s) { write_reconstruction_csv(s, curves); });
  manifest.add_output(o.out / "bases.csv", o.out);
  manifest.report() = {{"trajectories", trajectories.size()}};
  manifest.write(o.out / "manifest.json");
  std::ifstream csv(o.out / "bases.csv");
  std::cout << csv.rdbuf();
}

// replay --------------------------------------------------------------------

struct ReplayOptions {
  fs::path manifest;
  fs::path out;
};

int cmd_replay(const ReplayOptions& o) {
  nlohmann::json overrides = nlohmann::json::object();
  if (!o.out.empty()) overrides["out"] = o.out.string();
  return run(replay_arguments(read_json_file(o.manifest), overrides));
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPlaneNotFound:
    case ErrorCode::kDegenerateGaze:
    case ErrorCode::kGeneration:
    case ErrorCode::kUnreachable:
      return kExitGeometry;
    case ErrorCode::kEmptyBin:
      return kExitEmptyBin;
    default:
      return kExitInput;
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Egocentric future trajectory prediction and occluded-space discovery", "egofuture"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", EGOFUTURE_VERSION);
  Context ctx;
  ctx.config = app.set_config("--config", "", "Key/value config file ([command] sections); flags take precedence");

  int status = kExitOk;
  auto check_positive = CLI::PositiveNumber;

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  s->add_option("--out", synth.out, "Dataset directory")->required();
  s->add_option("--seed", synth.seed, "Master seed");
  s->add_option("--worlds", synth.worlds, "Number of worlds")->check(check_positive);
  s->add_option("--agents", synth.agents, "Agents per world")->check(check_positive);
  s->add_option("--frames", synth.frames, "Frames per sequence (0: natural tour length)")->check(CLI::NonNegativeNumber);
  s->add_option("--template", synth.templates, "World templates, cycled over worlds (default: all)")->delimiter(',');
  s->add_option("--noise", synth.noise, "Depth noise sigma in meters")->check(CLI::NonNegativeNumber);
  s->callback([&] { cmd_synth(*s, ctx, synth); });

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Learn the trajectory basis and build an EGDB database");
  t->add_option("--data", train.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", train.out, "EGDB file")->required();
  t->add_option("--K", train.k, "Basis size")->check(check_positive);
  t->add_option("--horizon", train.horizon, "Future steps per trajectory")->check(check_positive);
  t->add_option("--pitch-edges", train.pitch_edges, "Pitch bin edges in degrees (default: terciles)")->delimiter(',');
  t->callback([&] { cmd_train(*t, ctx, train); });

  PredictOptions pred;
  auto* p = app.add_subcommand("predict", "Predict trajectories and occluded space for one depth image");
  p->add_option("--db", pred.db, "EGDB file")->required()->check(CLI::ExistingFile);
  p->add_option("--depth", pred.depth, "EGOD depth image")->required()->check(CLI::ExistingFile);
  p->add_option("--poses", pred.poses, "poses.json supplying the gravity prior")->check(CLI::ExistingFile);
  p->add_option("--frame", pred.frame, "Frame index into --poses");
  p->add_option("--up", pred.up, "Camera-frame up prior when no poses are given")->delimiter(',')->expected(3);
  p->add_option("--height-prior", pred.height_prior, "Expected eye height in meters");
  p->add_option("--k", pred.k, "Neighbor count")->check(check_positive);
  p->add_option("--max-iters", pred.max_iters, "Refinement iterations")->check(CLI::NonNegativeNumber);
  p->add_option("--cost-tol", pred.cost_tol, "Stop when the cost decrease falls below this");
  p->add_option("--step-init", pred.step_init, "Initial line-search step");
  p->add_option("--reg-lambda", pred.reg_lambda, "Weight pulling beta toward the retrieved beta");
  p->add_option("--knn", pred.knn, "Neighbor search: linear or kdtree");
  p->add_option("--sigma", pred.sigma, "Occluded-space kernel width in meters");
  p->add_option("--threshold", pred.threshold, "Detection threshold on psi");
  p->add_option("--resolution", pred.resolution, "Occluded-space cell size in meters");
  p->add_option("--out", pred.out, "Output directory")->required();
  p->callback([&] { cmd_predict(*p, ctx, pred); });

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Score all methods on a held-out dataset");
  e->add_option("--db", ev.db, "EGDB file")->required()->check(CLI::ExistingFile);
  e->add_option("--train-data", ev.train_data, "Training dataset (depth-only baselines)")
      ->required()
      ->check(CLI::ExistingDirectory);
  e->add_option("--test-data", ev.test_data, "Held-out dataset")->required()->check(CLI::ExistingDirectory);
  e->add_option("--k-values", ev.k_values, "Prediction set sizes")->delimiter(',');
  e->add_option("--epsilon", ev.epsilon, "Hit distance in meters");
  e->add_option("--max-iters", ev.max_iters, "Refinement iterations")->check(CLI::NonNegativeNumber);
  e->add_option("--discovery-k", ev.discovery_k, "Trajectories used for occluded-space discovery");
  e->add_flag("--oracle", ev.oracle, "Add the ground-truth oracle method");
  e->add_flag("--no-detection", ev.no_detection, "Skip occluded-space scoring");
  e->add_option("--out", ev.out, "Output directory")->required();
  e->callback([&] { cmd_eval(*e, ctx, ev); });

  BasesOptions bases;
  auto* b = app.add_subcommand("bases", "PCA vs DCT reconstruction error curves");
  b->add_option("--data", bases.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  b->add_option("--horizon", bases.horizon, "Future steps per trajectory")->check(check_positive);
  b->add_option("--k-values", bases.k_values, "Basis sizes")->delimiter(',');
  b->add_option("--out", bases.out, "Output directory")->required();
  b->callback([&] { cmd_bases(*b, ctx, bases); });

  ReplayOptions replay;
  auto* r = app.add_subcommand("replay", "Re-execute a run from its manifest");
  r->add_option("manifest", replay.manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  r->add_option("--out", replay.out, "Write outputs here instead of the recorded location");
  r->callback([&] { status = cmd_replay(replay); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitInput;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return exit_code(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitFailure;
  }
  return status;
}

}  // namespace egofuture::cli
