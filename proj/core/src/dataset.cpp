#include "egofuture/dataset.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "egofuture/depth_io.hpp"
#include "egofuture/error.hpp"
#include "egofuture/rng.hpp"

namespace egofuture {

namespace fs = std::filesystem;

namespace {

std::string numbered(const char* prefix, int width, std::uint64_t n, const char* suffix = "") {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*llu%s", prefix, width, static_cast<unsigned long long>(n), suffix);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

nlohmann::json intrinsics_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.validate();
  return k;
}

}  // namespace

void SynthConfig::validate() const {
  if (worlds < 1 || agents_per_world < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one world and agent");
  if (frames < 0) throw Error(ErrorCode::kInvalidArgument, "frames must be non-negative");
  if (render.noise_sigma < 0.0) throw Error(ErrorCode::kInvalidArgument, "depth noise sigma must be non-negative");
  intrinsics.validate();
}

WorldTemplate SynthConfig::template_for(int world_index) const {
  if (templates.empty()) return kAllTemplates[world_index % std::size(kAllTemplates)];
  return templates[static_cast<std::size_t>(world_index) % templates.size()];
}

SynthSequence synthesize_sequence(const SynthConfig& config, int index, bool render) {
  config.validate();
  if (index < 0 || index >= config.sequence_count()) throw Error(ErrorCode::kIndexOutOfRange, "sequence index");
  const int world_index = index / config.agents_per_world;
  WorldParams wp = config.world;
  wp.kind = config.template_for(world_index);
  auto world = std::make_shared<const World>(generate_world(wp, derive_seed(config.seed, "world", world_index)));

  SynthSequence out;
  out.scene_id = static_cast<std::uint32_t>(index);
  out.world = world;
  const double needed =
      config.frames > 0 ? config.frames * config.agent.speed_max * config.agent.dt + 5.0 : 0.0;
  constexpr int kAttempts = 12;
  bool done = false;
  for (int attempt = 0; attempt < kAttempts && !done; ++attempt) {
    Rng stream(derive_seed(config.seed, "agent", static_cast<std::uint64_t>(index) * kAttempts + attempt));
    const std::uint64_t tour_seed = stream();
    const std::uint64_t motion_seed = stream();
    try {
      const auto waypoints = sample_waypoints(*world, needed * (1.0 + 0.5 * attempt), config.agent, tour_seed);
      out.path = simulate_agent(*world, waypoints, config.agent, motion_seed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnreachable && e.code() != ErrorCode::kGeneration) throw;
      continue;
    }
    done = config.frames == 0 || static_cast<int>(out.path.poses.size()) >= config.frames;
  }
  if (!done) throw Error(ErrorCode::kGeneration, "could not simulate sequence " + std::to_string(index));
  if (config.frames > 0) out.path.poses.resize(static_cast<std::size_t>(config.frames));

  out.sequence.scene_id = out.scene_id;
  for (std::size_t f = 0; f < out.path.poses.size(); ++f) {
    const CameraPose pose = out.path.poses[f].camera_pose();
    out.sequence.poses.push_back(pose);
    if (render) {
      const std::uint64_t noise_seed = derive_seed(config.seed, "noise", (static_cast<std::uint64_t>(index) << 24) | f);
      out.sequence.depths.push_back(render_depth(*world, pose, config.intrinsics, config.render, noise_seed));
    }
  }
  return out;
}

std::vector<FrameSample> synthesize_samples(const SynthConfig& config, const GridSpec& grid, int horizon,
                                            const SampleOptions& options, ExtractStats* stats) {
  std::vector<FrameSample> out;
  for (int i = 0; i < config.sequence_count(); ++i) {
    const SynthSequence s = synthesize_sequence(config, i, true);
    auto samples = extract_samples(s.sequence, grid, horizon, config.agent.dt, options, stats);
    std::move(samples.begin(), samples.end(), std::back_inserter(out));
  }
  return out;
}

nlohmann::json pose_to_json(const CameraPose& pose) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  }
  return {{"center", {pose.center.x(), pose.center.y(), pose.center.z()}}, {"rotation", rot}};
}

CameraPose pose_from_json(const nlohmann::json& j) {
  CameraPose pose;
  const auto& c = j.at("center");
  pose.center = Eigen::Vector3d(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
  const auto& rot = j.at("rotation");
  if (rot.size() != 9) throw Error(ErrorCode::kFormat, "pose rotation needs 9 values");
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) pose.rotation(r, col) = rot.at(3 * r + col).get<double>();
  }
  return pose;
}

void write_dataset(const SynthConfig& config, const fs::path& dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(dir / "worlds", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + (dir / "worlds").string() + ": " + ec.message());

  nlohmann::json index = {{"format", "egofuture-dataset"},
                          {"version", 1},
                          {"seed", config.seed},
                          {"dt", config.agent.dt},
                          {"intrinsics", intrinsics_json(config.intrinsics)}};
  index["sequences"] = nlohmann::json::array();
  for (int i = 0; i < config.sequence_count(); ++i) {
    const SynthSequence s = synthesize_sequence(config, i, true);
    const int world_index = i / config.agents_per_world;
    const std::string world_file = numbered("worlds/world_", 4, static_cast<std::uint64_t>(world_index), ".json");
    if (i % config.agents_per_world == 0) write_json(dir / world_file, *s.world);

    const std::string seq_dir = numbered("seq_", 4, static_cast<std::uint64_t>(i));
    fs::create_directories(dir / seq_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + (dir / seq_dir).string());
    nlohmann::json poses = {{"scene_id", s.scene_id}, {"dt", config.agent.dt}, {"speed", s.path.speed}};
    poses["poses"] = nlohmann::json::array();
    for (std::size_t f = 0; f < s.sequence.poses.size(); ++f) {
      write_egod(dir / seq_dir / numbered("depth_", 5, f, ".egod"), s.sequence.depths[f]);
      nlohmann::json p = pose_to_json(s.sequence.poses[f]);
      const AgentPose& a = s.path.poses[f];
      p["position"] = {a.position.x(), a.position.y()};
      p["yaw"] = a.yaw;
      p["pitch"] = a.pitch;
      p["eye_height"] = a.eye_height;
      poses["poses"].push_back(std::move(p));
    }
    write_json(dir / seq_dir / "poses.json", poses);
    index["sequences"].push_back({{"scene_id", s.scene_id},
                                  {"template", to_string(s.world->kind)},
                                  {"world", world_file},
                                  {"dir", seq_dir},
                                  {"frames", s.sequence.poses.size()}});
  }
  write_json(dir / "dataset.json", index);
}

DatasetIndex load_dataset_index(const fs::path& dir) {
  const nlohmann::json j = read_json(dir / "dataset.json");
  DatasetIndex index;
  index.root = dir;
  try {
    if (j.at("format").get<std::string>() != "egofuture-dataset") throw Error(ErrorCode::kFormat, "not a dataset index");
    index.dt = j.at("dt").get<double>();
    index.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    for (const auto& s : j.at("sequences")) {
      DatasetIndex::Item item;
      item.scene_id = s.at("scene_id").get<std::uint32_t>();
      if (s.contains("world")) item.world = s.at("world").get<std::string>();
      item.dir = s.at("dir").get<std::string>();
      item.frames = s.at("frames").get<int>();
      index.items.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, (dir / "dataset.json").string() + ": " + e.what());
  }
  if (!(index.dt > 0.0)) throw Error(ErrorCode::kFormat, "dataset dt must be positive");
  return index;
}

LoadedSequence load_sequence(const DatasetIndex& index, std::size_t item) {
  if (item >= index.items.size()) throw Error(ErrorCode::kIndexOutOfRange, "dataset item");
  const auto& it = index.items[item];
  LoadedSequence out;
  if (!it.world.empty()) {
    try {
      out.world = std::make_shared<const World>(read_json(index.root / it.world).get<World>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, (index.root / it.world).string() + ": " + e.what());
    }
  }
  const nlohmann::json poses = read_json(index.root / it.dir / "poses.json");
  out.sequence.scene_id = it.scene_id;
  try {
    for (const auto& p : poses.at("poses")) out.sequence.poses.push_back(pose_from_json(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, (index.root / it.dir / "poses.json").string() + ": " + e.what());
  }
  if (static_cast<int>(out.sequence.poses.size()) != it.frames) {
    throw Error(ErrorCode::kFormat, "pose count disagrees with the dataset index for " + it.dir.string());
  }
  for (int f = 0; f < it.frames; ++f) {
    out.sequence.depths.push_back(read_egod(index.root / it.dir / numbered("depth_", 5, static_cast<std::uint64_t>(f), ".egod")));
  }
  return out;
}

std::vector<FrameSample> collect_samples(const DatasetIndex& index, const GridSpec& grid, int horizon,
                                         const SampleOptions& options, ExtractStats* stats) {
  std::vector<FrameSample> out;
  for (std::size_t i = 0; i < index.items.size(); ++i) {
    const LoadedSequence s = load_sequence(index, i);
    auto samples = extract_samples(s.sequence, grid, horizon, index.dt, options, stats);
    std::move(samples.begin(), samples.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace egofuture
