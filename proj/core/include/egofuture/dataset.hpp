#pragma once

// Synthetic datasets: seeded generation of (world, agent, rendered depth)
// sequences and their directory layout
//
//   dataset.json
//   worlds/world_NNNN.json
//   seq_NNNN/depth_NNNNN.egod, seq_NNNN/poses.json

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "egofuture/database.hpp"
#include "egofuture/synthworld.hpp"

namespace egofuture {

struct SynthConfig {
  std::uint64_t seed = 1;
  int worlds = 10;
  int agents_per_world = 1;
  /// Templates cycled over world indices; empty means every template.
  std::vector<WorldTemplate> templates;
  /// Frames per sequence; 0 keeps the natural tour length.
  int frames = 0;
  CameraIntrinsics intrinsics;
  AgentParams agent;
  WorldParams world;
  RenderOptions render;

  void validate() const;
  int sequence_count() const { return worlds * agents_per_world; }
  WorldTemplate template_for(int world_index) const;
};

struct SynthSequence {
  std::uint32_t scene_id = 0;
  std::shared_ptr<const World> world;
  AgentPath path;
  Sequence sequence;  // depths empty unless rendered
};

/// Sequence `index` (scene id) of the configured dataset. Worlds draw from
/// the "world" stream, tours and motion from "agent", depth noise from
/// "noise"; all are keyed by index so sequences are independent.
SynthSequence synthesize_sequence(const SynthConfig& config, int index, bool render = true);

nlohmann::json pose_to_json(const CameraPose& pose);
CameraPose pose_from_json(const nlohmann::json& j);

/// Frame samples of every configured sequence, synthesized in memory one
/// sequence at a time.
std::vector<FrameSample> synthesize_samples(const SynthConfig& config, const GridSpec& grid, int horizon,
                                            const SampleOptions& options = {}, ExtractStats* stats = nullptr);

void write_dataset(const SynthConfig& config, const std::filesystem::path& dir);

struct DatasetIndex {
  struct Item {
    std::uint32_t scene_id = 0;
    std::filesystem::path world;  // relative to root; may be empty
    std::filesystem::path dir;    // relative to root
    int frames = 0;
  };
  std::filesystem::path root;
  double dt = 0.5;
  CameraIntrinsics intrinsics;
  std::vector<Item> items;
};

DatasetIndex load_dataset_index(const std::filesystem::path& dir);

struct LoadedSequence {
  std::shared_ptr<const World> world;  // null when the dataset carries none
  Sequence sequence;
};

LoadedSequence load_sequence(const DatasetIndex& index, std::size_t item);

/// Frame samples of every sequence, loaded one sequence at a time.
std::vector<FrameSample> collect_samples(const DatasetIndex& index, const GridSpec& grid, int horizon,
                                         const SampleOptions& options = {}, ExtractStats* stats = nullptr);

}  // namespace egofuture
