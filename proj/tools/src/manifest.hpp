#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli11.hpp"

namespace egofuture::cli {

/// One run of a subcommand: its resolved options, what it read and wrote.
class RunManifest {
 public:
  RunManifest(const CLI::App& command, std::filesystem::path config_file);

  void add_input(const std::string& role, const std::filesystem::path& path);
  /// Records a written file; `path` must exist.
  void add_output(const std::filesystem::path& path, const std::filesystem::path& root);
  void add_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  nlohmann::json& report() { return report_; }

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  std::string config_file_;
  nlohmann::json inputs_ = nlohmann::json::object();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json seeds_ = nlohmann::json::object();
  nlohmann::json report_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
};

/// Resolved option values of a subcommand: flags as booleans, list options
/// as arrays, everything else as strings.
nlohmann::json resolved_options(const CLI::App& command);

/// Command line that re-executes a recorded run. `overrides` replace
/// recorded option values (keys are long option names without dashes).
std::vector<std::string> replay_arguments(const nlohmann::json& manifest, const nlohmann::json& overrides);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace egofuture::cli
