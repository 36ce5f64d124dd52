#include "manifest.hpp"

#include <fstream>
#include <sstream>

#include "egofuture/error.hpp"

namespace fs = std::filesystem;

namespace egofuture::cli {

namespace {

bool is_flag(const CLI::Option& o) { return o.get_items_expected_max() == 0; }

bool is_list(const CLI::Option& o) { return o.get_expected_max() > 1; }

std::string long_name(const CLI::Option& o) {
  const auto& names = o.get_lnames();
  return names.empty() ? o.get_single_name() : names.front();
}

std::vector<std::string> split_default_list(std::string s) {
  if (s.size() >= 2 && (s.front() == '[' || s.front() == '{')) s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

nlohmann::json resolved_options(const CLI::App& command) {
  nlohmann::json out = nlohmann::json::object();
  for (const CLI::Option* o : command.get_options()) {
    const std::string name = long_name(*o);
    if (name == "help" || name == "config") continue;
    if (is_flag(*o)) {
      out[name] = o->count() > 0 && o->as<bool>();
    } else if (is_list(*o)) {
      out[name] = o->count() > 0 ? o->results() : split_default_list(o->get_default_str());
    } else {
      out[name] = o->count() > 0 ? o->results().back() : o->get_default_str();
    }
  }
  return out;
}

RunManifest::RunManifest(const CLI::App& command, fs::path config_file)
    : command_(command.get_name()),
      config_(resolved_options(command)),
      config_file_(config_file.string()),
      start_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::string& role, const fs::path& path) { inputs_[role] = path.string(); }

void RunManifest::add_output(const fs::path& path, const fs::path& root) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "output missing: " + path.string());
  outputs_.push_back({{"path", fs::relative(path, root).generic_string()}, {"bytes", size}});
}

nlohmann::json RunManifest::to_json() const {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return {{"format", "egofuture-manifest"},
          {"version", 1},
          {"tool", "egofuture"},
          {"tool_version", EGOFUTURE_VERSION},
          {"command", command_},
          {"config", config_},
          {"config_file", config_file_},
          {"inputs", inputs_},
          {"outputs", outputs_},
          {"seeds", seeds_},
          {"report", report_},
          {"wall_time_seconds", wall}};
}

void RunManifest::write(const fs::path& path) const { write_json_file(path, to_json()); }

std::vector<std::string> replay_arguments(const nlohmann::json& manifest, const nlohmann::json& overrides) {
  if (!manifest.is_object() || manifest.value("format", "") != "egofuture-manifest") {
    throw Error(ErrorCode::kFormat, "not an egofuture manifest");
  }
  std::vector<std::string> args{manifest.at("command").get<std::string>()};
  nlohmann::json config = manifest.at("config");
  for (const auto& [key, value] : overrides.items()) config[key] = value;
  for (const auto& [key, value] : config.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_array()) {
      if (value.empty()) continue;
      args.push_back("--" + key);
      for (const auto& v : value) args.push_back(v.get<std::string>());
    } else {
      const std::string s = value.get<std::string>();
      if (s.empty()) continue;
      args.push_back("--" + key);
      args.push_back(s);
    }
  }
  return args;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace egofuture::cli
