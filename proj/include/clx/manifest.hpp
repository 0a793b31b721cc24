#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "clx/common.hpp"

namespace clx {

// Provenance record written once per run directory. Timestamps live here and
// only here; run logs and checkpoints stay byte-reproducible.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;
  std::map<std::string, std::string> input_hashes;  // path -> fnv1a64
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> outputs;
  std::string created_at;

  static std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  void add_input(const std::string& path) { input_hashes[path] = hash_file(path); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["config_hash"] = config_hash;
    j["inputs"] = input_hashes;
    j["seeds"] = seeds;
    j["outputs"] = outputs;
    j["created_at"] = created_at;
    return j;
  }

  void save(const std::string& dir) const {
    write_file((std::filesystem::path(dir) / "manifest.json").string(),
               to_json().dump(2) + "\n");
  }
};

// Creates the run directory; refuses to reuse one that already holds a
// manifest (one manifest per artifact directory).
inline void prepare_run_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  if (fs::exists(fs::path(dir) / "manifest.json")) {
    throw ValidationError("output directory already contains a run: " + dir);
  }
}

}  // namespace clx
