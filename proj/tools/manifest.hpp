#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace ssaam::cli {

std::string sha256_hex(std::string_view bytes);
/// Throws MissingFile when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Everything needed to reproduce one stage's outputs. No timestamps, so a
/// rerun with the same inputs writes the same manifest.
struct RunManifest {
  std::string stage;
  std::string config_hash;                      // SHA-256 of the resolved options
  std::map<std::string, std::string> inputs;    // path -> SHA-256
  std::uint64_t seed = 0;
  std::map<std::string, std::string> versions;  // component -> version
  std::map<std::string, std::string> outputs;   // path relative to the stage dir -> SHA-256

  std::string to_json() const;
};

RunManifest make_manifest(std::string stage, const std::string& resolved_options, std::uint64_t seed);
void add_input(RunManifest& m, const std::filesystem::path& path);
/// Records every regular file under `stage_dir` except the manifest itself.
void record_outputs(RunManifest& m, const std::filesystem::path& stage_dir);
void write_manifest(const RunManifest& m, const std::filesystem::path& stage_dir);

}  // namespace ssaam::cli
