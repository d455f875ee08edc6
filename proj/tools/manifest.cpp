#include "manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Core>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "ssaam/error.hpp"

namespace ssaam::cli {

namespace fs = std::filesystem;

constexpr std::string_view kVersion = "0.1.0";
constexpr std::string_view kManifestName = "manifest.json";

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::InvalidArgument, "SHA-256 failed");
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["config_hash"] = config_hash;
  j["inputs"] = inputs;
  j["seed"] = seed;
  j["versions"] = versions;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

RunManifest make_manifest(std::string stage, const std::string& resolved_options, std::uint64_t seed) {
  RunManifest m;
  m.stage = std::move(stage);
  m.config_hash = sha256_hex(resolved_options);
  m.seed = seed;
  m.versions["ssaam"] = std::string(kVersion);
  m.versions["eigen"] = fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  m.versions["fmt"] = fmt::format("{}", FMT_VERSION);
  return m;
}

void add_input(RunManifest& m, const fs::path& path) { m.inputs[path.generic_string()] = sha256_file(path); }

void record_outputs(RunManifest& m, const fs::path& stage_dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(stage_dir))
    if (e.is_regular_file() && e.path().filename() != kManifestName) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) m.outputs[fs::relative(f, stage_dir).generic_string()] = sha256_file(f);
}

void write_manifest(const RunManifest& m, const fs::path& stage_dir) {
  std::ofstream out(stage_dir / kManifestName, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, (stage_dir / kManifestName).string());
  out << m.to_json();
}

}  // namespace ssaam::cli
