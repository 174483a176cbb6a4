#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bonlab::harness {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct OutputRecord {
  /// Relative to the output directory, '/'-separated.
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string config_sha256;
  unsigned threads = 1;
  /// UTC, ISO 8601 with seconds.
  std::string started_at;
  std::string finished_at;
  std::vector<OutputRecord> outputs;
};

std::string utc_timestamp();

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

/// Recomputes every listed digest under `out_dir`; returns the paths whose
/// file is missing or whose content no longer matches.
std::vector<std::string> verify_manifest(const RunManifest& manifest, const std::filesystem::path& out_dir);

}  // namespace bonlab::harness
