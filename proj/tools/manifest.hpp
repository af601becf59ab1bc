#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "paramp/model.hpp"

namespace paramp::tool {

/// One file produced (or consumed) by a run, with its FNV-1a content hash.
struct FileRecord {
  std::string file;  // outputs: path relative to the run's output directory
  std::uint64_t hash = 0;
};

/// Everything needed to reproduce a run bit for bit: the resolved config
/// snapshot (not the path to a config file that may change later), the
/// original command line, the seed, and the hashes of what came out.
struct RunRecord {
  std::string subcommand;
  std::vector<std::string> arguments;  // argv after the program name
  std::uint64_t seed = 0;
  SystemConfig config;
  std::vector<FileRecord> inputs;  // external files a fit consumed
  std::vector<FileRecord> outputs;
  std::string version;  // tool version that wrote the manifest
};

/// Config <-> JSON with full double round-trip fidelity (the JSON writer
/// emits shortest-round-trip number literals).
[[nodiscard]] nlohmann::json config_to_json(const SystemConfig& config);
[[nodiscard]] SystemConfig config_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, const RunRecord& record);
[[nodiscard]] RunRecord read_manifest(const std::filesystem::path& path);

/// FNV-1a hash of a file's bytes; matches what CsvWriter::finish() reports.
[[nodiscard]] std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace paramp::tool
