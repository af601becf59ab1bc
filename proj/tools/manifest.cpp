#include "manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "paramp/csv.hpp"
#include "paramp/errors.hpp"
#include "paramp/version.hpp"

namespace paramp::tool {

namespace {

nlohmann::json mode_to_json(const ModeParams& mode) {
  return {{"omega_rad_s", mode.omega}, {"gamma_rad_s", mode.gamma}, {"mass_kg", mode.mass}};
}

ModeParams mode_from_json(const nlohmann::json& j) {
  ModeParams mode;
  mode.omega = j.at("omega_rad_s").get<double>();
  mode.gamma = j.at("gamma_rad_s").get<double>();
  mode.mass = j.at("mass_kg").get<double>();
  return mode;
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

nlohmann::json files_to_json(const std::vector<FileRecord>& records) {
  nlohmann::json out = nlohmann::json::array();
  for (const FileRecord& r : records)
    out.push_back({{"file", r.file}, {"fnv1a64", hash_hex(r.hash)}});
  return out;
}

std::vector<FileRecord> files_from_json(const nlohmann::json& j) {
  std::vector<FileRecord> out;
  for (const nlohmann::json& entry : j) {
    FileRecord r;
    r.file = entry.at("file").get<std::string>();
    r.hash = std::stoull(entry.at("fnv1a64").get<std::string>(), nullptr, 16);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

nlohmann::json config_to_json(const SystemConfig& config) {
  return {
      {"mode_i", mode_to_json(config.mode_i)},
      {"mode_j", mode_to_json(config.mode_j)},
      {"substrate", mode_to_json(config.substrate)},
      {"g_n_per_m2", config.g},
      {"pump", {{"amplitude_m", config.pump.amplitude}, {"phase_rad", config.pump.phase}}},
      {"temperature_k", config.temperature},
  };
}

SystemConfig config_from_json(const nlohmann::json& j) {
  SystemConfig config;
  config.mode_i = mode_from_json(j.at("mode_i"));
  config.mode_j = mode_from_json(j.at("mode_j"));
  config.substrate = mode_from_json(j.at("substrate"));
  config.g = j.at("g_n_per_m2").get<double>();
  config.pump.amplitude = j.at("pump").at("amplitude_m").get<double>();
  config.pump.phase = j.at("pump").at("phase_rad").get<double>();
  config.temperature = j.at("temperature_k").get<double>();
  validate(config);
  return config;
}

void write_manifest(const std::filesystem::path& path, const RunRecord& record) {
  const nlohmann::json j{
      {"tool", "paramp"},
      {"version", version_string},
      {"created_utc", utc_timestamp()},
      {"subcommand", record.subcommand},
      {"arguments", record.arguments},
      {"seed", record.seed},
      {"config", config_to_json(record.config)},
      {"inputs", files_to_json(record.inputs)},
      {"outputs", files_to_json(record.outputs)},
  };
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw ConfigError("write to " + path.string() + " failed");
}

RunRecord read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    RunRecord record;
    record.subcommand = j.at("subcommand").get<std::string>();
    record.arguments = j.at("arguments").get<std::vector<std::string>>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.config = config_from_json(j.at("config"));
    record.inputs = files_from_json(j.at("inputs"));
    record.outputs = files_from_json(j.at("outputs"));
    record.version = j.at("version").get<std::string>();
    return record;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": malformed manifest: " + e.what());
  }
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64(buffer.str());
}

}  // namespace paramp::tool
