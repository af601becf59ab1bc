#include "paramp/config_file.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string_view>
#include <system_error>

#include "paramp/constants.hpp"
#include "paramp/errors.hpp"

namespace paramp {

namespace {

std::string trim(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return std::string(text.substr(begin, end - begin + 1));
}

double parse_number(const std::string& section, const std::string& key, const std::string& raw) {
  std::string_view view = raw;
  if (!view.empty() && view.front() == '+') view.remove_prefix(1);
  double value = 0.0;
  const auto [parsed_to, ec] = std::from_chars(view.data(), view.data() + view.size(), value);
  if (ec != std::errc() || parsed_to != view.data() + view.size())
    throw ConfigError("[" + section + "] " + key + ": not a number: '" + raw + "'");
  return value;
}

}  // namespace

IniData parse_ini(std::istream& input) {
  IniData data;
  std::string line, section;
  int line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    const auto where = [&] { return "config line " + std::to_string(line_no) + ": "; };

    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where() + "empty section name");
      data[section];
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where() + "expected 'key = value'");
    if (section.empty()) throw ConfigError(where() + "key '" + key + "' outside any [section]");
    if (!data[section].emplace(key, value).second)
      throw ConfigError(where() + "duplicate key '" + key + "' in [" + section + "]");
  }
  return data;
}

SystemConfig default_config() {
  SystemConfig config;
  config.mode_i.omega = two_pi * 1.5e6;
  config.mode_i.gamma = two_pi * 0.1;
  config.mode_i.mass = 1.5e-9;
  config.mode_j.omega = two_pi * 1.6e6;
  config.mode_j.gamma = two_pi * 0.1;
  config.mode_j.mass = 1.5e-9;
  config.substrate.omega = two_pi * 3.1e6;
  config.substrate.gamma = config.substrate.omega / 1.0e4;  // quality factor 1e4
  config.substrate.mass = 1.0e-4;
  config.temperature = 295.0;
  // Coupling matched to a 40 fm parametric threshold.
  const double chi_geom =
      std::sqrt(susceptibility(config.mode_i) * susceptibility(config.mode_j));
  config.g = 2.0 / (40e-15 * chi_geom);
  return config;
}

SystemConfig config_from_ini(const IniData& ini) {
  static const std::map<std::string, std::set<std::string>> known = {
      {"mode_i", {"freq_hz", "gamma_hz", "q", "mass_kg"}},
      {"mode_j", {"freq_hz", "gamma_hz", "q", "mass_kg"}},
      {"substrate", {"freq_hz", "gamma_hz", "q", "mass_kg"}},
      {"coupling", {"g", "x_s_th_m"}},
      {"pump", {"amplitude_m", "mu", "phase_rad"}},
      {"env", {"temperature_k"}},
  };
  for (const auto& [section, keys] : ini) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : keys)
      if (!it->second.contains(key))
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }

  const auto get = [&ini](const char* section, const char* key) -> std::optional<double> {
    const auto s = ini.find(section);
    if (s == ini.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return parse_number(section, key, k->second);
  };

  SystemConfig config = default_config();

  // Linewidth from gamma_hz or quality factor, against the mode's final
  // frequency.  Both keys together are accepted only when they agree.
  const auto apply_gamma = [&](const char* section, ModeParams& mode) {
    const auto gamma_hz = get(section, "gamma_hz");
    const auto q = get(section, "q");
    if (gamma_hz && q) {
      const double from_q = mode.omega / *q;
      if (std::abs(two_pi * *gamma_hz - from_q) > 1e-9 * from_q)
        throw ConfigError(std::string("[") + section +
                          "]: gamma_hz and q disagree; specify one");
      mode.gamma = two_pi * *gamma_hz;
    } else if (gamma_hz) {
      mode.gamma = two_pi * *gamma_hz;
    } else if (q) {
      if (!(*q > 0.0)) throw ConfigError(std::string("[") + section + "]: q must be positive");
      mode.gamma = mode.omega / *q;
    }
  };

  const std::pair<const char*, ModeParams*> membranes[] = {{"mode_i", &config.mode_i},
                                                           {"mode_j", &config.mode_j}};
  for (const auto& [name, mode] : membranes) {
    if (const auto f = get(name, "freq_hz")) mode->omega = two_pi * *f;
    if (const auto m = get(name, "mass_kg")) mode->mass = *m;
    apply_gamma(name, *mode);
  }

  // The substrate rides the sum resonance unless a frequency is forced
  // explicitly (validation then checks it).
  if (const auto f = get("substrate", "freq_hz"))
    config.substrate.omega = two_pi * *f;
  else
    config.substrate.omega = config.mode_i.omega + config.mode_j.omega;
  if (const auto m = get("substrate", "mass_kg")) config.substrate.mass = *m;
  apply_gamma("substrate", config.substrate);

  const auto g = get("coupling", "g");
  const auto x_s_th = get("coupling", "x_s_th_m");
  if (g && x_s_th) throw ConfigError("[coupling]: g and x_s_th_m are mutually exclusive");
  if (g) config.g = *g;
  if (x_s_th) {
    if (!(*x_s_th > 0.0)) throw ConfigError("[coupling]: x_s_th_m must be positive");
    config.g = 2.0 / (*x_s_th * std::sqrt(susceptibility(config.mode_i) *
                                          susceptibility(config.mode_j)));
  }

  const auto amplitude = get("pump", "amplitude_m");
  const auto mu = get("pump", "mu");
  if (amplitude && mu) throw ConfigError("[pump]: amplitude_m and mu are mutually exclusive");
  if (amplitude) config.pump.amplitude = *amplitude;
  if (mu) {
    if (*mu < 0.0) throw ConfigError("[pump]: mu must be non-negative");
    config.pump.amplitude = *mu * threshold_amplitude(config);
  }
  if (const auto phase = get("pump", "phase_rad")) config.pump.phase = *phase;

  if (const auto t = get("env", "temperature_k")) config.temperature = *t;

  validate(config);
  return config;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file: " + path.string());
  const IniData ini = parse_ini(file);
  try {
    return config_from_ini(ini);
  } catch (const ConfigError& error) {
    throw ConfigError(path.string() + ": " + error.what());
  }
}

std::string describe(const SystemConfig& config) {
  const DerivedQuantities d = derive(config);
  char buffer[256];
  std::string out;
  const auto mode_line = [&](const char* name, const ModeParams& mode) {
    std::snprintf(buffer, sizeof(buffer),
                  "%-10s f = %.6g Hz, gamma/2pi = %.6g Hz, mass = %.6g kg\n", name,
                  mode.omega / two_pi, mode.gamma / two_pi, mode.mass);
    out += buffer;
  };
  mode_line("mode_i", config.mode_i);
  mode_line("mode_j", config.mode_j);
  mode_line("substrate", config.substrate);
  std::snprintf(buffer, sizeof(buffer),
                "coupling   g = %.6g N/m^2, threshold X_S,th = %.6g m\n", config.g, d.x_s_th);
  out += buffer;
  std::snprintf(buffer, sizeof(buffer),
                "pump       X_S = %.6g m (mu = %.6g), phase = %.6g rad\n",
                config.pump.amplitude, d.mu, config.pump.phase);
  out += buffer;
  std::snprintf(buffer, sizeof(buffer),
                "bath       T = %.6g K, x_th_i = %.6g m, x_th_j = %.6g m\n", config.temperature,
                d.x_th_i, d.x_th_j);
  out += buffer;
  return out;
}

}  // namespace paramp
