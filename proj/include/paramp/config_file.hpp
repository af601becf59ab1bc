#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>

#include "paramp/model.hpp"

namespace paramp {

/// Parsed INI text: section -> key -> raw value.  Supports '#' and ';'
/// comments, blank lines, and whitespace trimming; keys outside any
/// [section] are rejected.
using IniData = std::map<std::string, std::map<std::string, std::string>>;

[[nodiscard]] IniData parse_ini(std::istream& input);

/// Built-in parameter set: a pair of megahertz membrane modes on a
/// low-frequency substrate, matched to a 40 fm parametric threshold.
[[nodiscard]] SystemConfig default_config();

/// Build a SystemConfig from INI text.  Recognized layout:
///
///   [mode_i] / [mode_j] / [substrate]
///     freq_hz   = <Hz>            (substrate's may be omitted: i + j)
///     gamma_hz  = <Hz>            or  q = <quality factor>
///     mass_kg   = <kg>
///   [coupling]
///     g         = <N/m^2>         or  x_s_th_m = <threshold amplitude, m>
///   [pump]
///     amplitude_m = <m>           or  mu = <fraction of threshold>
///     phase_rad   = <rad>
///   [env]
///     temperature_k = <K>
///
/// Unset keys keep their default_config() values.  Inconsistent or unknown
/// keys raise ConfigError.
[[nodiscard]] SystemConfig config_from_ini(const IniData& ini);

/// Load and validate a config file; ConfigError on parse or physics errors.
[[nodiscard]] SystemConfig load_config(const std::filesystem::path& path);

/// Human-readable parameter summary including derived quantities, used by
/// the command-line tools' banner output.
[[nodiscard]] std::string describe(const SystemConfig& config);

}  // namespace paramp
