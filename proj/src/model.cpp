#include "paramp/model.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "paramp/constants.hpp"
#include "paramp/errors.hpp"

namespace paramp {

namespace {

void require_mode(std::vector<std::string>& problems, const ModeParams& mode, const char* name) {
  if (!(mode.omega > 0.0)) problems.push_back(std::string(name) + ": omega must be positive");
  if (!(mode.gamma > 0.0)) problems.push_back(std::string(name) + ": gamma must be positive");
  if (!(mode.mass > 0.0)) problems.push_back(std::string(name) + ": mass must be positive");
  // The rotating-frame equations assume well-resolved resonances.
  if (mode.omega > 0.0 && mode.gamma >= mode.omega)
    problems.push_back(std::string(name) + ": mode is not underdamped (gamma >= omega)");
}

}  // namespace

std::vector<std::string> validate(const SystemConfig& config) {
  std::vector<std::string> problems;
  require_mode(problems, config.mode_i, "mode_i");
  require_mode(problems, config.mode_j, "mode_j");
  require_mode(problems, config.substrate, "substrate");
  if (!(config.g > 0.0)) problems.push_back("coupling g must be positive");
  if (!(config.temperature > 0.0)) problems.push_back("temperature must be positive");
  if (config.pump.amplitude < 0.0) problems.push_back("pump amplitude must be non-negative");
  if (!std::isfinite(config.pump.phase)) problems.push_back("pump phase must be finite");

  // Down-conversion requires the pump to sit on the sum resonance; the
  // rotating frame is built around omega_S = omega_i + omega_j.
  const double sum = config.mode_i.omega + config.mode_j.omega;
  if (sum > 0.0 && config.substrate.omega > 0.0 &&
      std::abs(config.substrate.omega - sum) > 1e-9 * sum)
    problems.push_back("substrate.omega must equal mode_i.omega + mode_j.omega");

  if (!problems.empty()) {
    std::string message = "invalid configuration:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw ConfigError(message);
  }

  // Soft advisories: the closed forms for dissipation and squeezing assume a
  // substrate much lossier than the membranes.
  std::vector<std::string> warnings;
  const double gamma_max =
      config.mode_i.gamma > config.mode_j.gamma ? config.mode_i.gamma : config.mode_j.gamma;
  if (config.substrate.gamma < 10.0 * gamma_max)
    warnings.push_back(
        "substrate linewidth is less than 10x the membrane linewidths; "
        "adiabatic-substrate approximations will be inaccurate");
  if (normalized_pump(config) >= 1.0)
    warnings.push_back("pump is at or above threshold; steady-state formulas do not apply");
  return warnings;
}

SystemConfig swap_modes(const SystemConfig& config) {
  SystemConfig swapped = config;
  swapped.mode_i = config.mode_j;
  swapped.mode_j = config.mode_i;
  return swapped;
}

double susceptibility(const ModeParams& mode) {
  return 1.0 / (mode.mass * mode.omega * mode.gamma);
}

double thermal_amplitude(const ModeParams& mode, double temperature) {
  return std::sqrt(k_boltzmann * temperature / (mode.mass * mode.omega * mode.omega));
}

double threshold_amplitude(const SystemConfig& config) {
  return 2.0 / (config.g * std::sqrt(susceptibility(config.mode_i) *
                                     susceptibility(config.mode_j)));
}

double normalized_pump(const SystemConfig& config) {
  return config.pump.amplitude / threshold_amplitude(config);
}

double xi_scale(const SystemConfig& config) {
  const double gamma_ratio = config.substrate.gamma / config.mode_i.gamma;
  const double chi_ratio = susceptibility(config.mode_j) / susceptibility(config.substrate);
  return 0.5 * std::sqrt(gamma_ratio * chi_ratio) * threshold_amplitude(config);
}

DerivedQuantities derive(const SystemConfig& config) {
  DerivedQuantities d;
  d.chi_i = susceptibility(config.mode_i);
  d.chi_j = susceptibility(config.mode_j);
  d.chi_s = susceptibility(config.substrate);
  d.x_th_i = thermal_amplitude(config.mode_i, config.temperature);
  d.x_th_j = thermal_amplitude(config.mode_j, config.temperature);
  d.x_s_th = threshold_amplitude(config);
  d.xi = xi_scale(config);
  d.mu = normalized_pump(config);
  d.delta = (config.mode_i.gamma - config.mode_j.gamma) /
            (config.mode_i.gamma + config.mode_j.gamma);
  d.gamma_bar = 0.5 * (config.mode_i.gamma + config.mode_j.gamma);
  return d;
}

}  // namespace paramp
