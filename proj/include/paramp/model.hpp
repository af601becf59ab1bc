#pragma once

#include <string>
#include <vector>

namespace paramp {

// ============================================================================
// System description
//
// Two membrane modes (i, j) couple to one substrate mode (S) through a
// three-wave interaction energy -g * X_S * x_i * x_j.  The substrate is
// pumped at the sum frequency, omega_S = omega_i + omega_j, so a pump phonon
// down-converts into one phonon of each membrane mode.  All dynamics in this
// library live in the rotating (slow-amplitude) frame of that resonance.
// ============================================================================

struct ModeParams {
  double omega = 0.0;  // angular resonance frequency [rad/s]
  double gamma = 0.0;  // energy decay rate (FWHM linewidth) [rad/s]
  double mass = 0.0;   // effective mass [kg]
};

struct PumpParams {
  double amplitude = 0.0;  // substrate displacement amplitude X_S [m]
  double phase = 0.0;      // pump phase relative to the drive-phase sum [rad]
};

struct SystemConfig {
  ModeParams mode_i;
  ModeParams mode_j;
  ModeParams substrate;    // substrate.omega must equal mode_i.omega + mode_j.omega
  double g = 0.0;          // three-wave coupling coefficient [N/m^2]
  PumpParams pump;
  double temperature = 295.0;  // bath temperature [K]
};

/// Checks physical invariants (positive parameters, underdamped modes,
/// resonant pump) and throws ConfigError on violation.  Returns soft
/// warnings, e.g. when the substrate is not much lossier than the membranes.
std::vector<std::string> validate(const SystemConfig& config);

/// Returns a copy of `config` with the two membrane modes exchanged.
[[nodiscard]] SystemConfig swap_modes(const SystemConfig& config);

// ============================================================================
// Closed-form single-mode and threshold quantities
// ============================================================================

/// On-resonance mechanical susceptibility chi = 1/(m * omega * gamma) [m/N].
[[nodiscard]] double susceptibility(const ModeParams& mode);

/// Thermal RMS amplitude x_th = sqrt(kB T / (m omega^2)) [m].
[[nodiscard]] double thermal_amplitude(const ModeParams& mode, double temperature);

/// Parametric instability threshold of the pump displacement,
/// X_S_th = 2 / (g sqrt(chi_i chi_j)) [m].
[[nodiscard]] double threshold_amplitude(const SystemConfig& config);

/// Pump amplitude normalized to threshold, mu = X_S / X_S_th (dimensionless).
[[nodiscard]] double normalized_pump(const SystemConfig& config);

/// Amplitude scale of pump up-conversion for mode i: driving mode j to a
/// displacement of order xi makes mode i's effective linewidth approach the
/// substrate's.  xi = (1/2) sqrt(gamma_S/gamma_i) sqrt(chi_j/chi_S) X_S_th [m].
/// The companion scale for mode j is xi_scale(swap_modes(config)).
[[nodiscard]] double xi_scale(const SystemConfig& config);

struct DerivedQuantities {
  double chi_i = 0.0;      // [m/N]
  double chi_j = 0.0;      // [m/N]
  double chi_s = 0.0;      // [m/N]
  double x_th_i = 0.0;     // thermal amplitude, mode i [m]
  double x_th_j = 0.0;     // thermal amplitude, mode j [m]
  double x_s_th = 0.0;     // pump threshold amplitude [m]
  double xi = 0.0;         // up-conversion scale for mode i [m]
  double mu = 0.0;         // normalized pump (dimensionless)
  double delta = 0.0;      // linewidth asymmetry (gamma_i-gamma_j)/(gamma_i+gamma_j)
  double gamma_bar = 0.0;  // mean membrane linewidth (gamma_i+gamma_j)/2 [rad/s]
};

/// Evaluates every derived quantity for a validated config.
[[nodiscard]] DerivedQuantities derive(const SystemConfig& config);

}  // namespace paramp
