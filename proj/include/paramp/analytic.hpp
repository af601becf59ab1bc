#pragma once

#include <Eigen/Dense>

#include <complex>
#include <utility>

#include "paramp/model.hpp"

namespace paramp {

using Eigen::Matrix2d;
using Eigen::Matrix3cd;
using Eigen::Matrix3d;
using Eigen::Vector3d;

// ============================================================================
// Coherent (mean-field) response
// ============================================================================

/// A resonant drive applied to one membrane mode.
struct Drive {
  double force = 0.0;  // force amplitude |F| [N]
  double phase = 0.0;  // drive phase [rad]
};

struct SteadyStateAmplitudes {
  std::complex<double> a_i;  // slow complex amplitude of mode i [m]
  std::complex<double> a_j;  // slow complex amplitude of mode j [m]
};

/// Below-threshold steady state of both membrane modes under resonant drives
/// and the pump.  Each response is the sum of the directly driven term and a
/// down-converted image of the other mode's drive:
///
///   A_i = e^{i(phi_i - pi/2)} / (1 - mu^2) *
///         (chi_i |F_i| - mu sqrt(chi_i chi_j) |F_j| e^{i dphi}),
///
/// with dphi = pump.phase - phi_i - phi_j, and symmetrically for A_j.  The
/// sign of the cross term fixes the convention that dphi = 0 is the
/// deamplification point, consistent with phase_gain().  Requires mu < 1.
[[nodiscard]] SteadyStateAmplitudes steady_state_amplitudes(const SystemConfig& config,
                                                            const Drive& drive_i,
                                                            const Drive& drive_j);

/// Drive asymmetry eta = sqrt(chi_i/chi_j) |F_i|/|F_j|, i.e. the ratio of the
/// two modes' directly driven displacements in threshold-symmetric units.
/// For phase_gain() of mode j, pass the companion drive first:
/// eta_from_drives(config, F_i, F_j).
[[nodiscard]] double eta_from_drives(const SystemConfig& config, double force_i, double force_j);

/// Phase-sensitive parametric gain of the observed mode,
///   G(phi) = sqrt(1 + mu^2 eta^2 - 2 mu eta cos(phi)) / (1 - mu^2),
/// normalized to the pump-off response, where eta weighs the companion
/// mode's drive against the observed mode's own (eta_from_drives with the
/// companion force first).  Minimum (deamplification) at phi=0, maximum at
/// phi=pi.  Requires 0 <= mu < 1.
[[nodiscard]] double phase_gain(double mu, double eta, double phi);

// ============================================================================
// Pump-induced two-mode dissipation
// ============================================================================

struct LinewidthResult {
  double gamma_eff = 0.0;  // effective energy decay rate of mode j [rad/s]
  // True when the hold amplitude exceeds the critical value where the
  // ring-down pair becomes oscillatory; gamma_eff then saturates at
  // (gamma_S + gamma_j)/2.
  bool overcoupled = false;
};

/// Effective linewidth of mode j while mode i is held at displacement
/// `x_hold` (pump off).  Exact two-mode expression:
///   gamma_j(x) = (1/2) [gamma_S + gamma_j
///                       - sqrt((gamma_S - gamma_j)^2 - gamma_S^2 x^2/xi^2)],
/// where xi is mode j's up-conversion scale, xi_scale(swap_modes(config)).
[[nodiscard]] LinewidthResult nonlinear_linewidth(const SystemConfig& config, double x_hold);

/// Leading-order form of the same linewidth, valid for gamma_j << gamma_S:
///   gamma_j(x) ~= (gamma_S/2) [1 + 2 gamma_j/gamma_S - sqrt(1 - x^2/xi^2)].
[[nodiscard]] LinewidthResult nonlinear_linewidth_approx(const SystemConfig& config, double x_hold);

// ============================================================================
// Linearized fluctuations around the pumped state
// ============================================================================

/// Magnitudes of the slow mean amplitudes the fluctuations are linearized
/// around.  Zero membrane amplitudes (the squeezing configuration) decouple
/// the substrate row/column exactly.
struct MeanAmplitudes {
  double a_i = 0.0;  // |A_i| [m]
  double a_j = 0.0;  // |A_j| [m]
  double a_s = 0.0;  // |A_S| [m]

  /// Pump on per config, membranes undriven.
  static MeanAmplitudes pump_only(const SystemConfig& config) {
    return {0.0, 0.0, config.pump.amplitude};
  }
};

/// Drift matrices of the two decoupled quadrature sectors, state order
/// (mode i, mode j, substrate).  The alpha sector carries the amplified
/// quadrature pair, the beta sector the squeezed one; they differ only in the
/// sign of the pump-mediated membrane-membrane coupling.  Written in the
/// canonical pump frame (pump phase 0); see pump_frame_rotation().
struct DriftMatrices {
  Matrix3d alpha;  // [1/s]
  Matrix3d beta;   // [1/s]
  MeanAmplitudes mean_amps;
};

[[nodiscard]] DriftMatrices drift_matrices(const SystemConfig& config,
                                           const MeanAmplitudes& mean_amps);

/// White-noise intensity matrix, diag(gamma_k kB T / (m_k omega_k^2)), shared
/// by both sectors. [m^2/s]
[[nodiscard]] Matrix3d diffusion_matrix(const SystemConfig& config);

/// Largest real part over the eigenvalues of the membrane 2x2 block of the
/// alpha-sector drift: lambda = -gamma_bar/2 + (1/2) sqrt(delta^2 gamma_bar^2
/// + gamma_i gamma_j mu^2).  Crosses zero exactly at threshold (mu = 1). [1/s]
[[nodiscard]] double instability_growth_rate(const SystemConfig& config);

/// Equal-time second moments of the fluctuation quadratures. [m^2]
struct CorrelationSet {
  Matrix3d c_alpha = Matrix3d::Zero();
  Matrix3d c_beta = Matrix3d::Zero();

  /// Entries divided by x_th_k x_th_l (dimensionless).
  [[nodiscard]] std::pair<Matrix3d, Matrix3d> normalized(const SystemConfig& config) const;
};

/// Closed-form stationary correlations in the squeezing configuration
/// (membranes undriven, substrate adiabatically decoupled).  Exact for the
/// membrane block; substrate entries are thermal.  Requires mu < 1.
[[nodiscard]] CorrelationSet correlations_closed_form(const SystemConfig& config);

/// Stationary correlations from a Lyapunov solve of the full 3x3 sectors.
[[nodiscard]] CorrelationSet correlations_lyapunov(const SystemConfig& config,
                                                   const MeanAmplitudes& mean_amps);

/// Two-sided quadrature noise spectra
///   S(omega) = (1/2pi) (M + i omega I)^-1 D (M^T - i omega I)^-1
/// for both sectors; Hermitian and positive semidefinite at every omega.
/// [m^2 s]
[[nodiscard]] std::pair<Matrix3cd, Matrix3cd> spectrum(const SystemConfig& config,
                                                       const MeanAmplitudes& mean_amps,
                                                       double omega);

/// Spectra integrated over the detection band |omega| <= pi * bandwidth_hz
/// (a two-sided band of total width bandwidth_hz).  Adaptive trapezoid with
/// relative tolerance 1e-8.
[[nodiscard]] CorrelationSet band_limited_correlations(const SystemConfig& config,
                                                       const MeanAmplitudes& mean_amps,
                                                       double bandwidth_hz);

/// Spectra integrated over the full support |omega| <= 50 gamma_S; matches
/// the Lyapunov correlations up to the truncated Lorentzian tails.
[[nodiscard]] CorrelationSet integrated_correlations(const SystemConfig& config,
                                                     const MeanAmplitudes& mean_amps);

// ============================================================================
// Cross-quadrature (two-mode squeezing) statistics
// ============================================================================

/// Variances of the hybrid quadratures built from thermally normalized
/// single-mode quadratures:  x_{a,b} = (alpha_i +- alpha_j)/sqrt(2),
/// y_{a,b} = (beta_i +- beta_j)/sqrt(2).  The (x_b, y_a) pair is squeezed,
/// (x_a, y_b) amplified.
struct CrossQuadratureStats {
  double var_xa = 0.0, var_xb = 0.0, var_ya = 0.0, var_yb = 0.0;  // dimensionless
  [[nodiscard]] double sd_xa() const;
  [[nodiscard]] double sd_xb() const;
  [[nodiscard]] double sd_ya() const;
  [[nodiscard]] double sd_yb() const;
  /// Noise reduction of the squeezed x quadrature, -10 log10(var_xb). [dB]
  [[nodiscard]] double squeezing_db() const;
};

[[nodiscard]] CrossQuadratureStats cross_quadrature_stats(const SystemConfig& config,
                                                          const CorrelationSet& corr);

// ============================================================================
// Pump-frame rotation
// ============================================================================

/// The drift matrices above assume the canonical pump frame.  For a pump of
/// phase phi_S, lab-frame quadratures map onto canonical ones by rotating
/// each membrane mode's (alpha, beta) pair by theta = phi_S / 2.
[[nodiscard]] double pump_frame_rotation(const SystemConfig& config);

/// In-place rotation of one mode's quadrature pair by angle theta.
void rotate_quadratures(double& alpha, double& beta, double theta);

}  // namespace paramp
