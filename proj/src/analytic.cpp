#include "paramp/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "paramp/constants.hpp"
#include "paramp/errors.hpp"
#include "paramp/lyapunov.hpp"

namespace paramp {

namespace {

constexpr std::complex<double> imag_unit{0.0, 1.0};

void require_below_threshold(double mu, const char* what) {
  if (!(mu >= 0.0) || mu >= 1.0)
    throw ConfigError(std::string(what) + " requires a below-threshold pump (0 <= mu < 1), got mu = " +
                      std::to_string(mu));
}

}  // namespace

// ----------------------------------------------------------------------------
// Coherent response
// ----------------------------------------------------------------------------

SteadyStateAmplitudes steady_state_amplitudes(const SystemConfig& config, const Drive& drive_i,
                                              const Drive& drive_j) {
  const DerivedQuantities d = derive(config);
  require_below_threshold(d.mu, "steady_state_amplitudes");

  const double cross = d.mu * std::sqrt(d.chi_i * d.chi_j);
  const double dphi = config.pump.phase - drive_i.phase - drive_j.phase;
  const std::complex<double> image = std::polar(1.0, dphi);

  SteadyStateAmplitudes out;
  out.a_i = std::polar(1.0, drive_i.phase - 0.5 * pi) / (1.0 - d.mu * d.mu) *
            (d.chi_i * drive_i.force - cross * drive_j.force * image);
  out.a_j = std::polar(1.0, drive_j.phase - 0.5 * pi) / (1.0 - d.mu * d.mu) *
            (d.chi_j * drive_j.force - cross * drive_i.force * image);
  return out;
}

double eta_from_drives(const SystemConfig& config, double force_i, double force_j) {
  if (force_j == 0.0) throw ConfigError("eta_from_drives: force_j must be nonzero");
  return std::sqrt(susceptibility(config.mode_i) / susceptibility(config.mode_j)) * force_i /
         force_j;
}

double phase_gain(double mu, double eta, double phi) {
  require_below_threshold(mu, "phase_gain");
  const double r2 = 1.0 + mu * mu * eta * eta - 2.0 * mu * eta * std::cos(phi);
  return std::sqrt(r2) / (1.0 - mu * mu);
}

// ----------------------------------------------------------------------------
// Pump-induced dissipation
// ----------------------------------------------------------------------------

LinewidthResult nonlinear_linewidth(const SystemConfig& config, double x_hold) {
  const double gamma_j = config.mode_j.gamma;
  const double gamma_s = config.substrate.gamma;
  const double xi_j = xi_scale(swap_modes(config));
  const double ratio = x_hold / xi_j;
  const double radicand =
      (gamma_s - gamma_j) * (gamma_s - gamma_j) - gamma_s * gamma_s * ratio * ratio;

  LinewidthResult result;
  if (radicand >= 0.0) {
    result.gamma_eff = 0.5 * (gamma_s + gamma_j - std::sqrt(radicand));
  } else {
    // Past the critical amplitude the mode pair rings down as a damped
    // oscillation; both partners share the mean decay rate.
    result.gamma_eff = 0.5 * (gamma_s + gamma_j);
    result.overcoupled = true;
  }
  return result;
}

LinewidthResult nonlinear_linewidth_approx(const SystemConfig& config, double x_hold) {
  const double gamma_j = config.mode_j.gamma;
  const double gamma_s = config.substrate.gamma;
  const double xi_j = xi_scale(swap_modes(config));
  const double ratio = x_hold / xi_j;

  LinewidthResult result;
  result.overcoupled = ratio * ratio >= 1.0;
  const double root = result.overcoupled ? 0.0 : std::sqrt(1.0 - ratio * ratio);
  result.gamma_eff = 0.5 * gamma_s * (1.0 + 2.0 * gamma_j / gamma_s - root);
  return result;
}

// ----------------------------------------------------------------------------
// Linearized fluctuations
// ----------------------------------------------------------------------------

DriftMatrices drift_matrices(const SystemConfig& config, const MeanAmplitudes& mean_amps) {
  const double chi_i = susceptibility(config.mode_i);
  const double chi_j = susceptibility(config.mode_j);
  const double chi_s = susceptibility(config.substrate);
  const double gi = config.mode_i.gamma;
  const double gj = config.mode_j.gamma;
  const double gs = config.substrate.gamma;
  const double half_g = 0.5 * config.g;

  // Rate at which mode k's fluctuation is fed by its partner, per unit of
  // the third mode's mean amplitude.
  const double pump_i = gi * chi_i * half_g * mean_amps.a_s;
  const double pump_j = gj * chi_j * half_g * mean_amps.a_s;
  const double up_i = gi * chi_i * half_g * mean_amps.a_j;   // i <- S via <A_j>
  const double up_j = gj * chi_j * half_g * mean_amps.a_i;   // j <- S via <A_i>
  const double back_i = gs * chi_s * half_g * mean_amps.a_j; // S <- i via <A_j>
  const double back_j = gs * chi_s * half_g * mean_amps.a_i; // S <- j via <A_i>

  DriftMatrices out;
  out.mean_amps = mean_amps;
  out.alpha << -gi, pump_i, up_i,  //
      pump_j, -gj, -up_j,          //
      -back_i, back_j, -gs;
  out.alpha *= 0.5;
  // The squeezed sector differs only in the sign of the pump-mediated
  // membrane-membrane coupling.
  out.beta = out.alpha;
  out.beta(0, 1) = -out.alpha(0, 1);
  out.beta(1, 0) = -out.alpha(1, 0);
  return out;
}

Matrix3d diffusion_matrix(const SystemConfig& config) {
  const double kt = k_boltzmann * config.temperature;
  Matrix3d d = Matrix3d::Zero();
  d(0, 0) = config.mode_i.gamma * kt / (config.mode_i.mass * config.mode_i.omega * config.mode_i.omega);
  d(1, 1) = config.mode_j.gamma * kt / (config.mode_j.mass * config.mode_j.omega * config.mode_j.omega);
  d(2, 2) = config.substrate.gamma * kt /
            (config.substrate.mass * config.substrate.omega * config.substrate.omega);
  return d;
}

double instability_growth_rate(const SystemConfig& config) {
  const DerivedQuantities d = derive(config);
  const double discriminant = d.delta * d.delta * d.gamma_bar * d.gamma_bar +
                              config.mode_i.gamma * config.mode_j.gamma * d.mu * d.mu;
  return -0.5 * d.gamma_bar + 0.5 * std::sqrt(discriminant);
}

std::pair<Matrix3d, Matrix3d> CorrelationSet::normalized(const SystemConfig& config) const {
  Vector3d x_th;
  x_th << thermal_amplitude(config.mode_i, config.temperature),
      thermal_amplitude(config.mode_j, config.temperature),
      thermal_amplitude(config.substrate, config.temperature);
  const Matrix3d scale = (x_th * x_th.transpose()).cwiseInverse();
  return {c_alpha.cwiseProduct(scale), c_beta.cwiseProduct(scale)};
}

CorrelationSet correlations_closed_form(const SystemConfig& config) {
  const DerivedQuantities d = derive(config);
  require_below_threshold(d.mu, "correlations_closed_form");

  const double kt = k_boltzmann * config.temperature;
  const double s_i = config.mode_i.mass * config.mode_i.omega * config.mode_i.omega;
  const double s_j = config.mode_j.mass * config.mode_j.omega * config.mode_j.omega;
  const double mu2 = d.mu * d.mu;
  const double one_minus = 1.0 - mu2;
  const double w_ij = config.mode_i.omega / config.mode_j.omega;
  const double frac_i = config.mode_i.gamma / (2.0 * d.gamma_bar);
  const double frac_j = config.mode_j.gamma / (2.0 * d.gamma_bar);

  // Stationary second moments of the membrane pair with the substrate
  // eliminated; exact for arbitrary linewidth and frequency asymmetry.
  const double var_i =
      kt / s_i / one_minus * (1.0 - d.delta * mu2 + mu2 * frac_j * (w_ij - 1.0));
  const double var_j =
      kt / s_j / one_minus * (1.0 + d.delta * mu2 + mu2 * frac_i * (1.0 / w_ij - 1.0));
  const double cross = kt / std::sqrt(s_i * s_j) * d.mu * std::sqrt(1.0 - d.delta * d.delta) /
                       (2.0 * one_minus) * (std::sqrt(w_ij) + std::sqrt(1.0 / w_ij));

  const double var_s = kt / (config.substrate.mass * config.substrate.omega *
                             config.substrate.omega);

  CorrelationSet out;
  out.c_alpha << var_i, cross, 0.0,  //
      cross, var_j, 0.0,             //
      0.0, 0.0, var_s;
  out.c_beta = out.c_alpha;
  out.c_beta(0, 1) = -cross;
  out.c_beta(1, 0) = -cross;
  return out;
}

CorrelationSet correlations_lyapunov(const SystemConfig& config,
                                     const MeanAmplitudes& mean_amps) {
  const DriftMatrices drift = drift_matrices(config, mean_amps);
  const Matrix3d diffusion = diffusion_matrix(config);
  CorrelationSet out;
  out.c_alpha = solve_continuous_lyapunov(drift.alpha, diffusion);
  out.c_beta = solve_continuous_lyapunov(drift.beta, diffusion);
  return out;
}

// ----------------------------------------------------------------------------
// Spectra
// ----------------------------------------------------------------------------

namespace {

Matrix3cd spectrum_of(const Matrix3d& drift, const Matrix3d& diffusion, double omega) {
  const Matrix3cd resolvent =
      (drift.cast<std::complex<double>>() + imag_unit * omega * Matrix3cd::Identity()).inverse();
  return resolvent * diffusion.cast<std::complex<double>>() * resolvent.adjoint() / two_pi;
}

// Integral of both sectors' Re S over [0, omega_max].  Panels grow in
// octaves from a width resolving the narrowest spectral feature; each panel
// is refined by trapezoid doubling until its estimate is stable relative to
// the running total.
std::pair<Matrix3d, Matrix3d> integrate_spectra(const DriftMatrices& drift,
                                                const Matrix3d& diffusion, double omega_max,
                                                double rel_tol) {
  if (!is_hurwitz(drift.alpha) || !is_hurwitz(drift.beta))
    throw NumericError("spectrum integration requires a stable (below-threshold) drift");

  // Narrowest pole distance from the real axis for either sector.
  double narrow = std::numeric_limits<double>::max();
  for (const Matrix3d* m : {&drift.alpha, &drift.beta}) {
    const auto eigenvalues = Eigen::EigenSolver<Matrix3d>(*m, false).eigenvalues();
    for (int k = 0; k < 3; ++k) narrow = std::min(narrow, -eigenvalues(k).real());
  }

  const auto eval = [&](double omega) {
    return std::make_pair(Matrix3d(spectrum_of(drift.alpha, diffusion, omega).real()),
                          Matrix3d(spectrum_of(drift.beta, diffusion, omega).real()));
  };

  Matrix3d total_alpha = Matrix3d::Zero();
  Matrix3d total_beta = Matrix3d::Zero();
  double total_norm = 0.0;

  double lo = 0.0;
  double width = std::min(narrow / 4.0, omega_max);
  while (lo < omega_max) {
    const double hi = std::min(lo + width, omega_max);
    auto f_lo = eval(lo);
    auto f_hi = eval(hi);
    Matrix3d panel_alpha = 0.5 * (hi - lo) * (f_lo.first + f_hi.first);
    Matrix3d panel_beta = 0.5 * (hi - lo) * (f_lo.second + f_hi.second);

    for (long n = 1; n < (1L << 22); n *= 2) {
      const double h = (hi - lo) / static_cast<double>(2 * n);
      Matrix3d mid_alpha = Matrix3d::Zero();
      Matrix3d mid_beta = Matrix3d::Zero();
      for (long k = 0; k < n; ++k) {
        auto f_mid = eval(lo + (2.0 * static_cast<double>(k) + 1.0) * h);
        mid_alpha += f_mid.first;
        mid_beta += f_mid.second;
      }
      const Matrix3d refined_alpha = 0.5 * panel_alpha + h * mid_alpha;
      const Matrix3d refined_beta = 0.5 * panel_beta + h * mid_beta;
      const double change = (refined_alpha - panel_alpha).norm() + (refined_beta - panel_beta).norm();
      const double scale =
          std::max({total_norm, refined_alpha.norm() + refined_beta.norm(), 1e-300});
      panel_alpha = refined_alpha;
      panel_beta = refined_beta;
      if (change <= rel_tol * scale) break;
    }

    total_alpha += panel_alpha;
    total_beta += panel_beta;
    total_norm = total_alpha.norm() + total_beta.norm();
    lo = hi;
    width *= 2.0;
  }

  return {total_alpha, total_beta};
}

}  // namespace

std::pair<Matrix3cd, Matrix3cd> spectrum(const SystemConfig& config,
                                         const MeanAmplitudes& mean_amps, double omega) {
  const DriftMatrices drift = drift_matrices(config, mean_amps);
  const Matrix3d diffusion = diffusion_matrix(config);
  return {spectrum_of(drift.alpha, diffusion, omega),
          spectrum_of(drift.beta, diffusion, omega)};
}

CorrelationSet band_limited_correlations(const SystemConfig& config,
                                         const MeanAmplitudes& mean_amps, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth_hz must be positive");
  const DriftMatrices drift = drift_matrices(config, mean_amps);
  const Matrix3d diffusion = diffusion_matrix(config);
  // A detection band of total width bandwidth_hz sits symmetrically about
  // the carrier: |omega| <= pi * bandwidth_hz.  S(-w) = conj(S(w)), so the
  // two half-axes contribute twice the real part.
  const double omega_max = pi * bandwidth_hz;
  auto [alpha, beta] = integrate_spectra(drift, diffusion, omega_max, 1e-8);
  CorrelationSet out;
  out.c_alpha = 2.0 * alpha;
  out.c_beta = 2.0 * beta;
  return out;
}

CorrelationSet integrated_correlations(const SystemConfig& config,
                                       const MeanAmplitudes& mean_amps) {
  const DriftMatrices drift = drift_matrices(config, mean_amps);
  const Matrix3d diffusion = diffusion_matrix(config);
  const double omega_max = 50.0 * config.substrate.gamma;
  auto [alpha, beta] = integrate_spectra(drift, diffusion, omega_max, 1e-8);
  CorrelationSet out;
  out.c_alpha = 2.0 * alpha;
  out.c_beta = 2.0 * beta;
  return out;
}

// ----------------------------------------------------------------------------
// Cross quadratures
// ----------------------------------------------------------------------------

double CrossQuadratureStats::sd_xa() const { return std::sqrt(var_xa); }
double CrossQuadratureStats::sd_xb() const { return std::sqrt(var_xb); }
double CrossQuadratureStats::sd_ya() const { return std::sqrt(var_ya); }
double CrossQuadratureStats::sd_yb() const { return std::sqrt(var_yb); }

double CrossQuadratureStats::squeezing_db() const { return -10.0 * std::log10(var_xb); }

CrossQuadratureStats cross_quadrature_stats(const SystemConfig& config,
                                            const CorrelationSet& corr) {
  const auto [alpha, beta] = corr.normalized(config);
  CrossQuadratureStats out;
  out.var_xa = 0.5 * (alpha(0, 0) + alpha(1, 1) + 2.0 * alpha(0, 1));
  out.var_xb = 0.5 * (alpha(0, 0) + alpha(1, 1) - 2.0 * alpha(0, 1));
  out.var_ya = 0.5 * (beta(0, 0) + beta(1, 1) + 2.0 * beta(0, 1));
  out.var_yb = 0.5 * (beta(0, 0) + beta(1, 1) - 2.0 * beta(0, 1));
  return out;
}

// ----------------------------------------------------------------------------
// Pump frame
// ----------------------------------------------------------------------------

double pump_frame_rotation(const SystemConfig& config) { return 0.5 * config.pump.phase; }

void rotate_quadratures(double& alpha, double& beta, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double alpha_new = c * alpha + s * beta;
  beta = -s * alpha + c * beta;
  alpha = alpha_new;
}

}  // namespace paramp
