#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

#include "paramp/analytic.hpp"
#include "paramp/model.hpp"
#include "paramp/sde.hpp"

namespace paramp {

// ============================================================================
// Ring-down linewidth extraction
// ============================================================================

struct RingdownFit {
  double gamma_eff = 0.0;      // energy decay rate, -2 x log-envelope slope [rad/s]
  double rms_residual = 0.0;   // log-envelope misfit of the selected window
  std::size_t window_begin = 0;  // sample range the estimate came from
  std::size_t window_end = 0;    // (half-open)
};

/// Fit an exponential envelope to a ring-down record.  Works on the
/// log-envelope with sliding windows spanning one e-fold of decay (at least
/// 10 samples each) and keeps the window with the smallest least-squares
/// residual, which rejects the ringing segments that appear when the decay
/// is not a pure exponential.  `floor_fraction` is the record's noise floor
/// relative to its peak; samples below it are discarded.  The default suits
/// lab data; pass 0 for noise-free simulated records, whose only floor is
/// the smallest normal double -- hybridized (overcoupled) ring-downs beat
/// against the substrate so slowly that their clean exponential stretch can
/// sit hundreds of decay e-folds into the record.  Throws NumericError when
/// no usable window exists (too few samples or no net decay).
[[nodiscard]] RingdownFit fit_ringdown(const Eigen::VectorXd& times,
                                       const Eigen::VectorXd& amplitudes,
                                       double floor_fraction = 1e-12);

// ============================================================================
// Gain-curve fitting
// ============================================================================

struct GainFit {
  double mu = 0.0;            // normalized pump amplitude
  double eta = 0.0;           // drive asymmetry
  double phase_offset = 0.0;  // nuisance phase origin (zero unless fitted)
  double mu_se = 0.0;         // asymptotic standard errors
  double eta_se = 0.0;        // (zero when eta was held fixed)
  double phase_offset_se = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Least-squares fit of measured phase-dependent gain to
///   G(phi) = sqrt(1 + mu^2 eta^2 - 2 mu eta cos(phi - phi0)) / (1 - mu^2)
/// by Levenberg-Marquardt with analytic derivatives.  When `fixed_eta` is
/// given only mu is adjusted, matching the calibrated-drive protocol; this
/// is what makes small pump amplitudes identifiable from noisy curves.
/// The phase origin phi0 is pinned to zero unless `fit_phase_offset` asks
/// for it as a nuisance parameter (lab data with an uncalibrated pump
/// phase).  Starting values come from the closed-form relations at phi = 0
/// and pi: G(0)+G(pi) = 2/(1-mu^2) and G(pi)-G(0) = 2 mu eta/(1-mu^2).
[[nodiscard]] GainFit fit_gain_curve(const Eigen::VectorXd& phases, const Eigen::VectorXd& gains,
                                     std::optional<double> fixed_eta = std::nullopt,
                                     bool fit_phase_offset = false);

// ============================================================================
// Dissipation-curve fitting
// ============================================================================

struct DissipationFit {
  double xi = 0.0;       // saturation drive amplitude [m]
  double gamma_s = 0.0;  // substrate linewidth [rad/s]
  double xi_se = 0.0;
  double gamma_s_se = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Fit quality-factor ratios Q(x)/Q(0) measured against drive amplitude to
/// the hybridized-linewidth model gamma_j / gamma_eff(x; gamma_s, xi), where
/// gamma_eff is the exact two-pole expression used by nonlinear_linewidth().
/// The bare membrane linewidth `gamma_j` is assumed known (it is the x -> 0
/// limit of the same data set).  Starting values: gamma_s from the saturated
/// ratio 2 gamma_j/(gamma_s + gamma_j), xi from the half-damping crossing
/// x ~ 2 xi sqrt(gamma_j/gamma_s).
[[nodiscard]] DissipationFit fit_dissipation_curve(const Eigen::VectorXd& drive_amplitudes,
                                                   const Eigen::VectorXd& q_ratios,
                                                   double gamma_j);

// ============================================================================
// Threshold-vs-saturation regression
// ============================================================================

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares of saturation amplitudes xi against threshold pump
/// amplitudes X_th across devices (e.g. a coupling-strength sweep).  Both
/// scale as 1/g, so the line passes through the origin with slope
/// (1/2) sqrt(gamma_s/gamma_i) sqrt(chi_j/chi_s); an intercept inconsistent
/// with zero flags a calibration problem.  Needs at least three pairs.
[[nodiscard]] LinearFit xi_vs_threshold_regression(const Eigen::VectorXd& thresholds,
                                                   const Eigen::VectorXd& xis);

// ============================================================================
// Quadrature histograms
// ============================================================================

struct Histogram2D {
  Eigen::VectorXd edges_q1, edges_q2;  // uniform bin edges, symmetric about 0
  Eigen::MatrixXd counts;              // counts(i, j) = bin i along q1, j along q2
  std::size_t total = 0;               // all samples land in range, so == rows
  double std_sum = 0.0;                // sample std of (q1 + q2)/sqrt(2)
  double std_diff = 0.0;               // sample std of (q1 - q2)/sqrt(2)
};

/// Bin paired quadrature samples (rows of an n x 2 matrix, already
/// normalized by their thermal amplitudes) into a square histogram whose
/// range covers every sample symmetrically, and report the spreads along the
/// diagonal axes where two-mode squeezing shows up.  Requires at least 1000
/// samples; fewer cannot resolve the distribution shape the histogram is for.
[[nodiscard]] Histogram2D quadrature_histogram(const Eigen::MatrixXd& samples, int bins_per_axis);

// ============================================================================
// Ensemble reductions
// ============================================================================

struct ValueWithError {
  double value = 0.0;
  double se = 0.0;
};

/// Mean and standard error of a linear functional w . m of the packed
/// per-trajectory moment vectors, estimated across trajectories.
[[nodiscard]] ValueWithError moment_functional(const EnsembleMoments& moments,
                                               const Eigen::VectorXd& weights);

/// Variance (with standard error) of one state component, from packed
/// moments; means vanish for the undriven fluctuation systems, so this is
/// the plain second moment.
[[nodiscard]] ValueWithError component_variance(const EnsembleMoments& moments, int index);

/// Cross-quadrature variances from a simulated ensemble, normalized by the
/// thermal amplitudes so they compare directly with cross_quadrature_stats().
struct MeasuredCrossQuadratures {
  ValueWithError var_xa, var_xb, var_ya, var_yb;
};

[[nodiscard]] MeasuredCrossQuadratures measure_cross_quadratures(const SystemConfig& config,
                                                                 const EnsembleMoments& moments,
                                                                 const QuadratureIndices& idx);

}  // namespace paramp
