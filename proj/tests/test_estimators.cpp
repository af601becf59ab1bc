#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "paramp/analytic.hpp"
#include "paramp/config_file.hpp"
#include "paramp/constants.hpp"
#include "paramp/errors.hpp"
#include "paramp/estimators.hpp"
#include "paramp/model.hpp"
#include "paramp/rng.hpp"
#include "paramp/sde.hpp"

using namespace paramp;

namespace {

bool close(double value, double reference, double tol = 1e-12) {
  return std::abs(value - reference) <= tol * std::abs(reference);
}

Eigen::VectorXd linspace(double a, double b, int n) {
  return Eigen::VectorXd::LinSpaced(n, a, b);
}

}  // namespace

TEST_CASE("ring-down fit recovers the rate of a clean exponential") {
  const double gamma = 5.0;  // energy rate; amplitude decays at gamma/2
  const Eigen::VectorXd t = linspace(0.0, 4.0, 500);
  const Eigen::VectorXd a = (-0.5 * gamma * t.array()).exp() * 1e-12;

  const RingdownFit fit = fit_ringdown(t, a);
  CHECK(close(fit.gamma_eff, gamma, 1e-10));
  CHECK(fit.rms_residual < 1e-12);
  CHECK(fit.window_end > fit.window_begin);
}

TEST_CASE("ring-down fit tolerates multiplicative noise") {
  const double gamma = 5.0;
  const Eigen::VectorXd t = linspace(0.0, 4.0, 2000);
  GaussianStream noise(21, 0);
  Eigen::VectorXd a(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k)
    a(k) = 1e-12 * std::exp(-0.5 * gamma * t(k)) * (1.0 + 0.02 * noise.next());
  CHECK(std::abs(fit_ringdown(t, a).gamma_eff / gamma - 1.0) < 0.02);
}

TEST_CASE("noise floor handling bounds which samples enter the fit") {
  // Exponential that hits a detection floor at 1e-6 of the peak.
  const double gamma = 8.0;
  const Eigen::VectorXd t = linspace(0.0, 6.0, 3000);
  Eigen::VectorXd a(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k)
    a(k) = std::max(std::exp(-0.5 * gamma * t(k)), 1e-6);

  // Cutting at the floor or keeping it both work: windows inside the
  // plateau never span an e-fold of decay, so they cannot be selected.
  CHECK(close(fit_ringdown(t, a, 1e-5).gamma_eff, gamma, 1e-6));
  CHECK(close(fit_ringdown(t, a).gamma_eff, gamma, 1e-6));

  CHECK_THROWS_AS((void)fit_ringdown(t, a, -0.1), ConfigError);
  CHECK_THROWS_AS((void)fit_ringdown(t, a, 1.0), ConfigError);
}

TEST_CASE("ring-down fit handles a beating (hybridized) decay with zero floor") {
  // Envelope e^{-at} |cos(W t)| with decay much faster than the beat, as in
  // an overcoupled ring-down: the log-slope equals -a except near the beat
  // nodes, and the minimum-residual window lands on a clean stretch on its
  // own.  Those stretches sit far below any relative noise cut, hence
  // floor 0.
  const double a_rate = 80.0, beat = 2.0;
  const Eigen::VectorXd t = linspace(0.0, 3.2, 6400);
  Eigen::VectorXd amps(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k)
    amps(k) = std::exp(-a_rate * t(k)) * std::abs(std::cos(beat * t(k)));

  const RingdownFit fit = fit_ringdown(t, amps, 0.0);
  CHECK(std::abs(fit.gamma_eff / (2.0 * a_rate) - 1.0) < 1e-3);
}

TEST_CASE("ring-down fit refuses records without a decaying stretch") {
  const Eigen::VectorXd t = linspace(0.0, 1.0, 100);
  CHECK_THROWS_AS((void)fit_ringdown(t, Eigen::VectorXd::Zero(100)), NumericError);
  CHECK_THROWS_AS((void)fit_ringdown(t, Eigen::VectorXd::Ones(100)), NumericError);
  const Eigen::VectorXd growing = (0.5 * t.array()).exp();
  CHECK_THROWS_AS((void)fit_ringdown(t, growing), NumericError);
  CHECK_THROWS_AS((void)fit_ringdown(t.head(5), growing.head(5)), NumericError);
  CHECK_THROWS_AS((void)fit_ringdown(t, growing.head(5)), ConfigError);
}

TEST_CASE("gain fit round-trips noise-free curves") {
  const double mu = 0.042, eta = 11.80337781701308;
  const int n = 24;
  Eigen::VectorXd phases(n), gains(n);
  for (int k = 0; k < n; ++k) {
    phases(k) = two_pi * k / n;
    gains(k) = phase_gain(mu, eta, phases(k));
  }

  const GainFit free_fit = fit_gain_curve(phases, gains);
  CHECK(free_fit.converged);
  CHECK(close(free_fit.mu, mu, 1e-8));
  CHECK(close(free_fit.eta, eta, 1e-8));
  CHECK(free_fit.phase_offset == 0.0);
  CHECK(free_fit.rms_residual < 1e-10);

  const GainFit fixed_fit = fit_gain_curve(phases, gains, eta);
  CHECK(fixed_fit.converged);
  CHECK(close(fixed_fit.mu, mu, 1e-10));
  CHECK(fixed_fit.eta == eta);
  CHECK(fixed_fit.eta_se == 0.0);
}

TEST_CASE("gain fit recovers an unknown phase origin as a nuisance parameter") {
  const double mu = 0.06, eta = 9.0, offset = 0.3;
  const int n = 30;
  Eigen::VectorXd phases(n), gains(n);
  for (int k = 0; k < n; ++k) {
    phases(k) = two_pi * k / n;
    gains(k) = phase_gain(mu, eta, phases(k) - offset);
  }

  const GainFit fit = fit_gain_curve(phases, gains, std::nullopt, true);
  CHECK(fit.converged);
  CHECK(close(fit.mu, mu, 1e-6));
  CHECK(close(fit.eta, eta, 1e-6));
  CHECK(close(fit.phase_offset, offset, 1e-6));
  CHECK(fit.rms_residual < 1e-8);
}

TEST_CASE("gain fit with calibrated eta survives measurement noise") {
  const double mu = 0.042, eta = 11.80337781701308;
  const int n = 20;
  Eigen::VectorXd phases(n);
  for (int k = 0; k < n; ++k) phases(k) = two_pi * k / n;

  int recovered = 0;
  const int draws = 20;
  for (int d = 0; d < draws; ++d) {
    GaussianStream noise(100, static_cast<std::uint64_t>(d));
    Eigen::VectorXd gains(n);
    for (int k = 0; k < n; ++k)
      gains(k) = phase_gain(mu, eta, phases(k)) * (1.0 + 0.02 * noise.next());
    const GainFit fit = fit_gain_curve(phases, gains, eta);
    if (fit.converged && std::abs(fit.mu / mu - 1.0) < 0.05) ++recovered;
  }
  CHECK(recovered >= 18);
}

TEST_CASE("gain fit rejects mismatched or underdetermined input") {
  Eigen::VectorXd phases = linspace(0.0, two_pi, 8);
  CHECK_THROWS_AS((void)fit_gain_curve(phases, Eigen::VectorXd::Ones(5)), ConfigError);
  CHECK_THROWS_AS((void)fit_gain_curve(phases.head(2), Eigen::VectorXd::Ones(2)), ConfigError);
}

TEST_CASE("dissipation fit recovers the saturation scale and substrate linewidth") {
  const SystemConfig config = default_config();
  const double gamma_j = config.mode_j.gamma;
  const double gamma_s = config.substrate.gamma;
  const double xi_j = xi_scale(swap_modes(config));

  const int n = 12;
  Eigen::VectorXd x(n), ratios(n);
  for (int k = 0; k < n; ++k) {
    x(k) = xi_j * 1.1 * k / (n - 1);  // includes overcoupled points past x_crit
    ratios(k) = gamma_j / nonlinear_linewidth(config, x(k)).gamma_eff;
  }

  const DissipationFit fit = fit_dissipation_curve(x, ratios, gamma_j);
  CHECK(fit.converged);
  CHECK(close(fit.xi, xi_j, 1e-6));
  CHECK(close(fit.gamma_s, gamma_s, 1e-6));
  CHECK(fit.rms_residual < 1e-9);

  // 1% measurement noise on the ratios leaves a few-percent estimate.
  GaussianStream noise(7, 0);
  Eigen::VectorXd rough = ratios;
  for (int k = 0; k < n; ++k) rough(k) *= 1.0 + 0.01 * noise.next();
  const DissipationFit noisy = fit_dissipation_curve(x, rough, gamma_j);
  CHECK(noisy.converged);
  CHECK(std::abs(noisy.xi / xi_j - 1.0) < 0.05);
}

TEST_CASE("dissipation fit validates its inputs") {
  Eigen::VectorXd x = linspace(0.0, 1e-8, 6);
  Eigen::VectorXd ratios = Eigen::VectorXd::Ones(6);
  CHECK_THROWS_AS((void)fit_dissipation_curve(x.head(2), ratios.head(2), 1.0), ConfigError);
  CHECK_THROWS_AS((void)fit_dissipation_curve(x, ratios, 0.0), ConfigError);
  CHECK_THROWS_AS((void)fit_dissipation_curve(x, ratios.head(5), 1.0), ConfigError);
  CHECK_THROWS_AS((void)fit_dissipation_curve(Eigen::VectorXd::Zero(6), ratios, 1.0),
                  ConfigError);
  ratios(3) = -0.2;
  CHECK_THROWS_AS((void)fit_dissipation_curve(x, ratios, 1.0), ConfigError);
}

TEST_CASE("threshold regression reproduces an exact line through the origin") {
  const double slope = 557066.0;
  Eigen::VectorXd thresholds(5), xis(5);
  for (int k = 0; k < 5; ++k) {
    thresholds(k) = (k + 1) * 1e-14;
    xis(k) = slope * thresholds(k);
  }
  const LinearFit fit = xi_vs_threshold_regression(thresholds, xis);
  CHECK(close(fit.slope, slope, 1e-12));
  CHECK(std::abs(fit.intercept) < 1e-12 * xis.maxCoeff());
  CHECK(fit.slope_se < 1e-8 * slope);
  CHECK(fit.rms_residual < 1e-12 * xis.maxCoeff());

  // A deliberate offset shows up in the intercept, not the slope.
  const LinearFit shifted = xi_vs_threshold_regression(thresholds, xis.array() + 2e-9);
  CHECK(close(shifted.slope, slope, 1e-10));
  CHECK(close(shifted.intercept, 2e-9, 1e-10));

  CHECK_THROWS_AS((void)xi_vs_threshold_regression(thresholds.head(2), xis.head(2)),
                  ConfigError);
  CHECK_THROWS_AS(
      (void)xi_vs_threshold_regression(Eigen::VectorXd::Constant(5, 1e-14), xis),
      ConfigError);
}

TEST_CASE("quadrature histogram reports the diagonal spreads of correlated pairs") {
  const double rho = 0.6;
  const int n = 4000;
  GaussianStream gauss(13, 0);
  Eigen::MatrixXd samples(n, 2);
  for (int k = 0; k < n; ++k) {
    const double z1 = gauss.next(), z2 = gauss.next();
    samples(k, 0) = z1;
    samples(k, 1) = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
  }

  const Histogram2D hist = quadrature_histogram(samples, 31);
  CHECK(hist.total == static_cast<std::size_t>(n));
  CHECK(hist.counts.sum() == static_cast<double>(n));
  CHECK(hist.counts.rows() == 31);
  CHECK(hist.edges_q1.size() == 32);
  // Symmetric range that covers the extreme sample.
  CHECK(hist.edges_q1(0) == -hist.edges_q1(31));
  CHECK(hist.edges_q1(31) >= samples.col(0).cwiseAbs().maxCoeff());

  // Correlation shows up as unequal spreads along the two diagonals.
  CHECK(std::abs(hist.std_sum / std::sqrt(1.0 + rho) - 1.0) < 0.05);
  CHECK(std::abs(hist.std_diff / std::sqrt(1.0 - rho) - 1.0) < 0.05);

  CHECK_THROWS_AS((void)quadrature_histogram(samples.topRows(100), 31), ConfigError);
  CHECK_THROWS_AS((void)quadrature_histogram(samples, 0), ConfigError);
  CHECK_THROWS_AS((void)quadrature_histogram(Eigen::MatrixXd::Zero(2000, 3), 31), ConfigError);
}

TEST_CASE("ensemble reductions expose variances with honest standard errors") {
  SystemConfig config = default_config();
  config.mode_i.gamma = two_pi * 2.0;
  config.mode_j.gamma = two_pi * 2.0;
  config.pump.amplitude = 0.5 * threshold_amplitude(config);

  const LinearSystem system = membrane_fluctuation_system(config);
  EnsembleOptions options;
  options.dt = 1.5e-3;
  options.duration = 30.0;
  options.warmup = 4.0;
  options.n_trajectories = 96;
  options.seed = 23;
  options.sample_stride = 4;
  const EnsembleMoments moments = simulate_ensemble(system, options);

  // The packed reductions agree with the grand moment matrix.
  const Eigen::MatrixXd second = moments.second_moment();
  const ValueWithError var0 = component_variance(moments, 0);
  CHECK(close(var0.value, second(0, 0)));
  CHECK(var0.se > 0.0);
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(moments.packed_size());
  weights(EnsembleMoments::packed_index(0, 0)) = 1.0;
  const ValueWithError same = moment_functional(moments, weights);
  CHECK(same.value == var0.value);
  CHECK(same.se == var0.se);
  CHECK_THROWS_AS((void)moment_functional(moments, weights.head(3)), ConfigError);

  // Squeezing at mu = 0.5: the measured cross-quadratures bracket the
  // closed-form values within a few standard errors.
  const MeasuredCrossQuadratures measured =
      measure_cross_quadratures(config, moments, membrane_indices());
  const CrossQuadratureStats expected =
      cross_quadrature_stats(config, correlations_closed_form(config));
  CHECK(std::abs(measured.var_xb.value - expected.var_xb) <
        4.0 * measured.var_xb.se + 0.01 * expected.var_xb);
  CHECK(std::abs(measured.var_xa.value - expected.var_xa) <
        4.0 * measured.var_xa.se + 0.01 * expected.var_xa);
  CHECK(std::abs(measured.var_ya.value - expected.var_ya) <
        4.0 * measured.var_ya.se + 0.01 * expected.var_ya);
  CHECK(std::abs(measured.var_yb.value - expected.var_yb) <
        4.0 * measured.var_yb.se + 0.01 * expected.var_yb);
  // The squeezed pair really is below thermal, the amplified pair above.
  CHECK(measured.var_xb.value < 1.0);
  CHECK(measured.var_ya.value < 1.0);
  CHECK(measured.var_xa.value > 1.0);
  CHECK(measured.var_yb.value > 1.0);
}
