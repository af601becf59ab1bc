#include "runners.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <string>

#include "paramp/analytic.hpp"
#include "paramp/constants.hpp"
#include "paramp/csv.hpp"
#include "paramp/errors.hpp"
#include "paramp/estimators.hpp"
#include "paramp/model.hpp"
#include "paramp/sde.hpp"

namespace paramp::tool {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::ostream& out() { return std::cout << std::setprecision(10); }

// Noise-free steady state of a driven linear system, reached by exact
// propagation from rest over `efolds` of the slowest decay rate.  The
// propagator carries no step error, so the only residual is the e^-efolds
// transient, which 40 e-folds pushes below double precision.
Eigen::VectorXd settled_state(const LinearSystem& system, double slow_rate,
                              double efolds = 40.0) {
  constexpr long steps = 256;
  const double horizon = efolds / slow_rate;
  return evolve_deterministic(system, Eigen::VectorXd::Zero(system.dim()), horizon / steps,
                              steps);
}

// --mu-list left unset: sweep the config's own pump level, or a built-in
// demo list when the pump is off.
std::vector<double> resolve_mu_list(const std::vector<double>& requested,
                                    const SystemConfig& config,
                                    std::vector<double> fallback) {
  if (!requested.empty()) return requested;
  const double mu = normalized_pump(config);
  if (mu > 0.0) return {mu};
  return fallback;
}

}  // namespace

// ----------------------------------------------------------------------------
// threshold
// ----------------------------------------------------------------------------

RunFiles run_threshold(const SystemConfig& config, const ThresholdOptions& opt,
                       const std::filesystem::path& out_dir) {
  const DerivedQuantities der = derive(config);
  const double xi_j = xi_scale(swap_modes(config));

  RunFiles files;
  {
    CsvWriter csv(out_dir / "derived.csv",
                  {"chi_i_m_per_n", "chi_j_m_per_n", "chi_s_m_per_n", "x_th_i_m", "x_th_j_m",
                   "x_s_th_m", "xi_i_m", "xi_j_m", "mu", "delta", "gamma_bar_rad_s",
                   "growth_rate_rad_s"});
    csv.row({der.chi_i, der.chi_j, der.chi_s, der.x_th_i, der.x_th_j, der.x_s_th, der.xi, xi_j,
             der.mu, der.delta, der.gamma_bar, instability_growth_rate(config)});
    files.outputs.push_back({"derived.csv", csv.finish()});
  }
  out() << "threshold X_S_th = " << der.x_s_th << " m, mu = " << der.mu
        << ", growth rate = " << instability_growth_rate(config) << " 1/s\n"
        << "saturation scales xi_i = " << der.xi << " m, xi_j = " << xi_j << " m\n";

  if (opt.sweep_points > 0) {
    if (opt.sweep_points < 3)
      throw ConfigError("threshold: --sweep-g needs at least 3 points for the regression");
    Eigen::VectorXd thresholds(opt.sweep_points), xis(opt.sweep_points);
    CsvWriter csv(out_dir / "threshold_sweep.csv",
                  {"g_n_per_m2", "x_s_th_m", "xi_i_m", "xi_j_m"});
    for (int k = 0; k < opt.sweep_points; ++k) {
      SystemConfig swept = config;
      const double exponent =
          opt.sweep_decades * (static_cast<double>(k) / (opt.sweep_points - 1) - 0.5);
      swept.g = config.g * std::pow(10.0, exponent);
      thresholds(k) = threshold_amplitude(swept);
      xis(k) = xi_scale(swept);
      csv.row({swept.g, thresholds(k), xis(k), xi_scale(swap_modes(swept))});
    }
    files.outputs.push_back({"threshold_sweep.csv", csv.finish()});

    const LinearFit fit = xi_vs_threshold_regression(thresholds, xis);
    const double expected =
        0.5 * std::sqrt(config.substrate.gamma / config.mode_i.gamma) *
        std::sqrt(der.chi_j / der.chi_s);
    out() << "xi vs threshold over " << opt.sweep_decades << " decades of g: slope = "
          << fit.slope << " (expected " << expected << "), intercept = " << fit.intercept
          << " m\n";
  }
  return files;
}

// ----------------------------------------------------------------------------
// gain
// ----------------------------------------------------------------------------

RunFiles run_gain(const SystemConfig& config, const GainOptions& opt,
                  const std::filesystem::path& out_dir) {
  const std::vector<double> mu_list =
      resolve_mu_list(opt.mu_list, config, {0.021, 0.038, 0.042});
  for (const double mu : mu_list)
    if (!(mu >= 0.0 && mu <= 0.999))
      throw ConfigError("gain: mu " + std::to_string(mu) + " outside [0, 0.999]");
  if (opt.phase_points < 1) throw ConfigError("gain: --phase-points must be >= 1");

  const DerivedQuantities der = derive(config);
  const Drive drive_i{opt.drive_i_xth * der.x_th_i / der.chi_i, 0.0};
  const Drive drive_j{opt.drive_j_xth * der.x_th_j / der.chi_j, 0.0};
  const double eta = eta_from_drives(config, drive_i.force, drive_j.force);
  const double gamma_slow = std::min(config.mode_i.gamma, config.mode_j.gamma);
  const bool want_sde = opt.mode != EvalMode::analytic_only;
  const bool want_analytic = opt.mode != EvalMode::sde_only;

  // Pump-off reference response of the observed mode; drives are fixed, so
  // one settle covers every (mu, phi) point.
  double a_off = nan_value;
  if (want_sde) {
    SystemConfig off = config;
    off.pump.amplitude = 0.0;
    const Eigen::VectorXd x =
        settled_state(driven_membrane_system(off, drive_i, drive_j, false), 0.5 * gamma_slow);
    a_off = std::hypot(x(1), x(3));
  }

  CsvWriter csv(out_dir / "gain.csv", {"phi_rad", "mu", "g_analytic", "g_sde"});
  for (const double mu : mu_list) {
    SystemConfig pumped = config;
    pumped.pump.amplitude = mu * der.x_s_th;
    for (int k = 0; k < opt.phase_points; ++k) {
      const double phi = two_pi * k / opt.phase_points;
      double g_analytic = nan_value, g_sde = nan_value;
      if (want_analytic) g_analytic = phase_gain(mu, eta, phi);
      if (want_sde) {
        pumped.pump.phase = phi;
        const Eigen::VectorXd x =
            settled_state(driven_membrane_system(pumped, drive_i, drive_j, true),
                          0.5 * gamma_slow * (1.0 - mu));
        g_sde = std::hypot(x(1), x(3)) / a_off;
      }
      csv.row({phi, mu, g_analytic, g_sde});
    }
  }

  RunFiles files;
  files.outputs.push_back({"gain.csv", csv.finish()});
  out() << "gain sweep: eta = " << eta << ", " << mu_list.size() << " pump level(s) x "
        << opt.phase_points << " phases -> gain.csv\n";
  return files;
}

// ----------------------------------------------------------------------------
// ringdown
// ----------------------------------------------------------------------------

RunFiles run_ringdown(const SystemConfig& config, const RingdownOptions& opt,
                      const std::filesystem::path& out_dir) {
  if (opt.hold_list.empty()) throw ConfigError("ringdown: --hold-list is empty");
  for (const double h : opt.hold_list)
    if (h < 0.0) throw ConfigError("ringdown: hold amplitudes must be >= 0");

  const double xi_j = xi_scale(swap_modes(config));
  const double gamma_j = config.mode_j.gamma;
  const double gamma_s = config.substrate.gamma;
  const double a0 = 50.0 * thermal_amplitude(config.mode_j, config.temperature);

  RunFiles files;
  CsvWriter csv(out_dir / "ringdown.csv",
                {"x_hold_m", "gamma_fit_rad_s", "gamma_exact_rad_s", "gamma_approx_rad_s",
                 "q_ratio", "overcoupled"});
  for (std::size_t k = 0; k < opt.hold_list.size(); ++k) {
    const double x_hold = opt.hold_list[k] * xi_j;
    const LinewidthResult exact = nonlinear_linewidth(config, x_hold);
    const LinewidthResult approx = nonlinear_linewidth_approx(config, x_hold);

    // Sampling plan: resolve the envelope e-fold time 2/gamma_eff with 100
    // samples, and when the pair is overcoupled make sure the record covers
    // a few hybridization periods -- the clean exponential stretch sits a
    // beat phase into the record, not at t = 0.  Cap the span where the
    // amplitude would underflow doubles.
    const double t_efold = 2.0 / exact.gamma_eff;
    const double dt = t_efold / 100.0;
    double duration = 10.0 * t_efold;
    const double radicand = (gamma_s - gamma_j) * (gamma_s - gamma_j) -
                            gamma_s * gamma_s * x_hold * x_hold / (xi_j * xi_j);
    if (radicand < 0.0) {
      const double omega_beat = 0.25 * std::sqrt(-radicand);
      duration = std::max(duration, 2.5 * two_pi / omega_beat);
    }
    duration = std::min(duration, 1300.0 / exact.gamma_eff);
    const long n_steps = std::lround(duration / dt);

    const LinearSystem pair = ringdown_pair_system(config, x_hold);
    Eigen::VectorXd x0(2);
    x0 << a0, 0.0;
    const Eigen::MatrixXd path = deterministic_trajectory(pair, x0, dt, n_steps);
    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n_steps + 1, 0.0, duration);
    // The record is noise-free, so the fit may use its full dynamic range.
    const RingdownFit fit = fit_ringdown(times, path.col(0), 0.0);

    csv.row({x_hold, fit.gamma_eff, exact.gamma_eff, approx.gamma_eff,
             gamma_j / fit.gamma_eff, exact.overcoupled ? 1.0 : 0.0});
    out() << "ringdown x = " << opt.hold_list[k] << " xi_j: gamma_fit = " << fit.gamma_eff
          << ", exact = " << exact.gamma_eff << " rad/s"
          << (exact.overcoupled ? " (overcoupled)" : "") << "\n";

    if (opt.record_envelopes) {
      const std::string name = "envelope_" + std::to_string(k) + ".csv";
      CsvWriter envelope(out_dir / name, {"time_s", "amp_j_m", "amp_s_m"});
      for (long r = 0; r <= n_steps; ++r)
        envelope.row({times(r), path(r, 0), path(r, 1)});
      files.outputs.push_back({name, envelope.finish()});
    }
  }
  files.outputs.push_back({"ringdown.csv", csv.finish()});
  return files;
}

// ----------------------------------------------------------------------------
// squeeze
// ----------------------------------------------------------------------------

RunFiles run_squeeze(const SystemConfig& config, const SqueezeOptions& opt, std::uint64_t seed,
                     int threads, const std::filesystem::path& out_dir) {
  const bool want_sde = opt.mode != EvalMode::analytic_only;
  const bool want_analytic = opt.mode != EvalMode::sde_only;

  const DerivedQuantities der = derive(config);
  const double gamma_slow = std::min(config.mode_i.gamma, config.mode_j.gamma);

  RunFiles files;
  CsvWriter csv(out_dir / "squeeze.csv",
                {"mu", "var_xa_analytic", "var_xb_analytic", "var_ya_analytic",
                 "var_yb_analytic", "squeezing_db_analytic", "var_xa_sde", "var_xa_se",
                 "var_xb_sde", "var_xb_se", "var_ya_sde", "var_ya_se", "var_yb_sde",
                 "var_yb_se"});

  const std::vector<double> mu_list = resolve_mu_list(opt.mu_list, config, {0.5});
  for (std::size_t k = 0; k < mu_list.size(); ++k) {
    const double mu = mu_list[k];
    SystemConfig pumped = config;
    pumped.pump.amplitude = mu * der.x_s_th;

    double var_xa_an = nan_value, var_xb_an = nan_value, var_ya_an = nan_value,
           var_yb_an = nan_value, db_an = nan_value;
    if (want_analytic) {
      const CrossQuadratureStats stats =
          cross_quadrature_stats(pumped, correlations_closed_form(pumped));
      var_xa_an = stats.var_xa;
      var_xb_an = stats.var_xb;
      var_ya_an = stats.var_ya;
      var_yb_an = stats.var_yb;
      db_an = stats.squeezing_db();
      out() << "mu = " << mu << ": analytic var(x_a) = " << stats.var_xa
            << ", var(x_b) = " << stats.var_xb << " (" << db_an << " dB squeezing)\n";
    }

    MeasuredCrossQuadratures measured;
    measured.var_xa = {nan_value, nan_value};
    measured.var_xb = {nan_value, nan_value};
    measured.var_ya = {nan_value, nan_value};
    measured.var_yb = {nan_value, nan_value};
    if (want_sde) {
      const LinearSystem system =
          opt.full_system
              ? fluctuation_system(pumped, MeanAmplitudes::pump_only(pumped))
              : membrane_fluctuation_system(pumped);
      const QuadratureIndices idx = opt.full_system ? fluctuation_indices() : membrane_indices();

      EnsembleOptions ensemble;
      const double gamma_max = 2.0 * system.drift.diagonal().cwiseAbs().maxCoeff();
      ensemble.dt = opt.dt > 0.0 ? opt.dt : 1.0 / (50.0 * gamma_max);
      ensemble.duration = opt.duration;
      ensemble.warmup = opt.warmup > 0.0 ? opt.warmup : 12.0 / (gamma_slow * (1.0 - mu));
      ensemble.n_trajectories = opt.n_trajectories;
      ensemble.seed = seed + k;
      ensemble.sample_stride = opt.sample_stride;
      ensemble.n_threads = threads;

      const EnsembleMoments moments = simulate_ensemble(system, ensemble);
      measured = measure_cross_quadratures(pumped, moments, idx);
      out() << "mu = " << mu << ": ensemble (" << ensemble.n_trajectories
            << " trajectories, dt = " << ensemble.dt << " s) var(x_a) = "
            << measured.var_xa.value << " +- " << measured.var_xa.se << ", var(x_b) = "
            << measured.var_xb.value << " +- " << measured.var_xb.se << "\n";

      if (opt.histogram_bins > 0) {
        // One long auxiliary path (stream id past the ensemble's) for the
        // joint quadrature picture; thin it enough to keep >= 1000 samples.
        EnsembleOptions path_options = ensemble;
        path_options.sample_stride = std::max(
            1, static_cast<int>(opt.duration / (ensemble.dt * 2000.0)));
        const Eigen::MatrixXd path = simulate_path(
            system, path_options, static_cast<std::uint64_t>(opt.n_trajectories));
        Eigen::MatrixXd pairs(path.rows(), 2);
        pairs.col(0) = path.col(idx.alpha_i) / der.x_th_i;
        pairs.col(1) = path.col(idx.alpha_j) / der.x_th_j;
        const Histogram2D hist = quadrature_histogram(pairs, opt.histogram_bins);

        const std::string name = "histogram_" + std::to_string(k) + ".csv";
        CsvWriter hist_csv(out_dir / name, {"alpha_i_center", "alpha_j_center", "count"});
        for (int r = 0; r < opt.histogram_bins; ++r)
          for (int c = 0; c < opt.histogram_bins; ++c)
            hist_csv.row({0.5 * (hist.edges_q1(r) + hist.edges_q1(r + 1)),
                          0.5 * (hist.edges_q2(c) + hist.edges_q2(c + 1)), hist.counts(r, c)});
        files.outputs.push_back({name, hist_csv.finish()});
        out() << "mu = " << mu << ": path histogram std along diagonals = " << hist.std_sum
              << " (x_a), " << hist.std_diff << " (x_b)\n";
      }
    }

    csv.row({mu, var_xa_an, var_xb_an, var_ya_an, var_yb_an, db_an, measured.var_xa.value,
             measured.var_xa.se, measured.var_xb.value, measured.var_xb.se,
             measured.var_ya.value, measured.var_ya.se, measured.var_yb.value,
             measured.var_yb.se});
  }
  files.outputs.push_back({"squeeze.csv", csv.finish()});
  return files;
}

// ----------------------------------------------------------------------------
// spectrum
// ----------------------------------------------------------------------------

RunFiles run_spectrum(const SystemConfig& config, const SpectrumOptions& opt,
                      const std::filesystem::path& out_dir) {
  if (opt.omega_points < 2) throw ConfigError("spectrum: --omega-points must be >= 2");
  const DerivedQuantities der = derive(config);
  if (der.mu >= 1.0)
    throw ConfigError("spectrum: stationary spectra require mu < 1 (got mu = " +
                      std::to_string(der.mu) + ")");
  const MeanAmplitudes mean_amps = MeanAmplitudes::pump_only(config);

  // Cover the broadened pole pair; the narrowed line at gamma_bar (1-mu)/2
  // always lies inside.
  const double span =
      opt.omega_span > 0.0 ? opt.omega_span : 5.0 * der.gamma_bar * (1.0 + der.mu);

  RunFiles files;
  CsvWriter csv(out_dir / "spectrum.csv",
                {"omega_rad_s", "s_alpha_ii", "s_alpha_jj", "s_alpha_ij_re", "s_alpha_ij_im",
                 "s_alpha_ss", "s_beta_ii", "s_beta_jj", "s_beta_ij_re", "s_beta_ij_im",
                 "s_beta_ss"});
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(opt.omega_points, 0.0, span);
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const auto [s_alpha, s_beta] = spectrum(config, mean_amps, grid(k));
    csv.row({grid(k), s_alpha(0, 0).real(), s_alpha(1, 1).real(), s_alpha(0, 1).real(),
             s_alpha(0, 1).imag(), s_alpha(2, 2).real(), s_beta(0, 0).real(),
             s_beta(1, 1).real(), s_beta(0, 1).real(), s_beta(0, 1).imag(),
             s_beta(2, 2).real()});
  }
  files.outputs.push_back({"spectrum.csv", csv.finish()});
  out() << "spectrum: " << opt.omega_points << " points over [0, " << span << "] rad/s\n";

  if (opt.bandwidth_hz > 0.0) {
    const CorrelationSet band = band_limited_correlations(config, mean_amps, opt.bandwidth_hz);
    const auto [c_alpha, c_beta] = band.normalized(config);
    const CrossQuadratureStats stats = cross_quadrature_stats(config, band);
    CsvWriter band_csv(out_dir / "band.csv",
                       {"bandwidth_hz", "c_alpha_ii", "c_alpha_jj", "c_alpha_ij", "c_beta_ii",
                        "c_beta_jj", "c_beta_ij", "var_xa", "var_xb", "var_ya", "var_yb"});
    band_csv.row({opt.bandwidth_hz, c_alpha(0, 0), c_alpha(1, 1), c_alpha(0, 1), c_beta(0, 0),
                  c_beta(1, 1), c_beta(0, 1), stats.var_xa, stats.var_xb, stats.var_ya,
                  stats.var_yb});
    files.outputs.push_back({"band.csv", band_csv.finish()});
    out() << "band-limited (" << opt.bandwidth_hz << " Hz): var(x_b) = " << stats.var_xb
          << ", var(x_a) = " << stats.var_xa << "\n";
  }
  return files;
}

// ----------------------------------------------------------------------------
// fit
// ----------------------------------------------------------------------------

RunFiles run_fit(const FitOptions& opt, const std::filesystem::path& out_dir) {
  const CsvTable table = read_csv(opt.input);
  RunFiles files;
  files.inputs.push_back({opt.input, hash_file(opt.input)});

  if (opt.kind == "gain") {
    const Eigen::VectorXd phases = table.col("phi_rad");
    const Eigen::VectorXd gains = table.col(opt.column.empty() ? "g_sde" : opt.column);
    const GainFit fit = fit_gain_curve(phases, gains, opt.fixed_eta, opt.fit_phase_offset);
    if (!fit.converged) throw NumericError("fit gain: no convergence");
    CsvWriter csv(out_dir / "fit_gain.csv",
                  {"mu", "mu_se", "eta", "eta_se", "phase_offset_rad", "phase_offset_se_rad",
                   "rms_residual", "iterations"});
    csv.row({fit.mu, fit.mu_se, fit.eta, fit.eta_se, fit.phase_offset, fit.phase_offset_se,
             fit.rms_residual, static_cast<double>(fit.iterations)});
    files.outputs.push_back({"fit_gain.csv", csv.finish()});
    out() << "gain fit: mu = " << fit.mu << " +- " << fit.mu_se << ", eta = " << fit.eta
          << (opt.fixed_eta ? " (fixed)" : "") << ", rms = " << fit.rms_residual << "\n";
  } else if (opt.kind == "ringdown") {
    const Eigen::VectorXd times = table.col("time_s");
    const Eigen::VectorXd amps = table.col(opt.column.empty() ? "amp_j_m" : opt.column);
    const RingdownFit fit = fit_ringdown(times, amps, opt.floor_fraction);
    CsvWriter csv(out_dir / "fit_ringdown.csv",
                  {"gamma_eff_rad_s", "rms_residual", "window_begin", "window_end"});
    csv.row({fit.gamma_eff, fit.rms_residual, static_cast<double>(fit.window_begin),
             static_cast<double>(fit.window_end)});
    files.outputs.push_back({"fit_ringdown.csv", csv.finish()});
    out() << "ringdown fit: gamma_eff = " << fit.gamma_eff << " rad/s, rms = "
          << fit.rms_residual << "\n";
  } else if (opt.kind == "dissipation") {
    if (!(opt.gamma_j > 0.0))
      throw ConfigError("fit dissipation: --gamma-j (bare linewidth, rad/s) is required");
    // Accept either a generic "x_m" column or the sweep output's "x_hold_m",
    // so `paramp ringdown` results feed straight back in.
    const bool generic = std::find(table.columns.begin(), table.columns.end(),
                                   std::string("x_m")) != table.columns.end();
    const Eigen::VectorXd x = table.col(generic ? "x_m" : "x_hold_m");
    const Eigen::VectorXd ratios = table.col(opt.column.empty() ? "q_ratio" : opt.column);
    const DissipationFit fit = fit_dissipation_curve(x, ratios, opt.gamma_j);
    if (!fit.converged) throw NumericError("fit dissipation: no convergence");
    CsvWriter csv(out_dir / "fit_dissipation.csv",
                  {"xi_m", "xi_se_m", "gamma_s_rad_s", "gamma_s_se_rad_s", "rms_residual",
                   "iterations"});
    csv.row({fit.xi, fit.xi_se, fit.gamma_s, fit.gamma_s_se, fit.rms_residual,
             static_cast<double>(fit.iterations)});
    files.outputs.push_back({"fit_dissipation.csv", csv.finish()});
    out() << "dissipation fit: xi = " << fit.xi << " +- " << fit.xi_se << " m, gamma_S = "
          << fit.gamma_s << " +- " << fit.gamma_s_se << " rad/s\n";
  } else {
    throw ConfigError("fit: unknown kind '" + opt.kind + "' (gain|ringdown|dissipation)");
  }
  return files;
}

}  // namespace paramp::tool
