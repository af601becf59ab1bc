#include "paramp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "paramp/constants.hpp"
#include "paramp/errors.hpp"

namespace paramp {

// ----------------------------------------------------------------------------
// Ring-down fitting
// ----------------------------------------------------------------------------

namespace {

struct WindowFit {
  double slope = 0.0;
  double rms = std::numeric_limits<double>::max();
};

// Centered least squares of y against t on [begin, end).  Centering first
// keeps the residual sum numerically clean even when the fit is nearly
// exact, which is what the window selection relies on.
WindowFit fit_window(const std::vector<double>& t, const std::vector<double>& y,
                     std::size_t begin, std::size_t end) {
  const auto count = static_cast<double>(end - begin);
  double mean_t = 0.0, mean_y = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    mean_t += t[k];
    mean_y += y[k];
  }
  mean_t /= count;
  mean_y /= count;

  double stt = 0.0, sty = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    stt += (t[k] - mean_t) * (t[k] - mean_t);
    sty += (t[k] - mean_t) * (y[k] - mean_y);
  }

  WindowFit fit;
  fit.slope = sty / stt;
  double rss = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    const double r = (y[k] - mean_y) - fit.slope * (t[k] - mean_t);
    rss += r * r;
  }
  fit.rms = std::sqrt(rss / count);
  return fit;
}

}  // namespace

RingdownFit fit_ringdown(const Eigen::VectorXd& times, const Eigen::VectorXd& amplitudes,
                         double floor_fraction) {
  if (times.size() != amplitudes.size())
    throw ConfigError("fit_ringdown: times and amplitudes differ in length");
  if (floor_fraction < 0.0 || floor_fraction >= 1.0)
    throw ConfigError("fit_ringdown: floor_fraction must lie in [0, 1)");

  // Log envelope, dropping samples under the noise floor (and in any case
  // near zero crossings of an oscillatory decay, whose logs would dominate
  // every fit they enter).
  const double peak = amplitudes.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw NumericError("fit_ringdown: record is identically zero");
  const double floor =
      std::max(floor_fraction * peak, std::numeric_limits<double>::min());
  std::vector<double> t, y;
  t.reserve(static_cast<std::size_t>(times.size()));
  y.reserve(static_cast<std::size_t>(times.size()));
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double a = std::abs(amplitudes(k));
    if (a > floor) {
      t.push_back(times(k));
      y.push_back(std::log(a));
    }
  }

  constexpr std::size_t min_window = 10;
  constexpr double efold = 1.0;
  if (t.size() < min_window) throw NumericError("fit_ringdown: too few usable samples");

  // Slide a window spanning one e-fold of decay and keep the one the pure
  // exponential fits best; ringing or flat stretches fit worse and lose.
  RingdownFit best;
  best.rms_residual = std::numeric_limits<double>::max();
  bool found = false;
  for (std::size_t a = 0; a + min_window <= t.size(); ++a) {
    std::size_t b = a + min_window - 1;
    while (b < t.size() && y[a] - y[b] < efold) ++b;
    if (b >= t.size()) continue;
    const WindowFit fit = fit_window(t, y, a, b + 1);
    if (fit.rms < best.rms_residual) {
      best.rms_residual = fit.rms;
      best.gamma_eff = -2.0 * fit.slope;
      best.window_begin = a;
      best.window_end = b + 1;
      found = true;
    }
  }
  if (!found) throw NumericError("fit_ringdown: no window spans a full e-fold of decay");
  return best;
}

// ----------------------------------------------------------------------------
// Shared Levenberg-Marquardt core
// ----------------------------------------------------------------------------

namespace {

struct LmOutcome {
  Eigen::VectorXd params;
  Eigen::VectorXd se;
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton with analytic Jacobians.  `eval` fills residuals and
// the Jacobian at a parameter point; `clamp` projects trial points back into
// the admissible region (parameters here live in boxes like mu < 1).  The
// tiny absolute floor on the damped diagonal keeps the solve finite when a
// parameter is locally unidentifiable (zero Jacobian column), in which case
// that direction simply stops moving.
LmOutcome lm_minimize(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& eval,
    const std::function<void(Eigen::VectorXd&)>& clamp, Eigen::VectorXd p, Eigen::Index n_obs) {
  const Eigen::Index n_params = p.size();
  Eigen::VectorXd residuals(n_obs);
  Eigen::MatrixXd jac(n_obs, n_params);
  eval(p, residuals, jac);
  double cost = residuals.squaredNorm();

  LmOutcome out;
  double damping = 1e-3;
  constexpr int max_iterations = 200;
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    const Eigen::VectorXd gradient = jac.transpose() * residuals;
    const double diag_floor =
        1e-14 * normal.trace() / static_cast<double>(n_params) + 1e-300;

    bool stepped = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += damping * (normal.diagonal().array() + diag_floor).matrix();
      Eigen::VectorXd p_try = p + damped.ldlt().solve(-gradient);
      clamp(p_try);

      Eigen::VectorXd res_try(n_obs);
      Eigen::MatrixXd jac_try(n_obs, n_params);
      eval(p_try, res_try, jac_try);
      const double cost_try = res_try.squaredNorm();
      if (cost_try <= cost) {
        const double step = (p_try - p).lpNorm<1>();
        const double drop = cost - cost_try;
        p = p_try;
        residuals.swap(res_try);
        jac.swap(jac_try);
        cost = cost_try;
        damping = std::max(damping / 3.0, 1e-12);
        stepped = true;
        if (step < 1e-12 * (1.0 + p.lpNorm<1>()) || drop < 1e-15 * (cost + 1e-300))
          out.converged = true;
        break;
      }
      damping *= 10.0;
    }
    if (!stepped) {
      // No downhill step at any damping: we are at a (numerical) minimum.
      out.converged = true;
    }
    if (out.converged) break;
  }

  out.params = p;
  out.rms = std::sqrt(cost / static_cast<double>(n_obs));

  // Asymptotic parameter covariance s^2 (J^T J)^{-1}.
  out.se = Eigen::VectorXd::Zero(n_params);
  const Eigen::Index dof = n_obs - n_params;
  if (dof > 0) {
    const double s2 = cost / static_cast<double>(dof);
    const Eigen::MatrixXd covariance =
        (jac.transpose() * jac).ldlt().solve(Eigen::MatrixXd::Identity(n_params, n_params)) * s2;
    out.se = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return out;
}

}  // namespace

// ----------------------------------------------------------------------------
// Gain-curve fitting
// ----------------------------------------------------------------------------

GainFit fit_gain_curve(const Eigen::VectorXd& phases, const Eigen::VectorXd& gains,
                       std::optional<double> fixed_eta, bool fit_phase_offset) {
  const bool fit_eta = !fixed_eta.has_value();
  const int n_params = 1 + (fit_eta ? 1 : 0) + (fit_phase_offset ? 1 : 0);
  if (phases.size() != gains.size())
    throw ConfigError("fit_gain_curve: phases and gains differ in length");
  if (phases.size() < n_params + 1)
    throw ConfigError("fit_gain_curve: need more points than parameters");

  // Parameter layout: [mu, eta?, phi0?].
  const int at_eta = fit_eta ? 1 : -1;
  const int at_phi0 = fit_phase_offset ? n_params - 1 : -1;

  // Starting point from the extremal phases: G(0)+G(pi) and G(pi)-G(0)
  // determine mu and mu*eta in closed form.
  Eigen::Index at_zero = 0, at_pi = 0;
  double fold_zero = pi, fold_pi = 0.0;
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    const double fold = std::abs(std::remainder(phases(k), two_pi));  // in [0, pi]
    if (fold <= fold_zero) {
      fold_zero = fold;
      at_zero = k;
    }
    if (fold >= fold_pi) {
      fold_pi = fold;
      at_pi = k;
    }
  }
  const double sum = gains(at_zero) + gains(at_pi);
  const double diff = gains(at_pi) - gains(at_zero);
  double mu0 = sum > 2.0 ? std::sqrt(1.0 - 2.0 / sum) : 1e-3;
  mu0 = std::clamp(mu0, 1e-4, 0.999);

  Eigen::VectorXd p(n_params);
  p(0) = mu0;
  if (fit_eta) p(at_eta) = std::clamp(diff / (sum * mu0), 1e-6, 1e6);
  if (fit_phase_offset) p(at_phi0) = 0.0;

  const double eta_fixed = fixed_eta.value_or(0.0);
  const auto eval = [&](const Eigen::VectorXd& q, Eigen::VectorXd& residuals,
                        Eigen::MatrixXd& jac) {
    const double mu = q(0);
    const double eta = fit_eta ? q(at_eta) : eta_fixed;
    const double phi0 = fit_phase_offset ? q(at_phi0) : 0.0;
    const double denom = 1.0 - mu * mu;
    for (Eigen::Index k = 0; k < phases.size(); ++k) {
      const double c = std::cos(phases(k) - phi0);
      const double root = std::sqrt(1.0 + mu * mu * eta * eta - 2.0 * mu * eta * c);
      residuals(k) = root / denom - gains(k);
      jac(k, 0) =
          (mu * eta * eta - eta * c) / (root * denom) + 2.0 * mu * root / (denom * denom);
      if (fit_eta) jac(k, at_eta) = (mu * mu * eta - mu * c) / (root * denom);
      if (fit_phase_offset)
        jac(k, at_phi0) = -mu * eta * std::sin(phases(k) - phi0) / (root * denom);
    }
  };
  const auto clamp = [&](Eigen::VectorXd& q) {
    q(0) = std::clamp(q(0), 0.0, 1.0 - 1e-9);
    if (fit_eta) q(at_eta) = std::max(q(at_eta), 0.0);
    if (fit_phase_offset) q(at_phi0) = std::remainder(q(at_phi0), two_pi);
  };

  const LmOutcome lm = lm_minimize(eval, clamp, p, phases.size());

  GainFit out;
  out.mu = lm.params(0);
  out.eta = fit_eta ? lm.params(at_eta) : eta_fixed;
  out.phase_offset = fit_phase_offset ? lm.params(at_phi0) : 0.0;
  out.mu_se = lm.se(0);
  if (fit_eta) out.eta_se = lm.se(at_eta);
  if (fit_phase_offset) out.phase_offset_se = lm.se(at_phi0);
  out.rms_residual = lm.rms;
  out.iterations = lm.iterations;
  out.converged = lm.converged;
  return out;
}

// ----------------------------------------------------------------------------
// Dissipation-curve fitting
// ----------------------------------------------------------------------------

namespace {

// Exact hybridized linewidth and its partials in (gamma_s, xi).  Past the
// saturation point the linewidth pins to the average (gamma_s + gamma_j)/2
// and loses all xi sensitivity, which the Jacobian reflects.
struct LinewidthPoint {
  double gamma_eff;
  double d_gamma_s;
  double d_xi;
};

LinewidthPoint linewidth_model(double x, double gamma_s, double gamma_j, double xi) {
  const double radicand =
      (gamma_s - gamma_j) * (gamma_s - gamma_j) - gamma_s * gamma_s * x * x / (xi * xi);
  if (radicand <= 0.0)
    return {0.5 * (gamma_s + gamma_j), 0.5, 0.0};
  const double root = std::sqrt(radicand);
  LinewidthPoint out;
  out.gamma_eff = 0.5 * (gamma_s + gamma_j - root);
  out.d_gamma_s = 0.5 * (1.0 - ((gamma_s - gamma_j) - gamma_s * x * x / (xi * xi)) / root);
  out.d_xi = -gamma_s * gamma_s * x * x / (2.0 * xi * xi * xi * root);
  return out;
}

}  // namespace

DissipationFit fit_dissipation_curve(const Eigen::VectorXd& drive_amplitudes,
                                     const Eigen::VectorXd& q_ratios, double gamma_j) {
  if (drive_amplitudes.size() != q_ratios.size())
    throw ConfigError("fit_dissipation_curve: amplitudes and ratios differ in length");
  if (drive_amplitudes.size() < 3)
    throw ConfigError("fit_dissipation_curve: need at least three points for two parameters");
  if (!(gamma_j > 0.0)) throw ConfigError("fit_dissipation_curve: gamma_j must be positive");
  if (drive_amplitudes.minCoeff() < 0.0 || q_ratios.minCoeff() <= 0.0)
    throw ConfigError("fit_dissipation_curve: amplitudes must be >= 0 and ratios > 0");
  const double x_max = drive_amplitudes.maxCoeff();
  if (!(x_max > 0.0))
    throw ConfigError("fit_dissipation_curve: all drive amplitudes are zero");

  // Starting values.  The most-damped point bounds the saturated linewidth
  // (gamma_s + gamma_j)/2 from below; inverting the quadratic rise at that
  // same point then places xi.
  Eigen::Index worst = 0;
  q_ratios.minCoeff(&worst);
  const double r_min = q_ratios(worst);
  const double x_at_worst = drive_amplitudes(worst);
  const double gamma_s0 = std::max(2.0 * gamma_j / r_min - gamma_j, 10.0 * gamma_j);
  const double rise = 2.0 * (gamma_j / r_min - gamma_j) / gamma_s0;  // 1 - sqrt(1 - x^2/xi^2)
  double xi0;
  if (rise >= 1.0 || x_at_worst == 0.0)
    xi0 = x_at_worst > 0.0 ? x_at_worst : x_max;  // saturated: x sits at the critical drive
  else if (rise <= 0.0)
    xi0 = 4.0 * x_max;  // no visible damping increase; start far out
  else
    xi0 = x_at_worst / std::sqrt(rise * (2.0 - rise));

  const auto eval = [&](const Eigen::VectorXd& q, Eigen::VectorXd& residuals,
                        Eigen::MatrixXd& jac) {
    const double xi = q(0), gamma_s = q(1);
    for (Eigen::Index k = 0; k < drive_amplitudes.size(); ++k) {
      const LinewidthPoint m = linewidth_model(drive_amplitudes(k), gamma_s, gamma_j, xi);
      residuals(k) = gamma_j / m.gamma_eff - q_ratios(k);
      const double scale = -gamma_j / (m.gamma_eff * m.gamma_eff);
      jac(k, 0) = scale * m.d_xi;
      jac(k, 1) = scale * m.d_gamma_s;
    }
  };
  const auto clamp = [&](Eigen::VectorXd& q) {
    q(0) = std::max(q(0), 1e-6 * x_max);
    q(1) = std::max(q(1), 1e-6 * gamma_j);
  };

  Eigen::VectorXd p(2);
  p << xi0, gamma_s0;
  const LmOutcome lm = lm_minimize(eval, clamp, p, drive_amplitudes.size());

  DissipationFit out;
  out.xi = lm.params(0);
  out.gamma_s = lm.params(1);
  out.xi_se = lm.se(0);
  out.gamma_s_se = lm.se(1);
  out.rms_residual = lm.rms;
  out.iterations = lm.iterations;
  out.converged = lm.converged;
  return out;
}

// ----------------------------------------------------------------------------
// Threshold-vs-saturation regression
// ----------------------------------------------------------------------------

LinearFit xi_vs_threshold_regression(const Eigen::VectorXd& thresholds,
                                     const Eigen::VectorXd& xis) {
  if (thresholds.size() != xis.size())
    throw ConfigError("xi_vs_threshold_regression: input lengths differ");
  const Eigen::Index n = thresholds.size();
  if (n < 3) throw ConfigError("xi_vs_threshold_regression: need at least three pairs");

  const double mean_x = thresholds.mean();
  const double mean_y = xis.mean();
  const Eigen::ArrayXd dx = thresholds.array() - mean_x;
  const Eigen::ArrayXd dy = xis.array() - mean_y;
  const double sxx = dx.square().sum();
  if (!(sxx > 0.0))
    throw ConfigError("xi_vs_threshold_regression: thresholds are all identical");

  LinearFit out;
  out.slope = (dx * dy).sum() / sxx;
  out.intercept = mean_y - out.slope * mean_x;
  const double rss = (dy - out.slope * dx).square().sum();
  out.rms_residual = std::sqrt(rss / static_cast<double>(n));
  if (n > 2) {
    const double s2 = rss / static_cast<double>(n - 2);
    out.slope_se = std::sqrt(s2 / sxx);
    out.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mean_x * mean_x / sxx));
  }
  return out;
}

// ----------------------------------------------------------------------------
// Quadrature histograms
// ----------------------------------------------------------------------------

Histogram2D quadrature_histogram(const Eigen::MatrixXd& samples, int bins_per_axis) {
  if (samples.cols() != 2)
    throw ConfigError("quadrature_histogram: samples must have exactly two columns");
  if (samples.rows() < 1000)
    throw ConfigError("quadrature_histogram: need at least 1000 samples");
  if (bins_per_axis < 1) throw ConfigError("quadrature_histogram: need at least one bin");

  // Symmetric range covering everything, so counts always sum to the sample
  // count and the origin sits on a bin boundary or center consistently.
  double limit = samples.cwiseAbs().maxCoeff();
  if (!(limit > 0.0)) limit = 1.0;
  const double width = 2.0 * limit / bins_per_axis;

  Histogram2D out;
  out.edges_q1 = Eigen::VectorXd::LinSpaced(bins_per_axis + 1, -limit, limit);
  out.edges_q2 = out.edges_q1;
  out.counts = Eigen::MatrixXd::Zero(bins_per_axis, bins_per_axis);

  const auto bin_of = [&](double v) {
    const auto b = static_cast<int>((v + limit) / width);
    return std::clamp(b, 0, bins_per_axis - 1);  // top edge belongs to the last bin
  };
  for (Eigen::Index k = 0; k < samples.rows(); ++k)
    out.counts(bin_of(samples(k, 0)), bin_of(samples(k, 1))) += 1.0;
  out.total = static_cast<std::size_t>(samples.rows());

  const Eigen::ArrayXd sum_axis = (samples.col(0) + samples.col(1)).array() / std::sqrt(2.0);
  const Eigen::ArrayXd diff_axis = (samples.col(0) - samples.col(1)).array() / std::sqrt(2.0);
  const auto sample_std = [](const Eigen::ArrayXd& v) {
    const double mean = v.mean();
    return std::sqrt((v - mean).square().sum() / static_cast<double>(v.size() - 1));
  };
  out.std_sum = sample_std(sum_axis);
  out.std_diff = sample_std(diff_axis);
  return out;
}

// ----------------------------------------------------------------------------
// Ensemble reductions
// ----------------------------------------------------------------------------

ValueWithError moment_functional(const EnsembleMoments& moments, const Eigen::VectorXd& weights) {
  if (weights.size() != moments.per_trajectory.cols())
    throw ConfigError("moment_functional: weight vector does not match packed moment size");
  const Eigen::VectorXd projected = moments.per_trajectory * weights;
  ValueWithError out;
  out.value = projected.mean();
  const Eigen::Index n = projected.size();
  if (n > 1) {
    const double var =
        (projected.array() - out.value).square().sum() / static_cast<double>(n - 1);
    out.se = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

ValueWithError component_variance(const EnsembleMoments& moments, int index) {
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(moments.per_trajectory.cols());
  weights(EnsembleMoments::packed_index(index, index)) = 1.0;
  return moment_functional(moments, weights);
}

MeasuredCrossQuadratures measure_cross_quadratures(const SystemConfig& config,
                                                   const EnsembleMoments& moments,
                                                   const QuadratureIndices& idx) {
  const double x_i = thermal_amplitude(config.mode_i, config.temperature);
  const double x_j = thermal_amplitude(config.mode_j, config.temperature);

  // Var((q_i/x_i +- q_j/x_j)/sqrt(2)) as a linear functional of the packed
  // second moments.
  const auto weights = [&](int i, int j, double sign) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(moments.per_trajectory.cols());
    w(EnsembleMoments::packed_index(i, i)) = 0.5 / (x_i * x_i);
    w(EnsembleMoments::packed_index(j, j)) = 0.5 / (x_j * x_j);
    w(EnsembleMoments::packed_index(i, j)) = sign / (x_i * x_j);
    return w;
  };

  MeasuredCrossQuadratures out;
  out.var_xa = moment_functional(moments, weights(idx.alpha_i, idx.alpha_j, 1.0));
  out.var_xb = moment_functional(moments, weights(idx.alpha_i, idx.alpha_j, -1.0));
  out.var_ya = moment_functional(moments, weights(idx.beta_i, idx.beta_j, 1.0));
  out.var_yb = moment_functional(moments, weights(idx.beta_i, idx.beta_j, -1.0));
  return out;
}

}  // namespace paramp
