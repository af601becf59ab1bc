#include "paramp/sde.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "paramp/constants.hpp"
#include "paramp/errors.hpp"
#include "paramp/lyapunov.hpp"
#include "paramp/rng.hpp"

namespace paramp {

// ----------------------------------------------------------------------------
// System factories
// ----------------------------------------------------------------------------

LinearSystem fluctuation_system(const SystemConfig& config, const MeanAmplitudes& mean_amps) {
  const DriftMatrices drift = drift_matrices(config, mean_amps);
  const Matrix3d diffusion = diffusion_matrix(config);

  LinearSystem sys;
  sys.drift = Eigen::MatrixXd::Zero(6, 6);
  sys.drift.topLeftCorner<3, 3>() = drift.alpha;
  sys.drift.bottomRightCorner<3, 3>() = drift.beta;
  sys.forcing = Eigen::VectorXd::Zero(6);
  sys.diffusion.resize(6);
  sys.diffusion << diffusion(0, 0), diffusion(1, 1), diffusion(2, 2),  //
      diffusion(0, 0), diffusion(1, 1), diffusion(2, 2);
  sys.labels = {"alpha_i", "alpha_j", "alpha_s", "beta_i", "beta_j", "beta_s"};
  const double x_i = thermal_amplitude(config.mode_i, config.temperature);
  const double x_j = thermal_amplitude(config.mode_j, config.temperature);
  const double x_s = thermal_amplitude(config.substrate, config.temperature);
  sys.thermal_scale.resize(6);
  sys.thermal_scale << x_i, x_j, x_s, x_i, x_j, x_s;
  return sys;
}

QuadratureIndices fluctuation_indices() { return {0, 1, 3, 4}; }

LinearSystem membrane_fluctuation_system(const SystemConfig& config) {
  const DriftMatrices drift =
      drift_matrices(config, MeanAmplitudes::pump_only(config));
  const Matrix3d diffusion = diffusion_matrix(config);

  LinearSystem sys;
  sys.drift = Eigen::MatrixXd::Zero(4, 4);
  sys.drift.topLeftCorner<2, 2>() = drift.alpha.topLeftCorner<2, 2>();
  sys.drift.bottomRightCorner<2, 2>() = drift.beta.topLeftCorner<2, 2>();
  sys.forcing = Eigen::VectorXd::Zero(4);
  sys.diffusion.resize(4);
  sys.diffusion << diffusion(0, 0), diffusion(1, 1), diffusion(0, 0), diffusion(1, 1);
  sys.labels = {"alpha_i", "alpha_j", "beta_i", "beta_j"};
  const double x_i = thermal_amplitude(config.mode_i, config.temperature);
  const double x_j = thermal_amplitude(config.mode_j, config.temperature);
  sys.thermal_scale.resize(4);
  sys.thermal_scale << x_i, x_j, x_i, x_j;
  return sys;
}

QuadratureIndices membrane_indices() { return {0, 1, 2, 3}; }

LinearSystem driven_membrane_system(const SystemConfig& config, const Drive& drive_i,
                                    const Drive& drive_j, bool pump_on) {
  const double chi_i = susceptibility(config.mode_i);
  const double chi_j = susceptibility(config.mode_j);
  const double gi = config.mode_i.gamma;
  const double gj = config.mode_j.gamma;
  const double amp = pump_on ? config.pump.amplitude : 0.0;
  const double c_i = gi * chi_i * 0.5 * config.g * amp;
  const double c_j = gj * chi_j * 0.5 * config.g * amp;
  // For a pump of nonzero phase the two quadrature sectors mix, so this
  // system is written directly in the lab frame.
  const double cos_s = std::cos(config.pump.phase);
  const double sin_s = std::sin(config.pump.phase);

  LinearSystem sys;
  sys.drift.resize(4, 4);
  sys.drift << -gi, c_i * cos_s, 0.0, c_i * sin_s,  //
      c_j * cos_s, -gj, c_j * sin_s, 0.0,           //
      0.0, c_i * sin_s, -gi, -c_i * cos_s,          //
      c_j * sin_s, 0.0, -c_j * cos_s, -gj;
  sys.drift *= 0.5;

  sys.forcing.resize(4);
  sys.forcing << gi * chi_i * drive_i.force * std::sin(drive_i.phase),
      gj * chi_j * drive_j.force * std::sin(drive_j.phase),
      -gi * chi_i * drive_i.force * std::cos(drive_i.phase),
      -gj * chi_j * drive_j.force * std::cos(drive_j.phase);
  sys.forcing *= 0.5;

  const double kt = k_boltzmann * config.temperature;
  const double d_i = gi * kt / (config.mode_i.mass * config.mode_i.omega * config.mode_i.omega);
  const double d_j = gj * kt / (config.mode_j.mass * config.mode_j.omega * config.mode_j.omega);
  sys.diffusion.resize(4);
  sys.diffusion << d_i, d_j, d_i, d_j;
  sys.labels = {"alpha_i", "alpha_j", "beta_i", "beta_j"};

  const double x_i = thermal_amplitude(config.mode_i, config.temperature);
  const double x_j = thermal_amplitude(config.mode_j, config.temperature);
  // Driven runs sit far above the thermal scale; include the coherent
  // response in the blow-up reference so the guard stays meaningful.
  const double coherent =
      std::max(chi_i * drive_i.force, chi_j * drive_j.force);
  sys.thermal_scale.resize(4);
  sys.thermal_scale << std::max(x_i, coherent), std::max(x_j, coherent),
      std::max(x_i, coherent), std::max(x_j, coherent);
  return sys;
}

LinearSystem ringdown_pair_system(const SystemConfig& config, double x_hold) {
  const double gj = config.mode_j.gamma;
  const double gs = config.substrate.gamma;
  const double b_j = gj * susceptibility(config.mode_j) * 0.5 * config.g * x_hold;
  const double b_s = gs * susceptibility(config.substrate) * 0.5 * config.g * x_hold;

  LinearSystem sys;
  sys.drift.resize(2, 2);
  sys.drift << -gj, b_j,  //
      -b_s, -gs;
  sys.drift *= 0.5;
  sys.forcing = Eigen::VectorXd::Zero(2);
  sys.diffusion = Eigen::VectorXd::Zero(2);
  sys.labels = {"a_j", "a_s"};
  sys.thermal_scale.resize(2);
  sys.thermal_scale << thermal_amplitude(config.mode_j, config.temperature),
      thermal_amplitude(config.substrate, config.temperature);
  return sys;
}

// ----------------------------------------------------------------------------
// Deterministic evolution
// ----------------------------------------------------------------------------

namespace {

// Exact one-step affine propagator (E, r) with x -> E x + r, obtained from
// the exponential of the augmented matrix [[M, f], [0, 0]] * dt.  Holds for
// singular M too.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> step_propagator(const LinearSystem& system,
                                                            double dt) {
  const Eigen::Index n = system.dim();
  Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(n + 1, n + 1);
  augmented.topLeftCorner(n, n) = system.drift;
  augmented.topRightCorner(n, 1) = system.forcing;
  const Eigen::MatrixXd exp_augmented = (augmented * dt).exp();
  return {exp_augmented.topLeftCorner(n, n), exp_augmented.topRightCorner(n, 1)};
}

}  // namespace

Eigen::VectorXd evolve_deterministic(const LinearSystem& system, const Eigen::VectorXd& x0,
                                     double dt, long n_steps) {
  if (!(dt > 0.0) || n_steps < 0) throw ConfigError("evolve_deterministic: dt must be positive");
  auto [propagator, offset] = step_propagator(system, dt);
  Eigen::VectorXd x = x0;
  for (long k = 0; k < n_steps; ++k) x = propagator * x + offset;
  return x;
}

Eigen::MatrixXd deterministic_trajectory(const LinearSystem& system, const Eigen::VectorXd& x0,
                                         double dt, long n_steps) {
  if (!(dt > 0.0) || n_steps < 0)
    throw ConfigError("deterministic_trajectory: dt must be positive");
  auto [propagator, offset] = step_propagator(system, dt);
  Eigen::MatrixXd path(n_steps + 1, system.dim());
  Eigen::VectorXd x = x0;
  path.row(0) = x.transpose();
  for (long k = 1; k <= n_steps; ++k) {
    x = propagator * x + offset;
    path.row(k) = x.transpose();
  }
  return path;
}

Eigen::VectorXd forced_equilibrium(const LinearSystem& system) {
  if (!is_hurwitz(system.drift))
    throw NumericError("forced_equilibrium: drift is not stable, no equilibrium is reached");
  return system.drift.partialPivLu().solve(-system.forcing);
}

// ----------------------------------------------------------------------------
// Stochastic ensembles
// ----------------------------------------------------------------------------

int EnsembleMoments::packed_index(int row, int col) {
  const int lo = std::min(row, col);
  const int hi = std::max(row, col);
  return hi * (hi + 1) / 2 + lo;
}

Eigen::MatrixXd EnsembleMoments::second_moment() const {
  const Eigen::VectorXd packed = per_trajectory.colwise().mean();
  Eigen::MatrixXd m(dim, dim);
  for (int col = 0; col < dim; ++col)
    for (int row = 0; row <= col; ++row) m(row, col) = m(col, row) = packed(packed_index(row, col));
  return m;
}

Eigen::MatrixXd EnsembleMoments::second_moment_se() const {
  const Eigen::Index n = per_trajectory.rows();
  if (n < 2) return Eigen::MatrixXd::Zero(dim, dim);
  const Eigen::RowVectorXd mean = per_trajectory.colwise().mean();
  const Eigen::RowVectorXd var =
      (per_trajectory.rowwise() - mean).array().square().colwise().sum() /
      static_cast<double>(n - 1);
  Eigen::MatrixXd se(dim, dim);
  for (int col = 0; col < dim; ++col)
    for (int row = 0; row <= col; ++row)
      se(row, col) = se(col, row) = std::sqrt(var(packed_index(row, col)) / static_cast<double>(n));
  return se;
}

namespace {

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PARAMP_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void check_options(const LinearSystem& system, const EnsembleOptions& options) {
  if (!(options.dt > 0.0)) throw ConfigError("ensemble: dt must be positive");
  if (!(options.duration > 0.0)) throw ConfigError("ensemble: duration must be positive");
  if (options.warmup < 0.0) throw ConfigError("ensemble: warmup must be non-negative");
  if (options.n_trajectories < 1) throw ConfigError("ensemble: need at least one trajectory");
  if (options.sample_stride < 1) throw ConfigError("ensemble: sample_stride must be >= 1");
  if (system.dim() < 1 || system.diffusion.size() != system.dim() ||
      system.forcing.size() != system.dim() || system.thermal_scale.size() != system.dim())
    throw ConfigError("ensemble: inconsistent system dimensions");

  // Euler-Maruyama needs to resolve the fastest decay in the system.  The
  // drift diagonal holds -gamma/2 per quadrature, so the stiffest rate is
  // twice its largest magnitude; demand at least 50 steps per 1/gamma_max.
  const double gamma_max = 2.0 * system.drift.diagonal().cwiseAbs().maxCoeff();
  if (gamma_max > 0.0 && options.dt > 1.0 / (50.0 * gamma_max))
    throw ConfigError("ensemble: dt " + std::to_string(options.dt) +
                      " too coarse for the stiffest decay rate; need dt <= " +
                      std::to_string(1.0 / (50.0 * gamma_max)));
}

// Rows of a column-major matrix are strided, so trajectory outputs bind
// through a stride-agnostic reference.
using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

// Euler-Maruyama integration of one trajectory, accumulating time-averaged
// second moments after the warm-up.  Templated on the compile-time state
// dimension so the per-step algebra unrolls; N = Eigen::Dynamic handles any
// remaining sizes.
template <int N>
void run_trajectory(const LinearSystem& system, const EnsembleOptions& options, long warm_steps,
                    long main_steps, std::uint64_t stream, RowRef packed_out, RowRef mean_out) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  const int n = static_cast<int>(system.dim());

  const Mat drift = system.drift;
  const Vec forcing = system.forcing;
  const Vec noise_scale = (system.diffusion * options.dt).cwiseSqrt();
  const double guard = options.blowup_factor * system.thermal_scale.maxCoeff();
  const double dt = options.dt;

  GaussianStream gauss(options.seed, stream);
  Vec x = Vec::Zero(n);
  for (int k = 0; k < n; ++k) x(k) = system.thermal_scale(k) * gauss.next();

  Vec noise = Vec::Zero(n);
  const auto step = [&] {
    for (int k = 0; k < n; ++k) noise(k) = noise_scale(k) * gauss.next();
    x += (drift * x + forcing) * dt + noise;
  };

  for (long s = 0; s < warm_steps; ++s) step();

  Eigen::RowVectorXd packed = Eigen::RowVectorXd::Zero(packed_out.size());
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(n);
  long n_samples = 0;
  for (long s = 0; s < main_steps; ++s) {
    step();
    if (s % options.sample_stride != 0) continue;
    if (x.cwiseAbs().maxCoeff() > guard)
      throw NumericError(
          "ensemble: trajectory diverged (pump at or above threshold, or dt too coarse)");
    int p = 0;
    for (int col = 0; col < n; ++col)
      for (int row = 0; row <= col; ++row, ++p) packed(p) += x(row) * x(col);
    mean += x.transpose();
    ++n_samples;
  }

  packed_out = packed / static_cast<double>(n_samples);
  mean_out = mean / static_cast<double>(n_samples);
}

void run_trajectory_dispatch(const LinearSystem& system, const EnsembleOptions& options,
                             long warm_steps, long main_steps, std::uint64_t stream,
                             RowRef packed_out, RowRef mean_out) {
  switch (system.dim()) {
    case 2:
      run_trajectory<2>(system, options, warm_steps, main_steps, stream, packed_out, mean_out);
      break;
    case 3:
      run_trajectory<3>(system, options, warm_steps, main_steps, stream, packed_out, mean_out);
      break;
    case 4:
      run_trajectory<4>(system, options, warm_steps, main_steps, stream, packed_out, mean_out);
      break;
    case 6:
      run_trajectory<6>(system, options, warm_steps, main_steps, stream, packed_out, mean_out);
      break;
    default:
      run_trajectory<Eigen::Dynamic>(system, options, warm_steps, main_steps, stream, packed_out,
                                     mean_out);
      break;
  }
}

}  // namespace

EnsembleMoments simulate_ensemble(const LinearSystem& system, const EnsembleOptions& options) {
  check_options(system, options);
  const int n = static_cast<int>(system.dim());
  const long warm_steps = std::lround(options.warmup / options.dt);
  const long main_steps = std::lround(options.duration / options.dt);
  if (main_steps < 1) throw ConfigError("ensemble: duration shorter than one step");

  EnsembleMoments result;
  result.dim = n;
  result.options = options;
  result.samples_per_trajectory = (main_steps + options.sample_stride - 1) / options.sample_stride;
  result.per_trajectory.resize(options.n_trajectories, n * (n + 1) / 2);

  // Each trajectory draws from its own counter-derived stream and writes to
  // its own rows, so the outcome is independent of the thread layout.
  Eigen::MatrixXd means(options.n_trajectories, n);
  const int n_threads = std::min(resolve_thread_count(options.n_threads),
                                 options.n_trajectories);
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&](int first) {
    try {
      for (int t = first; t < options.n_trajectories; t += n_threads) {
        run_trajectory_dispatch(system, options, warm_steps, main_steps,
                                static_cast<std::uint64_t>(t), result.per_trajectory.row(t),
                                means.row(t));
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  result.mean_state = means.colwise().mean().transpose();
  return result;
}

Eigen::MatrixXd simulate_path(const LinearSystem& system, const EnsembleOptions& options,
                              std::uint64_t stream) {
  check_options(system, options);
  const int n = static_cast<int>(system.dim());
  const long warm_steps = std::lround(options.warmup / options.dt);
  const long main_steps = std::lround(options.duration / options.dt);

  GaussianStream gauss(options.seed, stream);
  Eigen::VectorXd x(n);
  for (int k = 0; k < n; ++k) x(k) = system.thermal_scale(k) * gauss.next();

  const Eigen::VectorXd noise_scale = (system.diffusion * options.dt).cwiseSqrt();
  const double guard = options.blowup_factor * system.thermal_scale.maxCoeff();
  const auto step = [&] {
    Eigen::VectorXd noise(n);
    for (int k = 0; k < n; ++k) noise(k) = noise_scale(k) * gauss.next();
    x += (system.drift * x + system.forcing) * options.dt + noise;
    if (x.cwiseAbs().maxCoeff() > guard)
      throw NumericError("path: trajectory diverged (pump above threshold, or dt too coarse)");
  };

  for (long s = 0; s < warm_steps; ++s) step();

  const long n_rows = main_steps / options.sample_stride + 1;
  Eigen::MatrixXd path(n_rows, n);
  path.row(0) = x.transpose();
  long row = 1;
  for (long s = 1; s <= main_steps && row < n_rows; ++s) {
    step();
    if (s % options.sample_stride == 0) path.row(row++) = x.transpose();
  }
  return path.topRows(row);
}

}  // namespace paramp
