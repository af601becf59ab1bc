#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "paramp/analytic.hpp"
#include "paramp/model.hpp"

namespace paramp {

// The quadrature dynamics of every configuration we simulate is a linear
// Langevin system
//
//   dx = (M x + f) dt + sqrt(diag(d)) dW,
//
// so the simulator works on this normal form and small factories below build
// the specific cases (fluctuations around the pumped state, driven response,
// pump-mediated ring-down).

struct LinearSystem {
  Eigen::MatrixXd drift;              // M [1/s]
  Eigen::VectorXd forcing;            // f [m/s]
  Eigen::VectorXd diffusion;          // diagonal of the noise intensity D [m^2/s]
  std::vector<std::string> labels;    // one label per state component
  Eigen::VectorXd thermal_scale;      // per-component thermal rms, used for
                                      // initial draws and the blow-up guard [m]

  [[nodiscard]] Eigen::Index dim() const { return drift.rows(); }
};

/// Component order used by the quadrature factories.
struct QuadratureIndices {
  int alpha_i = 0;
  int alpha_j = 1;
  int beta_i = 2;
  int beta_j = 3;
};

/// Fluctuations of all three modes around the pumped state: the two
/// quadrature sectors side by side, state order
/// (alpha_i, alpha_j, alpha_S, beta_i, beta_j, beta_S).
[[nodiscard]] LinearSystem fluctuation_system(const SystemConfig& config,
                                              const MeanAmplitudes& mean_amps);
[[nodiscard]] QuadratureIndices fluctuation_indices();

/// Membrane-only reduction (alpha_i, alpha_j, beta_i, beta_j) with the pump
/// held at its configured amplitude.  Exactly equivalent to the pump-only
/// fluctuation_system, whose substrate rows and columns vanish.
[[nodiscard]] LinearSystem membrane_fluctuation_system(const SystemConfig& config);
[[nodiscard]] QuadratureIndices membrane_indices();

/// Membrane quadratures with resonant drives folded into the forcing vector,
/// for steady-state response runs.  `pump_on` toggles the parametric
/// coupling without touching the drives.
[[nodiscard]] LinearSystem driven_membrane_system(const SystemConfig& config,
                                                  const Drive& drive_i, const Drive& drive_j,
                                                  bool pump_on);

/// Ring-down pair (A_j, A_S) while mode i is pinned at displacement `x_hold`:
/// the up-conversion channel that produces the pump-induced linewidth.
/// Noise-free by construction.
[[nodiscard]] LinearSystem ringdown_pair_system(const SystemConfig& config, double x_hold);

// ============================================================================
// Deterministic (noise-free) evolution
// ============================================================================

/// Propagate x' = M x + f over n_steps of size dt using the exact
/// exponential propagator of the step (computed once), so the result carries
/// no discretization error.
[[nodiscard]] Eigen::VectorXd evolve_deterministic(const LinearSystem& system,
                                                   const Eigen::VectorXd& x0, double dt,
                                                   long n_steps);

/// Same, but returns the whole sampled path: row k is the state at k*dt,
/// including row 0 = x0.
[[nodiscard]] Eigen::MatrixXd deterministic_trajectory(const LinearSystem& system,
                                                       const Eigen::VectorXd& x0, double dt,
                                                       long n_steps);

/// Forced equilibrium -M^{-1} f.  Throws NumericError if the drift is not
/// Hurwitz (no stable equilibrium to converge to).
[[nodiscard]] Eigen::VectorXd forced_equilibrium(const LinearSystem& system);

// ============================================================================
// Stochastic ensembles
// ============================================================================

struct EnsembleOptions {
  double dt = 1e-4;          // Euler-Maruyama step [s]
  double duration = 10.0;    // averaging span per trajectory, after warm-up [s]
  double warmup = 0.0;       // discarded initial span [s]
  int n_trajectories = 256;
  std::uint64_t seed = 1;
  int sample_stride = 1;     // accumulate moments every this many steps
  int n_threads = 0;         // 0: use PARAMP_THREADS env var, else hardware
  double blowup_factor = 1e6;  // abort when |x| exceeds this times the
                               // largest thermal scale
};

/// Ensemble statistics built from per-trajectory time averages.  Each
/// trajectory contributes one time-averaged moment matrix; storing them all
/// keeps the standard error of any derived quantity computable afterwards.
struct EnsembleMoments {
  // Row t holds trajectory t's time-averaged x x^T, packed as the upper
  // triangle in the order (0,0), (0,1), (1,1), (0,2), ...
  Eigen::MatrixXd per_trajectory;
  Eigen::VectorXd mean_state;  // grand mean over time and trajectories [m]
  int dim = 0;
  long samples_per_trajectory = 0;
  EnsembleOptions options;

  static int packed_index(int row, int col);
  [[nodiscard]] int packed_size() const { return dim * (dim + 1) / 2; }

  /// Grand second-moment matrix (mean over trajectories).
  [[nodiscard]] Eigen::MatrixXd second_moment() const;
  /// Entrywise standard error of second_moment() from trajectory scatter.
  [[nodiscard]] Eigen::MatrixXd second_moment_se() const;
};

/// Integrate an ensemble of independent trajectories with Euler-Maruyama.
/// Each trajectory starts from an independent thermal draw, discards
/// `warmup`, then accumulates second moments over `duration`.  Trajectory t
/// always consumes Gaussian stream (seed, t), so results are bit-identical
/// for any thread count.  Throws NumericError on blow-up.
[[nodiscard]] EnsembleMoments simulate_ensemble(const LinearSystem& system,
                                                const EnsembleOptions& options);

/// Single stochastic path sampled every `sample_stride` steps (for
/// inspection and trajectory dumps).  Row k is the state after k strides;
/// uses Gaussian stream (seed, stream).
[[nodiscard]] Eigen::MatrixXd simulate_path(const LinearSystem& system,
                                            const EnsembleOptions& options,
                                            std::uint64_t stream = 0);

}  // namespace paramp
