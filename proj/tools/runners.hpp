#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "paramp/model.hpp"

namespace paramp::tool {

/// What a runner touched on disk: tables written under the output directory,
/// plus (for fits) the external files it consumed.
struct RunFiles {
  std::vector<FileRecord> outputs;
  std::vector<FileRecord> inputs;
};

/// Which side(s) of the analytic/simulation comparison a command evaluates.
/// Skipped columns are written as nan so table shapes never change.
enum class EvalMode { analytic_only, sde_only, both };

struct ThresholdOptions {
  int sweep_points = 0;        // >0: add a coupling sweep table
  double sweep_decades = 3.0;  // total decades of g, centered on the config value
};

struct GainOptions {
  std::vector<double> mu_list;  // empty: config pump level, or a demo sweep
  int phase_points = 20;
  double drive_i_xth = 400.0;  // companion drive amplitude, in units of x_th_i
  double drive_j_xth = 35.0;   // observed-mode drive amplitude, in units of x_th_j
  EvalMode mode = EvalMode::both;
};

struct RingdownOptions {
  std::vector<double> hold_list{0.0, 0.25, 0.5, 0.75, 1.0};  // units of xi_j
  bool record_envelopes = false;
};

struct SqueezeOptions {
  std::vector<double> mu_list;  // empty: config pump level, or 0.5
  int n_trajectories = 256;
  double dt = 0.0;        // [s]; 0: largest step the stability guard allows
  double duration = 60.0; // [s]
  double warmup = 0.0;    // [s]; 0: auto from the slowest relaxation rate
  int sample_stride = 8;
  int histogram_bins = 0;    // >0: dump an (alpha_i, alpha_j) histogram per mu
  bool full_system = false;  // simulate the substrate quadratures too
  EvalMode mode = EvalMode::both;
};

struct SpectrumOptions {
  int omega_points = 400;
  double omega_span = 0.0;    // [rad/s], 0: auto from the pumped linewidths
  double bandwidth_hz = 0.0;  // >0: add a band-limited variance table
};

struct FitOptions {
  std::string kind;    // gain | ringdown | dissipation
  std::string input;   // CSV file to read
  std::string column;  // data column; empty picks the kind's default
  std::optional<double> fixed_eta;
  bool fit_phase_offset = false;
  double gamma_j = 0.0;          // dissipation: known bare linewidth [rad/s]
  double floor_fraction = 1e-12; // ringdown: noise floor as a fraction of peak
};

RunFiles run_threshold(const SystemConfig& config, const ThresholdOptions& opt,
                       const std::filesystem::path& out_dir);
RunFiles run_gain(const SystemConfig& config, const GainOptions& opt,
                  const std::filesystem::path& out_dir);
RunFiles run_ringdown(const SystemConfig& config, const RingdownOptions& opt,
                      const std::filesystem::path& out_dir);
RunFiles run_squeeze(const SystemConfig& config, const SqueezeOptions& opt, std::uint64_t seed,
                     int threads, const std::filesystem::path& out_dir);
RunFiles run_spectrum(const SystemConfig& config, const SpectrumOptions& opt,
                      const std::filesystem::path& out_dir);
RunFiles run_fit(const FitOptions& opt, const std::filesystem::path& out_dir);

}  // namespace paramp::tool
