#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "paramp/config_file.hpp"
#include "paramp/csv.hpp"
#include "paramp/errors.hpp"
#include "paramp/model.hpp"
#include "paramp/version.hpp"
#include "runners.hpp"

namespace fs = std::filesystem;
using namespace paramp;
using namespace paramp::tool;

namespace {

// Everything the command line can set, in one place so a stored argument
// list can be re-parsed identically during replay.
struct Invocation {
  std::string config_path;
  std::string out_dir = "paramp_out";
  std::uint64_t seed = 1;
  int threads = 0;

  ThresholdOptions threshold;
  GainOptions gain;
  RingdownOptions ringdown;
  SqueezeOptions squeeze;
  SpectrumOptions spectrum;
  FitOptions fit;

  std::string manifest_path;    // replay only
  std::string replay_dir;       // replay only; empty = <manifest dir>/replay
};

// Wires flags onto rival analytic/simulation selectors and resolves them to
// one EvalMode once parsing finishes.
void add_eval_mode(CLI::App* sub, EvalMode& mode) {
  auto* analytic = sub->add_flag("--analytic-only", "skip the time-domain run");
  auto* sde = sub->add_flag("--sde-only", "skip the closed-form columns");
  auto* both = sub->add_flag("--both", "evaluate both sides (default)");
  analytic->excludes(sde)->excludes(both);
  sde->excludes(both);
  sub->parse_complete_callback([sub, analytic, sde, &mode] {
    (void)sub;
    if (analytic->count() > 0) mode = EvalMode::analytic_only;
    else if (sde->count() > 0) mode = EvalMode::sde_only;
    else mode = EvalMode::both;
  });
}

struct SubApps {
  CLI::App* threshold = nullptr;
  CLI::App* gain = nullptr;
  CLI::App* ringdown = nullptr;
  CLI::App* squeeze = nullptr;
  CLI::App* spectrum = nullptr;
  CLI::App* fit = nullptr;
  CLI::App* replay = nullptr;
};

SubApps attach(CLI::App& app, Invocation& inv) {
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string);
  app.add_option("--config", inv.config_path, "INI config file (built-in defaults when absent)");
  app.add_option("--out-dir", inv.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", inv.seed, "RNG seed for stochastic runs")->capture_default_str();
  app.add_option("--threads", inv.threads,
                 "worker threads; 0 = PARAMP_THREADS env var, else all cores")
      ->capture_default_str();

  SubApps subs;

  subs.threshold = app.add_subcommand(
      "threshold", "derived quantities: susceptibilities, thresholds, saturation scales");
  subs.threshold->add_option("--sweep-g", inv.threshold.sweep_points,
                             "add a coupling sweep with this many points");
  subs.threshold->add_option("--decades", inv.threshold.sweep_decades,
                             "decades of g the sweep spans")
      ->capture_default_str();

  subs.gain = app.add_subcommand(
      "gain", "phase-sensitive gain: closed form vs time-domain steady state");
  subs.gain->add_option("--mu-list", inv.gain.mu_list,
                        "pump levels as fractions of threshold (default: the config's "
                        "pump, or a three-level demo sweep when it is off)")
      ->delimiter(',')
      ->capture_default_str();
  subs.gain->add_option("--phase-points", inv.gain.phase_points, "pump phases per level")
      ->capture_default_str();
  subs.gain->add_option("--drive-i", inv.gain.drive_i_xth,
                        "companion drive amplitude [x_th_i]")
      ->capture_default_str();
  subs.gain->add_option("--drive-j", inv.gain.drive_j_xth,
                        "observed-mode drive amplitude [x_th_j]")
      ->capture_default_str();
  add_eval_mode(subs.gain, inv.gain.mode);

  subs.ringdown = app.add_subcommand(
      "ringdown", "pump-induced linewidth: simulated ring-downs vs the two-pole formula");
  subs.ringdown->add_option("--hold-list", inv.ringdown.hold_list,
                            "held companion amplitudes [xi_j]")
      ->delimiter(',')
      ->capture_default_str();
  subs.ringdown->add_flag("--record-envelopes", inv.ringdown.record_envelopes,
                          "write each simulated envelope as envelope_<k>.csv");

  subs.squeeze = app.add_subcommand(
      "squeeze", "two-mode thermomechanical squeezing: ensemble vs closed form");
  subs.squeeze->add_option("--mu-list", inv.squeeze.mu_list,
                           "pump levels as fractions of threshold (default: the "
                           "config's pump, or 0.5 when it is off)")
      ->delimiter(',')
      ->capture_default_str();
  subs.squeeze->add_option("--ntraj", inv.squeeze.n_trajectories, "ensemble size")
      ->capture_default_str();
  subs.squeeze->add_option("--dt", inv.squeeze.dt,
                           "Euler-Maruyama step [s]; 0 = stability-guard maximum");
  subs.squeeze->add_option("--duration", inv.squeeze.duration,
                           "averaging span per trajectory [s]")
      ->capture_default_str();
  subs.squeeze->add_option("--warmup", inv.squeeze.warmup,
                           "discarded initial span [s]; 0 = auto");
  subs.squeeze->add_option("--stride", inv.squeeze.sample_stride,
                           "steps between moment accumulations")
      ->capture_default_str();
  subs.squeeze->add_option("--histogram-bins", inv.squeeze.histogram_bins,
                           "dump an (alpha_i, alpha_j) histogram with this many bins per axis");
  subs.squeeze->add_flag("--full-system", inv.squeeze.full_system,
                         "simulate the substrate quadratures too");
  add_eval_mode(subs.squeeze, inv.squeeze.mode);

  subs.spectrum = app.add_subcommand(
      "spectrum", "stationary quadrature spectra and band-limited variances");
  subs.spectrum->add_option("--omega-points", inv.spectrum.omega_points, "grid points")
      ->capture_default_str();
  subs.spectrum->add_option("--omega-span", inv.spectrum.omega_span,
                            "grid upper edge [rad/s]; 0 = auto");
  subs.spectrum->add_option("--bandwidth-hz", inv.spectrum.bandwidth_hz,
                            "also integrate the spectra over this detection bandwidth");

  subs.fit = app.add_subcommand("fit", "fit a model curve to a CSV table");
  subs.fit->add_option("kind", inv.fit.kind, "gain | ringdown | dissipation")
      ->required()
      ->check(CLI::IsMember({"gain", "ringdown", "dissipation"}));
  subs.fit->add_option("--input", inv.fit.input, "CSV file to read")->required();
  subs.fit->add_option("--column", inv.fit.column,
                       "data column (defaults: g_sde / amp_j_m / q_ratio)");
  subs.fit->add_option("--fixed-eta", inv.fit.fixed_eta,
                       "hold the drive asymmetry at this value (gain)");
  subs.fit->add_flag("--fit-phase-offset", inv.fit.fit_phase_offset,
                     "add a phase-origin nuisance parameter (gain)");
  subs.fit->add_option("--gamma-j", inv.fit.gamma_j,
                       "known bare linewidth [rad/s] (dissipation)");
  subs.fit->add_option("--floor", inv.fit.floor_fraction,
                       "noise floor as a fraction of peak, 0 for noise-free "
                       "records (ringdown)")
      ->check(CLI::Range(0.0, 1.0));

  subs.replay = app.add_subcommand(
      "replay", "re-run a manifest and verify bit-identical outputs");
  subs.replay->add_option("--manifest", inv.manifest_path, "manifest.json of the original run")
      ->required();
  subs.replay->add_option("--to", inv.replay_dir,
                          "replay output directory (default: <manifest dir>/replay)");

  for (CLI::App* sub : {subs.threshold, subs.gain, subs.ringdown, subs.squeeze, subs.spectrum,
                        subs.fit, subs.replay})
    sub->fallthrough();
  return subs;
}

// Runs the already-parsed subcommand `name` against `config`, returning the
// full record of the run.  `persist` controls whether a manifest lands next
// to the outputs (replays skip it).
RunRecord run_selected(const Invocation& inv, const std::string& name,
                       const SystemConfig& config, const fs::path& out_dir, bool persist,
                       const std::vector<std::string>& original_args) {
  fs::create_directories(out_dir);

  RunFiles files;
  if (name == "threshold") files = run_threshold(config, inv.threshold, out_dir);
  else if (name == "gain") files = run_gain(config, inv.gain, out_dir);
  else if (name == "ringdown") files = run_ringdown(config, inv.ringdown, out_dir);
  else if (name == "squeeze")
    files = run_squeeze(config, inv.squeeze, inv.seed, inv.threads, out_dir);
  else if (name == "spectrum") files = run_spectrum(config, inv.spectrum, out_dir);
  else if (name == "fit") files = run_fit(inv.fit, out_dir);
  else throw ConfigError("unknown subcommand '" + name + "'");

  RunRecord record;
  record.subcommand = name;
  record.arguments = original_args;
  record.seed = inv.seed;
  record.config = config;
  record.inputs = files.inputs;
  record.outputs = files.outputs;
  record.version = version_string;

  if (persist) {
    write_manifest(out_dir / "manifest.json", record);
    std::cout << "outputs in " << out_dir.string() << " (manifest.json records the run)\n";
  }
  return record;
}

// Removes "--name value" and "--name=value" occurrences from an argument
// list; used to override the config and output directory during replay.
void strip_option(std::vector<std::string>& args, const std::string& name) {
  for (auto it = args.begin(); it != args.end();) {
    if (*it == name) {
      it = args.erase(it);
      if (it != args.end()) it = args.erase(it);
    } else if (it->rfind(name + "=", 0) == 0) {
      it = args.erase(it);
    } else {
      ++it;
    }
  }
}

int do_replay(const Invocation& inv) {
  const RunRecord manifest = read_manifest(inv.manifest_path);
  if (manifest.subcommand == "replay")
    throw ConfigError("replay: manifest records a replay, nothing to reproduce");
  if (manifest.version != version_string)
    std::cerr << "warning: manifest written by version " << manifest.version << ", this is "
              << version_string << "\n";

  // External inputs must be unchanged or the comparison is meaningless.
  for (const FileRecord& input : manifest.inputs)
    if (hash_file(input.file) != input.hash)
      throw NumericError("replay: input " + input.file + " changed since the original run");

  // Re-parse the stored command line with the config pinned to the snapshot
  // and the outputs redirected; the stored seed always wins.
  std::vector<std::string> args = manifest.arguments;
  strip_option(args, "--config");
  strip_option(args, "--out-dir");

  Invocation replayed;
  CLI::App app{"paramp (replay)"};
  const SubApps subs = attach(app, replayed);
  (void)subs;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw ConfigError("replay: stored arguments no longer parse: " + std::string(e.what()));
  }
  const std::string name = app.get_subcommands().at(0)->get_name();
  if (name != manifest.subcommand)
    throw ConfigError("replay: stored arguments select '" + name + "' but the manifest says '" +
                      manifest.subcommand + "'");
  replayed.seed = manifest.seed;

  const fs::path replay_dir = inv.replay_dir.empty()
                                  ? fs::path(inv.manifest_path).parent_path() / "replay"
                                  : fs::path(inv.replay_dir);
  const RunRecord rerun =
      run_selected(replayed, name, manifest.config, replay_dir, false, args);

  bool all_match = rerun.outputs.size() == manifest.outputs.size();
  for (const FileRecord& original : manifest.outputs) {
    bool found = false;
    for (const FileRecord& fresh : rerun.outputs) {
      if (fresh.file != original.file) continue;
      found = true;
      const bool same = fresh.hash == original.hash;
      all_match = all_match && same;
      std::cout << "  " << original.file << ": "
                << (same ? "ok (fnv1a64 " + hash_hex(fresh.hash) + ")" : "HASH MISMATCH")
                << "\n";
    }
    if (!found) {
      all_match = false;
      std::cout << "  " << original.file << ": MISSING from replay\n";
    }
  }
  if (!all_match) throw NumericError("replay: outputs differ from the manifest");
  std::cout << "replay reproduced " << manifest.outputs.size() << " file(s) bit for bit in "
            << replay_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> original_args(argv + 1, argv + argc);

  Invocation inv;
  CLI::App app{"Simulator and analysis toolkit for substrate-mediated nondegenerate "
               "mechanical parametric amplification"};
  const SubApps subs = attach(app, inv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (subs.replay->parsed()) return do_replay(inv);

    const SystemConfig config =
        inv.config_path.empty() ? default_config() : load_config(inv.config_path);
    for (const std::string& warning : validate(config))
      std::cerr << "warning: " << warning << "\n";

    const std::string name = app.get_subcommands().at(0)->get_name();
    run_selected(inv, name, config, inv.out_dir, true, original_args);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
