#include <doctest.h>

#include <cmath>

#include "paramp/config_file.hpp"
#include "paramp/constants.hpp"
#include "paramp/errors.hpp"
#include "paramp/model.hpp"

using namespace paramp;

namespace {

// Relative closeness against reference values frozen from an independent
// numeric oracle (plain-double arithmetic outside this library).
bool close(double value, double reference, double tol = 1e-12) {
  return std::abs(value - reference) <= tol * std::abs(reference);
}

}  // namespace

TEST_CASE("susceptibility is the on-resonance response 1/(m omega gamma)") {
  ModeParams mode;
  mode.mass = 1e-6;
  mode.omega = two_pi * 1.5e6;
  mode.gamma = two_pi * 0.1;
  CHECK(close(susceptibility(mode), 0.1688686394038963));
  CHECK(close(susceptibility(mode), 1.0 / (mode.mass * mode.omega * mode.gamma)));

  // Halving the linewidth doubles the response.
  mode.gamma /= 2.0;
  CHECK(close(susceptibility(mode), 2.0 * 0.1688686394038963));
}

TEST_CASE("thermal amplitude matches sqrt(kB T / (m omega^2))") {
  const SystemConfig config = default_config();
  CHECK(close(thermal_amplitude(config.mode_i, config.temperature), 1.7483802516320738e-13));
  CHECK(close(thermal_amplitude(config.mode_j, config.temperature), 1.6391064859050693e-13));

  // Quadrupling the temperature doubles the amplitude.
  CHECK(close(thermal_amplitude(config.mode_i, 4.0 * config.temperature),
              2.0 * 1.7483802516320738e-13));
}

TEST_CASE("default config reproduces its frozen derived quantities") {
  const SystemConfig config = default_config();
  CHECK(validate(config).empty());

  const DerivedQuantities der = derive(config);
  CHECK(close(der.chi_i, 112.57909293593086));
  CHECK(close(der.chi_j, 105.5428996274352));
  CHECK(close(der.chi_s, 2.635826837729911e-07));
  CHECK(close(der.x_th_i, 1.7483802516320738e-13));
  CHECK(close(der.x_th_j, 1.6391064859050693e-13));
  // The built-in coupling is chosen to put the threshold at 40 fm.
  CHECK(close(der.x_s_th, 40e-15));
  CHECK(close(config.g, 458697761748.8941));
  CHECK(close(der.xi, 2.2282653941276087e-08));
  CHECK(close(xi_scale(swap_modes(config)), 2.3013426033030757e-08));
  CHECK(close(config.substrate.gamma, 1947.7874452256717));
  CHECK(der.mu == 0.0);
  CHECK(der.delta == 0.0);
  CHECK(close(der.gamma_bar, two_pi * 0.1));
}

TEST_CASE("threshold follows 2/(g sqrt(chi_i chi_j)) and scales with linewidths") {
  SystemConfig config = default_config();
  const double base = threshold_amplitude(config);
  CHECK(close(base, 2.0 / (config.g * std::sqrt(susceptibility(config.mode_i) *
                                                susceptibility(config.mode_j)))));

  // chi ~ 1/gamma, so gamma_i x4 and gamma_j x9 raise the threshold x6.
  config.mode_i.gamma *= 4.0;
  config.mode_j.gamma *= 9.0;
  CHECK(close(threshold_amplitude(config), 6.0 * base));
}

TEST_CASE("normalized pump is the amplitude in threshold units") {
  SystemConfig config = default_config();
  config.pump.amplitude = 0.3 * threshold_amplitude(config);
  CHECK(close(normalized_pump(config), 0.3));
  CHECK(close(derive(config).mu, 0.3));
}

TEST_CASE("swapping the membrane modes exchanges every per-mode quantity") {
  SystemConfig config = default_config();
  config.mode_i.gamma *= 2.0;  // break the i/j symmetry
  const DerivedQuantities a = derive(config);
  const DerivedQuantities b = derive(swap_modes(config));

  CHECK(a.chi_i == b.chi_j);
  CHECK(a.chi_j == b.chi_i);
  CHECK(a.x_th_i == b.x_th_j);
  CHECK(a.x_s_th == b.x_s_th);  // threshold is symmetric
  CHECK(a.delta == -b.delta);
  CHECK(a.gamma_bar == b.gamma_bar);
  CHECK(xi_scale(config) == xi_scale(swap_modes(swap_modes(config))));
}

TEST_CASE("linewidth asymmetry and mean follow their definitions") {
  SystemConfig config = default_config();
  config.mode_i.gamma = 2.0 * config.mode_j.gamma;
  const DerivedQuantities der = derive(config);
  CHECK(close(der.delta, 1.0 / 3.0));
  CHECK(close(der.gamma_bar, 1.5 * config.mode_j.gamma));
}

TEST_CASE("validate rejects unphysical parameters") {
  SystemConfig config = default_config();
  config.mode_j.mass = -1.0;
  CHECK_THROWS_AS((void)validate(config), ConfigError);

  config = default_config();
  config.substrate.omega *= 1.01;  // off the sum resonance
  CHECK_THROWS_AS((void)validate(config), ConfigError);

  config = default_config();
  config.mode_i.gamma = 2.0 * config.mode_i.omega;  // overdamped
  CHECK_THROWS_AS((void)validate(config), ConfigError);

  config = default_config();
  config.g = 0.0;
  CHECK_THROWS_AS((void)validate(config), ConfigError);
}

TEST_CASE("validate warns when its closed-form regimes are left") {
  SystemConfig config = default_config();
  config.substrate.gamma = config.mode_i.gamma;  // substrate as narrow as the membranes
  const auto warnings = validate(config);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("substrate linewidth") != std::string::npos);

  config = default_config();
  config.pump.amplitude = 1.5 * threshold_amplitude(config);
  const auto hot = validate(config);
  REQUIRE(hot.size() == 1);
  CHECK(hot[0].find("threshold") != std::string::npos);
}
