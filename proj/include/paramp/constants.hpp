#pragma once

namespace paramp {

// Boltzmann constant, exact SI value. [J/K]
inline constexpr double k_boltzmann = 1.380649e-23;

inline constexpr double pi = 3.1415926535897932384626433832795;
inline constexpr double two_pi = 2.0 * pi;

}  // namespace paramp
