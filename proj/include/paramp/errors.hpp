#pragma once

#include <stdexcept>
#include <string>

namespace paramp {

/// Invalid or inconsistent user input (config files, CLI values, bad
/// preconditions on physical parameters).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-convergence, blow-up, non-Hurwitz drift where a
/// stationary solution was requested, and similar.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace paramp
