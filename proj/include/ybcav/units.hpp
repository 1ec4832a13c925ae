#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ybcav {

// Physical constants (SI, CODATA 2018 exact where defined).
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double planck = 6.62607015e-34;
inline constexpr double hbar = planck / two_pi;
inline constexpr double speed_of_light = 299792458.0;
inline constexpr double standard_gravity = 9.80665;

// All rates and frequencies are carried internally as angular frequencies
// (rad/s). These helpers convert to and from ordinary frequency in MHz or kHz.
constexpr double mhz(double f_mhz) { return two_pi * 1e6 * f_mhz; }
constexpr double khz(double f_khz) { return two_pi * 1e3 * f_khz; }
constexpr double to_mhz(double omega) { return omega / (two_pi * 1e6); }

constexpr double micrometers(double um) { return um * 1e-6; }
constexpr double milliwatts(double mw) { return mw * 1e-3; }

/// Cartesian position in the cavity frame.
///
/// x runs along the propagation axis of the excitation and light-shift
/// beams, y is vertical (atoms fall toward -y), z is the cavity axis and
/// the quantization axis. The cavity mode centre and both beam foci sit at
/// the origin.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Invalid parameter set or input file.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Quantum number or argument outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Solver failure: singular system, non-convergence, step underflow.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operators with inconsistent dimensions.
class ModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace ybcav
