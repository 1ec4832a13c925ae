#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ybcav/atomic.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

enum class BeamPolarization { pi, sigma_plus, sigma_minus, linear_y };

inline std::string to_string(BeamPolarization p) {
  switch (p) {
    case BeamPolarization::pi: return "pi";
    case BeamPolarization::sigma_plus: return "sigma_plus";
    case BeamPolarization::sigma_minus: return "sigma_minus";
    case BeamPolarization::linear_y: return "linear_y";
  }
  return "?";
}

inline BeamPolarization beam_polarization_from_string(const std::string& s) {
  if (s == "pi") return BeamPolarization::pi;
  if (s == "sigma_plus") return BeamPolarization::sigma_plus;
  if (s == "sigma_minus") return BeamPolarization::sigma_minus;
  if (s == "linear_y") return BeamPolarization::linear_y;
  throw ConfigError("unknown beam polarization '" + s + "'");
}

/// Gaussian beam propagating along x, focused at the origin.
///
/// `detuning` is the laser angular frequency minus the reference transition:
/// 1S0 - 3P1(F'=3/2) for the excitation beam, 3P1(F'=3/2) - 3D1(F=1/2) for the
/// light-shift beam. `axis_offset` displaces the beam axis vertically (along y).
struct BeamParams {
  double power = 0.0;
  double waist = 1e-6;
  double detuning = 0.0;
  BeamPolarization polarization = BeamPolarization::pi;
  double axis_offset = 0.0;

  void validate() const {
    require(std::isfinite(power) && power >= 0.0, "beam power must be nonnegative");
    require(std::isfinite(waist) && waist > 0.0, "beam waist must be positive");
    require(std::isfinite(detuning), "beam detuning must be finite");
    require(std::isfinite(axis_offset), "beam axis offset must be finite");
  }

  double peak_intensity() const { return 2.0 * power / (pi * waist * waist); }
};

/// Distance of a point from the beam axis.
inline double beam_radial_offset(const Vec3& p, const BeamParams& beam) {
  return std::hypot(p.y - beam.axis_offset, p.z);
}

/// I(r) = 2P / (pi w^2) exp(-2 r^2 / w^2), in W/m^2.
inline double beam_intensity(double radial_offset, const BeamParams& beam) {
  beam.validate();
  const double w2 = beam.waist * beam.waist;
  return beam.peak_intensity() * std::exp(-2.0 * radial_offset * radial_offset / w2);
}

/// AC Stark shifts of 3P1(F'=3/2), all angular frequencies.
struct ShiftResult {
  double delta_32 = 0.0;
  double delta_12 = 0.0;
  double splitting = 0.0;

  static ShiftResult from_components(double d32, double d12) { return {d32, d12, d32 - d12}; }
  static ShiftResult none() { return {}; }

  /// Shift of 3P1(F'=3/2, m).
  double of(HalfInt m) const { return abs(m) == half(3) ? delta_32 : delta_12; }
};

struct StarkOptions {
  // Smallest allowed |detuning| from any coupled 3D1 component, in units of
  // the 3P1 - 3D1 decay rate.
  double floor_linewidths = 10.0;
};

namespace detail {

struct StarkComponent {
  HalfInt f_upper;
  double strength = 0.0;  // |<3D1 F'' m| d_0 |3P1 3/2 m>|^2 / |<J'||d||J>|^2
  double detuning = 0.0;  // laser minus component resonance
};

inline std::vector<StarkComponent> stark_components(HalfInt m, const BeamParams& beam, const LevelScheme& scheme) {
  std::vector<StarkComponent> out;
  for (HalfInt f_upper : {half(1), half(3)}) {
    const double s = hyperfine_line_strength(kJ_P1, kF_excited, m, kJ_D1, f_upper, kNuclearSpin, 0);
    if (s == 0.0) continue;
    // F''=3/2 lies below F''=1/2 by the hyperfine splitting.
    const double det = f_upper == half(1) ? beam.detuning : beam.detuning + scheme.d1_hyperfine_splitting;
    out.push_back({f_upper, s, det});
  }
  return out;
}

// Omega^2 per unit intensity for a transition of unit relative strength:
// 18 pi c^2 A / (hbar omega^3), with A the 3D1 -> 3P1 decay rate.
inline double rabi_squared_per_intensity(const LevelScheme& scheme) {
  const double omega = two_pi * speed_of_light / kInfraredWavelength;
  const double c2 = speed_of_light * speed_of_light;
  return scheme.stark_scale * 18.0 * pi * c2 * scheme.gamma_d1_line / (hbar * omega * omega * omega);
}

}  // namespace detail

/// Light shift of 3P1(F'=3/2, m) produced by a pi-polarized 1539 nm beam at
/// `position`. Second-order perturbation theory summed over the 3D1 hyperfine
/// components: sum_k Omega_k^2 / (4 Delta_k).
inline double stark_shift(HalfInt sublevel_m, const BeamParams& beam, const LevelScheme& scheme, const Vec3& position,
                          const StarkOptions& opts = {}) {
  beam.validate();
  if (abs(sublevel_m) > kF_excited || sublevel_m.is_integer())
    throw DomainError("3P1(F'=3/2) sublevel m must be +-1/2 or +-3/2, got " + sublevel_m.str());
  if (beam.polarization != BeamPolarization::pi) throw DomainError("light-shift beam must be pi-polarized");

  const double intensity = beam_intensity(beam_radial_offset(position, beam), beam);
  const double floor = opts.floor_linewidths * scheme.gamma_d1_line;
  const double per_intensity = detail::rabi_squared_per_intensity(scheme);
  double shift = 0.0;
  for (const auto& c : detail::stark_components(sublevel_m, beam, scheme)) {
    if (std::abs(c.detuning) < floor)
      throw NumericalError("light-shift beam within " + std::to_string(opts.floor_linewidths) +
                           " linewidths of a 3D1 hyperfine resonance");
    shift += per_intensity * intensity * c.strength / (4.0 * c.detuning);
  }
  return shift;
}

inline ShiftResult stark_shifts(const BeamParams& beam, const LevelScheme& scheme, const Vec3& position,
                                const StarkOptions& opts = {}) {
  return ShiftResult::from_components(stark_shift(half(3), beam, scheme, position, opts),
                                      stark_shift(half(1), beam, scheme, position, opts));
}

/// delta_12 / delta_32 for a beam of the given detuning. Independent of
/// intensity and of the dipole calibration.
inline double shift_ratio(const BeamParams& beam, const LevelScheme& scheme) {
  double num = 0.0, den = 0.0;
  for (const auto& c : detail::stark_components(half(1), beam, scheme)) num += c.strength / c.detuning;
  for (const auto& c : detail::stark_components(half(3), beam, scheme)) den += c.strength / c.detuning;
  if (den == 0.0) throw NumericalError("m'=3/2 light shift vanishes for this detuning");
  return num / den;
}

/// Light-shift beam used for the level engineering: 9 mW, w = 50 um,
/// pi-polarized, 300 MHz red of 3P1(F'=3/2) - 3D1(F=1/2).
inline BeamParams reference_light_shift_beam() {
  return {milliwatts(9.0), micrometers(50.0), -mhz(300.0), BeamPolarization::pi, 0.0};
}

/// Infers the m'=+-1/2 shift from a measured m'=+-3/2 shift through the
/// ratio of summed strength/detuning terms.
inline ShiftResult sublevel_splitting(double delta_32_measured, const LevelScheme& scheme,
                                      const BeamParams& beam = reference_light_shift_beam()) {
  return ShiftResult::from_components(delta_32_measured, delta_32_measured * shift_ratio(beam, scheme));
}

/// Pointwise shifts over a grid of positions.
inline std::vector<ShiftResult> shift_field(std::span<const Vec3> grid, const BeamParams& beam,
                                            const LevelScheme& scheme, const StarkOptions& opts = {}) {
  if (grid.empty()) throw DomainError("shift_field needs a nonempty grid");
  std::vector<ShiftResult> out;
  out.reserve(grid.size());
  for (const auto& p : grid) out.push_back(stark_shifts(beam, scheme, p, opts));
  return out;
}

/// Dipole scale that makes the m'=3/2 shift at the beam centre equal
/// `target_delta_32`. Used once to freeze SchemeConfig::stark_scale.
inline double calibrate_stark_scale(double target_delta_32, const BeamParams& beam, LevelScheme scheme) {
  scheme.stark_scale = 1.0;
  const double raw = stark_shift(half(3), beam, scheme, Vec3{});
  if (raw == 0.0) throw NumericalError("cannot calibrate against a vanishing shift");
  return target_delta_32 / raw;
}

}  // namespace ybcav
