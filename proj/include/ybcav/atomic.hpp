#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ybcav/angular.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

enum class Term { S0, P1, D1 };

/// Spherical polarization component q = m_excited - m_ground.
enum class Polarization { sigma_plus, pi, sigma_minus };

constexpr int helicity(Polarization p) {
  switch (p) {
    case Polarization::sigma_plus: return +1;
    case Polarization::pi: return 0;
    case Polarization::sigma_minus: return -1;
  }
  return 0;
}

constexpr Polarization polarization_from_helicity(int q) {
  if (q > 0) return Polarization::sigma_plus;
  if (q < 0) return Polarization::sigma_minus;
  return Polarization::pi;
}

constexpr Polarization mirror(Polarization p) { return polarization_from_helicity(-helicity(p)); }

inline std::string to_string(Polarization p) {
  switch (p) {
    case Polarization::sigma_plus: return "sigma_plus";
    case Polarization::pi: return "pi";
    case Polarization::sigma_minus: return "sigma_minus";
  }
  return "?";
}

/// Nuclear spin qubit basis: up is m_I = +1/2, down is m_I = -1/2 of 1S0.
enum class Spin { up, down };

constexpr HalfInt ground_m(Spin s) { return s == Spin::up ? half(1) : half(-1); }
constexpr Spin flipped(Spin s) { return s == Spin::up ? Spin::down : Spin::up; }
inline std::string to_string(Spin s) { return s == Spin::up ? "up" : "down"; }

/// The polarization that drives the cyclic transition of a spin state.
constexpr Polarization desired_polarization(Spin s) {
  return s == Spin::up ? Polarization::sigma_plus : Polarization::sigma_minus;
}

struct Sublevel {
  Term term = Term::S0;
  HalfInt F;
  HalfInt m;

  friend bool operator==(const Sublevel&, const Sublevel&) = default;
};

// Electronic and nuclear angular momenta of the levels involved.
inline constexpr HalfInt kNuclearSpin = half(1);
inline constexpr HalfInt kJ_P1 = HalfInt::from_int(1);
inline constexpr HalfInt kJ_D1 = HalfInt::from_int(1);
inline constexpr HalfInt kF_ground = half(1);
inline constexpr HalfInt kF_excited = half(3);

// Wavelengths of the two optical transitions.
inline constexpr double kIntercombinationWavelength = 555.8e-9;  // 1S0 - 3P1
inline constexpr double kInfraredWavelength = 1539e-9;           // 3P1 - 3D1

inline bool is_valid(const Sublevel& s) {
  if (abs(s.m) > s.F) return false;
  if (!(s.F - s.m).is_integer()) return false;
  switch (s.term) {
    case Term::S0: return s.F == half(1);
    case Term::P1: return s.F == half(3);
    case Term::D1: return s.F == half(1) || s.F == half(3);
  }
  return false;
}

/// Calibrated inputs for the level scheme. Rates are angular frequencies.
struct SchemeConfig {
  // Half the natural linewidth of 1S0 - 3P1(F'=3/2).
  double gamma_p1 = mhz(0.091);
  // Decay rate of 3D1 -> 3P1.
  double gamma_d1_line = khz(16.0);
  // 3D1 -> 3P0 branching.
  double branching_d1_to_p0 = 0.64;
  // E(3D1, F=1/2) - E(3D1, F=3/2); the 3D1 hyperfine structure is inverted.
  // Fixed by requiring the m'=1/2 to m'=3/2 light-shift ratio to equal
  // -16/8.5 at a -300 MHz light-shift detuning from the F=1/2 component.
  double d1_hyperfine_splitting = mhz(2991.176470588235);
  // Residual geometric factor on the 3P1 - 3D1 dipole moment inferred from
  // gamma_d1_line; calibrated once so that the m'=3/2 shift is +6.8 MHz for
  // a 9 mW, 50 um beam detuned -300 MHz. See calibrate_stark_scale().
  double stark_scale = 2.8631086245289681;
};

struct LevelScheme {
  std::vector<Sublevel> sublevels;
  double gamma_p1 = 0.0;
  double gamma_d1_line = 0.0;
  double branching_d1_to_p0 = 0.0;
  double d1_hyperfine_splitting = 0.0;
  double stark_scale = 1.0;
};

inline LevelScheme build_level_scheme(const SchemeConfig& cfg = {}) {
  require(std::isfinite(cfg.gamma_p1) && cfg.gamma_p1 > 0.0, "gamma_p1 must be positive");
  require(std::isfinite(cfg.gamma_d1_line) && cfg.gamma_d1_line > 0.0, "gamma_d1_line must be positive");
  require(cfg.branching_d1_to_p0 >= 0.0 && cfg.branching_d1_to_p0 <= 1.0, "branching_d1_to_p0 must lie in [0, 1]");
  require(std::isfinite(cfg.d1_hyperfine_splitting) && cfg.d1_hyperfine_splitting > 0.0,
          "d1_hyperfine_splitting must be positive");
  require(std::isfinite(cfg.stark_scale) && cfg.stark_scale > 0.0, "stark_scale must be positive");

  LevelScheme scheme;
  auto add_manifold = [&](Term term, HalfInt F) {
    for (int tm = F.twice(); tm >= -F.twice(); tm -= 2) scheme.sublevels.push_back({term, F, half(tm)});
  };
  add_manifold(Term::S0, half(1));
  add_manifold(Term::P1, half(3));
  add_manifold(Term::D1, half(1));
  add_manifold(Term::D1, half(3));

  scheme.gamma_p1 = cfg.gamma_p1;
  scheme.gamma_d1_line = cfg.gamma_d1_line;
  scheme.branching_d1_to_p0 = cfg.branching_d1_to_p0;
  scheme.d1_hyperfine_splitting = cfg.d1_hyperfine_splitting;
  scheme.stark_scale = cfg.stark_scale;
  return scheme;
}

/// Signed coupling amplitude between |1S0 F=1/2, ground_m> and
/// |3P1 F'=3/2, excited_m>, normalized so the cyclic transitions have
/// amplitude 1. Zero when the pair is not dipole-connected.
inline double coupling_amplitude(HalfInt ground_m, HalfInt excited_m) {
  const HalfInt q = excited_m - ground_m;
  if (abs(q) > HalfInt::from_int(1) || !q.is_integer()) return 0.0;
  return clebsch_gordan(kF_ground, ground_m, HalfInt::from_int(1), q, kF_excited, excited_m);
}

/// Square of coupling_amplitude, formed without rounding through a sqrt.
inline double coupling_weight(HalfInt ground_m, HalfInt excited_m) {
  const HalfInt q = excited_m - ground_m;
  if (abs(q) > HalfInt::from_int(1) || !q.is_integer()) return 0.0;
  return clebsch_gordan_squared(kF_ground, ground_m, HalfInt::from_int(1), q, kF_excited, excited_m);
}

/// Relative strength of the 1S0(F=1/2, ground_m) -> 3P1(F'=3/2) transition
/// driven by the given polarization. The cyclic transitions have weight 1.
inline double transition_weight(HalfInt ground_m, Polarization pol) {
  if (ground_m != half(1) && ground_m != half(-1))
    throw DomainError("ground sublevel m must be +-1/2, got " + ground_m.str());
  const HalfInt excited = ground_m + HalfInt::from_int(helicity(pol));
  return coupling_weight(ground_m, excited);
}

struct DecayChannel {
  HalfInt ground_m;
  Polarization polarization;
  double fraction = 0.0;
};

/// Spontaneous decay branches of 3P1(F'=3/2, excited_m) into 1S0.
/// Polarization labels the transition (excited_m - ground_m).
inline std::vector<DecayChannel> decay_branching(HalfInt excited_m) {
  if (abs(excited_m) > kF_excited || excited_m.is_integer())
    throw DomainError("excited sublevel m must be one of +-1/2, +-3/2, got " + excited_m.str());
  std::vector<DecayChannel> out;
  for (HalfInt g : {half(1), half(-1)}) {
    const double w = coupling_weight(g, excited_m);
    if (w == 0.0) continue;
    out.push_back({g, polarization_from_helicity((excited_m - g).twice() / 2), w});
  }
  return out;
}

}  // namespace ybcav
