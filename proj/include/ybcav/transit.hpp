#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "ybcav/atomic.hpp"
#include "ybcav/dynamics.hpp"
#include "ybcav/lightshift.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

/// Free fall of a single atom from the MOT through the cavity mode.
struct TransitGeometry {
  double drop_height = 7e-3;
  double mode_waist = micrometers(19.0);
  // Impact points (x, z) are uniform over a disc of this radius in mode waists.
  double impact_radius_factor = 3.0;
  // Standing-wave factor applied to g0; 1/sqrt(2) is the RMS over the axis.
  double axial_factor = 1.0 / std::numbers::sqrt2;
  // Path simulated from y = +L to y = -L.
  double window_half_length = micrometers(75.0);
  double time_step = 1e-6;

  void validate() const {
    require(std::isfinite(drop_height) && drop_height > 0.0, "drop height must be positive");
    require(std::isfinite(mode_waist) && mode_waist > 0.0, "mode waist must be positive");
    require(std::isfinite(impact_radius_factor) && impact_radius_factor > 0.0, "impact radius must be positive");
    require(axial_factor > 0.0 && axial_factor <= 1.0, "axial factor must lie in (0, 1]");
    require(std::isfinite(window_half_length) && window_half_length > 0.0, "window half length must be positive");
    require(std::isfinite(time_step) && time_step > 0.0, "time step must be positive");
  }

  double velocity() const { return std::sqrt(2.0 * standard_gravity * drop_height); }
  /// Time to cross one mode diameter (2 w).
  double mean_transit_time() const { return 2.0 * mode_waist / velocity(); }
  double impact_radius() const { return impact_radius_factor * mode_waist; }
};

/// How the light-shift beam profile enters the level shifts.
enum class ShiftProfile { gaussian, uniform };

/// Everything a transit needs. excitation.detuning is the laser detuning
/// from the unshifted 1S0 - 3P1(F'=3/2) line.
struct TransitConfig {
  LevelScheme scheme = build_level_scheme();
  CavityParams cavity;
  BeamParams excitation{1.8e-6, micrometers(25.0), 0.0, BeamPolarization::linear_y, 0.0};
  BeamParams light_shift = reference_light_shift_beam();
  bool light_shift_on = true;
  ShiftProfile shift_profile = ShiftProfile::gaussian;
  TransitGeometry geometry;

  void validate() const {
    cavity.validate();
    excitation.validate();
    light_shift.validate();
    geometry.validate();
    require(std::abs(geometry.mode_waist - cavity.mode_waist) <= 1e-12 * cavity.mode_waist,
            "geometry and cavity mode waists differ");
    require(light_shift.polarization == BeamPolarization::pi, "light-shift beam must be pi-polarized");
  }
};

/// Precomputed, immutable rate model shared by all transits of a config.
class TransitModel {
 public:
  explicit TransitModel(TransitConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    effective_cavity_ = cfg_.cavity;
    effective_cavity_.g0 *= cfg_.geometry.axial_factor;
    if (cfg_.light_shift_on && cfg_.light_shift.power > 0.0)
      peak_shift_ = stark_shifts(cfg_.light_shift, cfg_.scheme, Vec3{0.0, cfg_.light_shift.axis_offset, 0.0});
  }

  const TransitConfig& config() const { return cfg_; }
  const CavityParams& effective_cavity() const { return effective_cavity_; }
  /// Light shift on the beam axis; zero when the beam is off.
  const ShiftResult& peak_shift() const { return peak_shift_; }

  ShiftResult shift_at(const Vec3& p) const {
    if (cfg_.shift_profile == ShiftProfile::uniform) return peak_shift_;
    const double w = cfg_.light_shift.waist;
    const double r = beam_radial_offset(p, cfg_.light_shift);
    const double f = std::exp(-2.0 * r * r / (w * w));
    return ShiftResult::from_components(peak_shift_.delta_32 * f, peak_shift_.delta_12 * f);
  }

  /// Rates for {up, down} at a point.
  std::array<EmissionRates, 2> rates_at(const Vec3& p) const {
    const ShiftResult s = shift_at(p);
    const double det = cfg_.excitation.detuning;
    return {adiabatic_rates(Spin::up, det, p, s, cfg_.scheme, effective_cavity_, cfg_.excitation),
            adiabatic_rates(Spin::down, det, p, s, cfg_.scheme, effective_cavity_, cfg_.excitation)};
  }

 private:
  TransitConfig cfg_;
  CavityParams effective_cavity_;
  ShiftResult peak_shift_{};
};

/// Straight vertical path at fixed (x, z); y(t) = y_start - v t.
struct Trajectory {
  double impact_x = 0.0;
  double impact_z = 0.0;
  double velocity = 0.0;
  double y_start = 0.0;
  double duration = 0.0;

  Vec3 position(double t) const { return {impact_x, y_start - velocity * t, impact_z}; }

  /// Largest coupling along the path, including the axial factor.
  double peak_coupling(const CavityParams& cavity, double axial_factor) const {
    return axial_factor * cavity.coupling_at(Vec3{impact_x, 0.0, impact_z});
  }

  std::size_t steps(double dt) const { return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(duration / dt - 1e-9))); }
};

inline Trajectory make_trajectory(double impact_x, double impact_z, const TransitGeometry& g) {
  g.validate();
  const double v = g.velocity();
  return {impact_x, impact_z, v, g.window_half_length, 2.0 * g.window_half_length / v};
}

using Rng = std::mt19937_64;

/// Impact point uniform over the disc of radius geometry.impact_radius().
template <class URBG>
Trajectory sample_trajectory(URBG& rng, const TransitGeometry& geometry) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = geometry.impact_radius() * std::sqrt(u(rng));
  const double phi = two_pi * u(rng);
  return make_trajectory(r * std::cos(phi), r * std::sin(phi), geometry);
}

struct TransitRecord {
  std::int64_t counts_sigma_plus = 0;
  std::int64_t counts_sigma_minus = 0;
  Spin initial_spin = Spin::up;
  Spin final_spin = Spin::up;
  double transit_duration = 0.0;
  double peak_coupling = 0.0;
};

struct CountRecord {
  double window = 0.0;
  std::int64_t counts_sigma_plus = 0;
  std::int64_t counts_sigma_minus = 0;
  std::int64_t atom_count = 0;
};

namespace detail {

template <class URBG>
std::int64_t poisson(URBG& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

template <class URBG>
std::int64_t thin(URBG& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

}  // namespace detail

/// One atom along a given path. Rates are held constant over each time step
/// (evaluated at its midpoint); within a step the spin flips at exponential
/// times and emissions are Poisson, then thinned by the detection efficiency.
template <class URBG>
TransitRecord simulate_transit(URBG& rng, Spin initial_spin, const TransitModel& model, const Trajectory& path) {
  const auto& cfg = model.config();
  const double dt_nominal = cfg.geometry.time_step;
  const std::size_t n = path.steps(dt_nominal);
  const double dt = path.duration / static_cast<double>(n);
  const double eta = cfg.cavity.detection_efficiency;
  std::exponential_distribution<double> unit_exp(1.0);

  TransitRecord rec;
  rec.initial_spin = initial_spin;
  rec.transit_duration = path.duration;
  rec.peak_coupling = path.peak_coupling(cfg.cavity, cfg.geometry.axial_factor);

  Spin spin = initial_spin;
  std::int64_t emitted_plus = 0, emitted_minus = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto rates = model.rates_at(path.position((static_cast<double>(k) + 0.5) * dt));
    double remaining = dt;
    while (remaining > 0.0) {
      const auto& r = rates[spin == Spin::up ? 0 : 1];
      const double t_flip = r.spin_flip_rate > 0.0 ? unit_exp(rng) / r.spin_flip_rate : remaining;
      const double seg = std::min(t_flip, remaining);
      emitted_plus += detail::poisson(rng, r.rate_sigma_plus * seg);
      emitted_minus += detail::poisson(rng, r.rate_sigma_minus * seg);
      if (t_flip >= remaining) break;
      spin = flipped(spin);
      remaining -= t_flip;
    }
  }
  rec.counts_sigma_plus = detail::thin(rng, emitted_plus, eta);
  rec.counts_sigma_minus = detail::thin(rng, emitted_minus, eta);
  rec.final_spin = spin;
  return rec;
}

template <class URBG>
TransitRecord simulate_transit(URBG& rng, Spin initial_spin, const TransitModel& model) {
  const Trajectory path = sample_trajectory(rng, model.config().geometry);
  return simulate_transit(rng, initial_spin, model, path);
}

/// Measurement window: Poisson atom arrivals at atom_rate (atoms/s), each
/// prepared in initial_spin, plus Poisson dark counts on both detectors.
template <class URBG>
CountRecord simulate_window(URBG& rng, double atom_rate, double window, const TransitModel& model,
                            Spin initial_spin = Spin::up) {
  require(std::isfinite(atom_rate) && atom_rate >= 0.0, "atom rate must be nonnegative");
  require(std::isfinite(window) && window > 0.0, "window must be positive");
  CountRecord rec;
  rec.window = window;
  rec.atom_count = detail::poisson(rng, atom_rate * window);
  for (std::int64_t i = 0; i < rec.atom_count; ++i) {
    const auto t = simulate_transit(rng, initial_spin, model);
    rec.counts_sigma_plus += t.counts_sigma_plus;
    rec.counts_sigma_minus += t.counts_sigma_minus;
  }
  const auto& cav = model.config().cavity;
  rec.counts_sigma_plus += detail::poisson(rng, cav.dark_rate_sigma_plus * window);
  rec.counts_sigma_minus += detail::poisson(rng, cav.dark_rate_sigma_minus * window);
  return rec;
}

// Child streams: the pair (master_seed, run_index) is hashed with SplitMix64
// and expanded through std::seed_seq into an mt19937_64 state, so run i sees
// the same stream no matter which worker executes it.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Rng child_rng(std::uint64_t master_seed, std::uint64_t run_index) {
  const std::uint64_t key = splitmix64(splitmix64(master_seed) ^ splitmix64(run_index + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(run_index), static_cast<std::uint32_t>(run_index >> 32)};
  return Rng(seq);
}

/// Runs fn(i, rng_i) for i in [0, n) on `threads` workers; results land by
/// index, so the output does not depend on scheduling.
template <class Record, class Fn>
std::vector<Record> parallel_runs(std::size_t n, std::uint64_t master_seed, unsigned threads, Fn fn) {
  std::vector<Record> out(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        Rng rng = child_rng(master_seed, i);
        out[i] = fn(i, rng);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

struct WindowSpec {
  double atom_rate = 500.0;  // atoms/s
  double window = 2e-3;
  Spin initial_spin = Spin::up;

  void validate() const {
    require(std::isfinite(atom_rate) && atom_rate >= 0.0, "atom rate must be nonnegative");
    require(std::isfinite(window) && window > 0.0, "window must be positive");
  }
};

/// n_runs measurement windows; run i uses child_rng(master_seed, i).
inline std::vector<CountRecord> run_ensemble(std::size_t n_runs, std::uint64_t master_seed, const WindowSpec& spec,
                                             const TransitModel& model, unsigned threads = 1) {
  require(n_runs >= 1, "n_runs must be at least 1");
  spec.validate();
  return parallel_runs<CountRecord>(n_runs, master_seed, threads, [&](std::size_t, Rng& rng) {
    return simulate_window(rng, spec.atom_rate, spec.window, model, spec.initial_spin);
  });
}

/// n_runs single-atom transits; run i uses child_rng(master_seed, i).
inline std::vector<TransitRecord> run_transit_ensemble(std::size_t n_runs, std::uint64_t master_seed,
                                                       Spin initial_spin, const TransitModel& model,
                                                       unsigned threads = 1) {
  require(n_runs >= 1, "n_runs must be at least 1");
  return parallel_runs<TransitRecord>(n_runs, master_seed, threads, [&](std::size_t, Rng& rng) {
    return simulate_transit(rng, initial_spin, model);
  });
}

}  // namespace ybcav
