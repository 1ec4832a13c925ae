#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "ybcav/transit.hpp"
#include "ybcav/units.hpp"

namespace ybcav {

// ---------------------------------------------------------------------------
// Deterministic (rate-integral) photon yields

struct ExpectedCounts {
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;
  double final_up_probability = 0.0;

  double total() const { return sigma_plus + sigma_minus; }
  double desired(Spin s) const { return s == Spin::up ? sigma_plus : sigma_minus; }
  double undesired(Spin s) const { return s == Spin::up ? sigma_minus : sigma_plus; }
};

/// Mean detected counts of one transit. The spin is a two-state Markov chain
/// whose rates are constant over each step, so every step is integrated in
/// closed form; only the piecewise-constant rate profile is approximate.
inline ExpectedCounts expected_transit_counts(const TransitModel& model, const Trajectory& path, Spin initial_spin,
                                              double time_step = 0.0) {
  const auto& cfg = model.config();
  const double dt_nominal = time_step > 0.0 ? time_step : cfg.geometry.time_step;
  const std::size_t n = path.steps(dt_nominal);
  const double dt = path.duration / static_cast<double>(n);

  double p_up = initial_spin == Spin::up ? 1.0 : 0.0;
  ExpectedCounts out;
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = model.rates_at(path.position((static_cast<double>(k) + 0.5) * dt));
    const double a = r[0].spin_flip_rate;  // up -> down
    const double b = r[1].spin_flip_rate;  // down -> up
    const double lambda = a + b;
    double time_up;
    double p_next;
    if (lambda * dt < 1e-12) {
      time_up = p_up * dt;
      p_next = p_up;
    } else {
      const double p_eq = b / lambda;
      const double decay = -std::expm1(-lambda * dt);
      time_up = p_eq * dt + (p_up - p_eq) * decay / lambda;
      p_next = p_eq + (p_up - p_eq) * (1.0 - decay);
    }
    const double time_down = dt - time_up;
    out.sigma_plus += r[0].rate_sigma_plus * time_up + r[1].rate_sigma_plus * time_down;
    out.sigma_minus += r[0].rate_sigma_minus * time_up + r[1].rate_sigma_minus * time_down;
    p_up = p_next;
  }
  const double eta = cfg.cavity.detection_efficiency;
  out.sigma_plus *= eta;
  out.sigma_minus *= eta;
  out.final_up_probability = p_up;
  return out;
}

/// Midpoint rule in polar coordinates over one quadrant of the impact disc.
/// Rates are even in x and in z, so the quadrant carries the full average.
struct ImpactQuadrature {
  int radial = 24;
  int angular = 6;

  struct Node {
    double x, z, weight;
  };

  std::vector<Node> nodes(double radius) const {
    require(radial >= 1 && angular >= 1, "quadrature needs at least one node per axis");
    std::vector<Node> out;
    double wsum = 0.0;
    for (int i = 0; i < radial; ++i) {
      const double r = radius * (i + 0.5) / radial;
      for (int j = 0; j < angular; ++j) {
        const double phi = 0.5 * pi * (j + 0.5) / angular;
        out.push_back({r * std::cos(phi), r * std::sin(phi), r});
        wsum += r;
      }
    }
    for (auto& n : out) n.weight /= wsum;
    return out;
  }
};

/// Expected detected counts per atom, averaged over the impact disc.
inline ExpectedCounts ensemble_expected_counts(const TransitModel& model, Spin initial_spin,
                                               const ImpactQuadrature& quad = {}, double time_step = 0.0) {
  const auto& g = model.config().geometry;
  ExpectedCounts acc;
  for (const auto& node : quad.nodes(g.impact_radius())) {
    const auto c = expected_transit_counts(model, make_trajectory(node.x, node.z, g), initial_spin, time_step);
    acc.sigma_plus += node.weight * c.sigma_plus;
    acc.sigma_minus += node.weight * c.sigma_minus;
    acc.final_up_probability += node.weight * c.final_up_probability;
  }
  return acc;
}

struct ConvergenceCheck {
  double coarse = 0.0;
  double fine = 0.0;
  double relative_change = 0.0;
  bool converged = false;
};

/// Total expected counts at the configured step and at half of it.
inline ConvergenceCheck check_time_step(const TransitModel& model, Spin s, const ImpactQuadrature& quad = {},
                                        double tol = 1e-3) {
  const double dt = model.config().geometry.time_step;
  ConvergenceCheck c;
  c.coarse = ensemble_expected_counts(model, s, quad, dt).total();
  c.fine = ensemble_expected_counts(model, s, quad, 0.5 * dt).total();
  c.relative_change = std::abs(c.coarse - c.fine) / std::max(std::abs(c.fine), 1e-300);
  c.converged = c.relative_change <= tol;
  return c;
}

namespace detail {

// fn(i) for i in [0, n) on up to `threads` workers, writing by index.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fluorescence spectrum

struct SpectrumPoint {
  double detuning_mhz = 0.0;
  double mean_counts = 0.0;  // detected counts per atom
};

struct SpectrumOptions {
  ImpactQuadrature quadrature;
  unsigned threads = 1;
};

/// Cavity-enhanced fluorescence versus excitation detuning (MHz), for an
/// unpolarized sample (equal up and down populations).
inline std::vector<SpectrumPoint> fluorescence_spectrum(std::span<const double> detuning_grid_mhz,
                                                        const TransitConfig& config, bool light_shift_on,
                                                        const SpectrumOptions& opts = {}) {
  if (detuning_grid_mhz.empty()) throw DomainError("spectrum grid is empty");
  if (!std::is_sorted(detuning_grid_mhz.begin(), detuning_grid_mhz.end()))
    throw DomainError("spectrum grid must be sorted");
  std::vector<SpectrumPoint> out(detuning_grid_mhz.size());
  detail::parallel_for(out.size(), opts.threads, [&](std::size_t i) {
    TransitConfig cfg = config;
    cfg.light_shift_on = light_shift_on;
    cfg.excitation.detuning = mhz(detuning_grid_mhz[i]);
    const TransitModel model(cfg);
    const double up = ensemble_expected_counts(model, Spin::up, opts.quadrature).total();
    const double down = ensemble_expected_counts(model, Spin::down, opts.quadrature).total();
    out[i] = {detuning_grid_mhz[i], 0.5 * (up + down)};
  });
  return out;
}

struct SpectrumStats {
  double peak_detuning_mhz = 0.0;
  double peak_counts = 0.0;
  double mean_mhz = 0.0;
  double skewness = 0.0;
  std::size_t window_points = 0;
};

/// Peak and third standardized moment of the count-weighted detuning
/// distribution. The moments use the widest window symmetric about the peak
/// that fits in the grid, so a peak off the grid centre is not read as skew.
inline SpectrumStats spectrum_stats(std::span<const SpectrumPoint> s) {
  if (s.size() < 3) throw DomainError("spectrum needs at least three points");
  const auto peak = std::max_element(s.begin(), s.end(),
                                     [](const auto& a, const auto& b) { return a.mean_counts < b.mean_counts; });
  const auto ip = static_cast<std::size_t>(peak - s.begin());
  const std::size_t half_width = std::min(ip, s.size() - 1 - ip);

  SpectrumStats st;
  st.peak_detuning_mhz = peak->detuning_mhz;
  st.peak_counts = peak->mean_counts;
  st.window_points = 2 * half_width + 1;
  if (half_width == 0) return st;

  double w = 0.0, m1 = 0.0;
  for (std::size_t i = ip - half_width; i <= ip + half_width; ++i) {
    w += s[i].mean_counts;
    m1 += s[i].mean_counts * s[i].detuning_mhz;
  }
  if (!(w > 0.0)) return st;
  st.mean_mhz = m1 / w;
  double m2 = 0.0, m3 = 0.0;
  for (std::size_t i = ip - half_width; i <= ip + half_width; ++i) {
    const double d = s[i].detuning_mhz - st.mean_mhz;
    m2 += s[i].mean_counts * d * d;
    m3 += s[i].mean_counts * d * d * d;
  }
  m2 /= w;
  m3 /= w;
  st.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  return st;
}

// ---------------------------------------------------------------------------
// SNR

struct SnrResult {
  double value = 0.0;
  bool infinite = false;  // no undesired counts
  double desired = 0.0;
  double undesired = 0.0;
};

inline SnrResult snr_from_totals(double desired, double undesired) {
  SnrResult r{0.0, false, desired, undesired};
  if (undesired <= 0.0) {
    r.infinite = true;
    r.value = std::numeric_limits<double>::infinity();
  } else {
    r.value = desired / undesired;
  }
  return r;
}

/// Desired over undesired counts summed over records (sigma+/sigma- for up).
template <class Record>
SnrResult snr_from_counts(std::span<const Record> records, Spin initial_spin) {
  if (records.empty()) throw DomainError("snr_from_counts needs at least one record");
  double plus = 0.0, minus = 0.0;
  for (const auto& r : records) {
    plus += static_cast<double>(r.counts_sigma_plus);
    minus += static_cast<double>(r.counts_sigma_minus);
  }
  return initial_spin == Spin::up ? snr_from_totals(plus, minus) : snr_from_totals(minus, plus);
}

template <class Record>
SnrResult snr_from_counts(const std::vector<Record>& records, Spin initial_spin) {
  return snr_from_counts(std::span<const Record>(records), initial_spin);
}

struct CountPair {
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;
};

struct CorrectedCounts {
  CountPair counts;
  bool clamped_sigma_plus = false;
  bool clamped_sigma_minus = false;

  bool clamped() const { return clamped_sigma_plus || clamped_sigma_minus; }
  SnrResult snr(Spin s) const {
    return s == Spin::up ? snr_from_totals(counts.sigma_plus, counts.sigma_minus)
                         : snr_from_totals(counts.sigma_minus, counts.sigma_plus);
  }
};

/// Subtracts rate x exposure from each channel; dark rates in counts/s.
inline CorrectedCounts dark_count_correct(CountPair raw, CountPair dark_rates, double exposure) {
  if (!(exposure > 0.0) || !std::isfinite(exposure)) throw DomainError("exposure must be positive");
  CorrectedCounts c;
  c.counts.sigma_plus = raw.sigma_plus - dark_rates.sigma_plus * exposure;
  c.counts.sigma_minus = raw.sigma_minus - dark_rates.sigma_minus * exposure;
  if (c.counts.sigma_plus < 0.0) {
    c.counts.sigma_plus = 0.0;
    c.clamped_sigma_plus = true;
  }
  if (c.counts.sigma_minus < 0.0) {
    c.counts.sigma_minus = 0.0;
    c.clamped_sigma_minus = true;
  }
  return c;
}

/// Dark-count-free SNR of a spin-up atom from the rate model.
inline double predicted_snr(const TransitConfig& config, const ImpactQuadrature& quad = {}) {
  const TransitModel model(config);
  const auto c = ensemble_expected_counts(model, Spin::up, quad);
  if (!(c.sigma_minus > 0.0)) throw NumericalError("predicted SNR undefined: no undesired emission");
  return c.sigma_plus / c.sigma_minus;
}

/// Laser detuning that sits on the m'=+-3/2 resonance at the light-shift
/// beam centre (zero when the beam is off).
inline double tuned_excitation_detuning(const TransitConfig& config) {
  if (!config.light_shift_on || config.light_shift.power <= 0.0) return 0.0;
  return stark_shift(half(3), config.light_shift, config.scheme, Vec3{0.0, config.light_shift.axis_offset, 0.0});
}

struct CurvePoint {
  double x = 0.0;
  double snr = 0.0;
};

struct SnrSweepOptions {
  ImpactQuadrature quadrature;
  unsigned threads = 1;
  // Retune the excitation laser to the shifted m'=3/2 line at every point.
  bool track_light_shift = true;
  double detuning_offset = 0.0;  // added to the tuned detuning
};

/// Predicted SNR versus light-shift power (W).
inline std::vector<CurvePoint> predicted_snr_vs_power(std::span<const double> powers, const TransitConfig& config,
                                                      const SnrSweepOptions& opts = {}) {
  if (powers.empty()) throw DomainError("power grid is empty");
  for (double p : powers)
    if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("power grid must be positive");
  std::vector<CurvePoint> out(powers.size());
  detail::parallel_for(out.size(), opts.threads, [&](std::size_t i) {
    TransitConfig cfg = config;
    cfg.light_shift_on = true;
    cfg.light_shift.power = powers[i];
    if (opts.track_light_shift) cfg.excitation.detuning = tuned_excitation_detuning(cfg) + opts.detuning_offset;
    out[i] = {powers[i], predicted_snr(cfg, opts.quadrature)};
  });
  return out;
}

/// Predicted SNR versus light-shift waist (m) at the peak intensity of
/// config.light_shift.
inline std::vector<CurvePoint> predicted_snr_vs_waist(std::span<const double> waists, const TransitConfig& config,
                                                      const SnrSweepOptions& opts = {}) {
  if (waists.empty()) throw DomainError("waist grid is empty");
  for (double w : waists)
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("waist grid must be positive");
  const double i0 = config.light_shift.peak_intensity();
  std::vector<CurvePoint> out(waists.size());
  detail::parallel_for(out.size(), opts.threads, [&](std::size_t i) {
    TransitConfig cfg = config;
    cfg.light_shift_on = true;
    cfg.light_shift.waist = waists[i];
    cfg.light_shift.power = 0.5 * i0 * pi * waists[i] * waists[i];
    if (opts.track_light_shift) cfg.excitation.detuning = tuned_excitation_detuning(cfg) + opts.detuning_offset;
    out[i] = {waists[i], predicted_snr(cfg, opts.quadrature)};
  });
  return out;
}

// ---------------------------------------------------------------------------
// Correlation

struct PearsonResult {
  double value = 0.0;
  bool defined = false;  // false for fewer than 2 records or zero variance
};

inline PearsonResult pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("pearson_correlation needs equal-length samples");
  PearsonResult r;
  const std::size_t n = a.size();
  if (n < 2) return r;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return r;
  r.value = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  r.defined = true;
  return r;
}

/// Pearson r of the (sigma+, sigma-) count pairs.
template <class Record>
PearsonResult pearson_correlation(const std::vector<Record>& records) {
  std::vector<double> a, b;
  a.reserve(records.size());
  b.reserve(records.size());
  for (const auto& r : records) {
    a.push_back(static_cast<double>(r.counts_sigma_plus));
    b.push_back(static_cast<double>(r.counts_sigma_minus));
  }
  return pearson_correlation(std::span<const double>(a), std::span<const double>(b));
}

// ---------------------------------------------------------------------------
// MOT loss spectroscopy on 3P1 - 3D1

struct MotParams {
  double loading_rate = 1e6;           // atoms/s
  double gamma0 = 0.5;                 // one-body loss, 1/s
  double probe_power_density = 30.0;   // W/m^2 (3 mW/cm^2)
  double natural_linewidth_d1 = 16e3;  // Hz
  double branching = 0.64;             // 3D1 -> 3P0
  double p1_population = 0.5;          // MOT atoms in 3P1

  void validate() const {
    require(std::isfinite(loading_rate) && loading_rate >= 0.0, "loading rate must be nonnegative");
    require(std::isfinite(gamma0) && gamma0 > 0.0, "gamma0 must be positive");
    require(std::isfinite(probe_power_density) && probe_power_density >= 0.0, "probe power density must be nonnegative");
    require(std::isfinite(natural_linewidth_d1) && natural_linewidth_d1 > 0.0, "linewidth must be positive");
    require(branching >= 0.0 && branching <= 1.0, "branching must lie in [0, 1]");
    require(p1_population >= 0.0 && p1_population <= 1.0, "p1 population must lie in [0, 1]");
  }

  double eta() const { return p1_population * branching; }
  /// Angular decay rate 2 pi x natural_linewidth_d1.
  double gamma() const { return two_pi * natural_linewidth_d1; }
  double saturation_intensity() const {
    const double l = kInfraredWavelength;
    return pi * planck * speed_of_light * gamma() / (3.0 * l * l * l);
  }
  double saturation() const { return probe_power_density / saturation_intensity(); }

  /// Saturated two-level scattering rate from 3D1 at angular detuning delta.
  double scattering_rate(double delta) const {
    const double s = saturation();
    const double x = 2.0 * delta / gamma();
    return 0.5 * gamma() * s / (1.0 + s + x * x);
  }

  /// Steady-state atom number R / (Gamma0 + eta Gamma1).
  double atom_number(double delta) const { return loading_rate / (gamma0 + eta() * scattering_rate(delta)); }
  double normalized_atom_number(double delta) const { return gamma0 / (gamma0 + eta() * scattering_rate(delta)); }
};

struct DipPoint {
  double detuning_mhz = 0.0;
  double normalized_n = 1.0;
};

inline std::vector<DipPoint> mot_dip_profile(std::span<const double> detuning_grid_mhz, const MotParams& mot) {
  mot.validate();
  std::vector<DipPoint> out;
  out.reserve(detuning_grid_mhz.size());
  for (double d : detuning_grid_mhz) {
    if (!std::isfinite(d)) throw DomainError("dip grid must be finite");
    out.push_back({d, mot.normalized_atom_number(mhz(d))});
  }
  return out;
}

/// Half width (MHz) at half the dip depth; nullopt when there is no dip.
inline std::optional<double> mot_dip_hwhm_mhz(const MotParams& mot) {
  mot.validate();
  const double depth0 = 1.0 - mot.normalized_atom_number(0.0);
  if (!(depth0 > 0.0)) return std::nullopt;
  auto excess = [&](double d) { return (1.0 - mot.normalized_atom_number(mhz(d))) - 0.5 * depth0; };
  double lo = 0.0, hi = 1.0;
  while (excess(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e9) throw NumericalError("dip half width did not bracket");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ybcav
