// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "ybcav/ybcav.hpp"

using namespace ybcav;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

TransitConfig measurement(bool shift_on) {
  TransitConfig c;
  c.excitation.power = 4.7e-6;
  c.light_shift_on = shift_on;
  c.excitation.detuning = tuned_excitation_detuning(c);
  return c;
}

template <class Record>
std::pair<double, double> mean_and_se(const std::vector<Record>& recs, bool plus) {
  const double n = static_cast<double>(recs.size());
  double m = 0.0, ss = 0.0;
  for (const auto& r : recs) m += static_cast<double>(plus ? r.counts_sigma_plus : r.counts_sigma_minus);
  m /= n;
  for (const auto& r : recs) ss += std::pow(static_cast<double>(plus ? r.counts_sigma_plus : r.counts_sigma_minus) - m, 2);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0; lo + i * step <= hi + 1e-9; ++i) g.push_back(lo + i * step);
  return g;
}

void criterion_1(Check& c) {
  const LevelScheme scheme = build_level_scheme();
  const double d32 = to_mhz(stark_shift(half(3), reference_light_shift_beam(), scheme, Vec3{}));
  c.detail << " delta_3/2=" << d32 << " MHz";
  c.expect(std::abs(d32 - 6.8) <= 0.68, "delta_3/2 within 10% of 6.8 MHz");
  const auto s = sublevel_splitting(mhz(8.5), scheme);
  c.detail << " splitting@8.5=" << to_mhz(s.splitting) << " MHz";
  c.expect(std::abs(to_mhz(s.splitting) - 24.0) <= 2.0, "splitting 24 +- 2 MHz");
}

void criterion_2(Check& c) {
  const MotParams mot;
  const auto hwhm = mot_dip_hwhm_mhz(mot);
  c.expect(hwhm.has_value(), "dip has a half-width");
  if (hwhm) {
    c.detail << " HWHM=" << *hwhm << " MHz";
    c.expect(*hwhm >= 70.0 && *hwhm <= 150.0, "HWHM in [70, 150] MHz");
  }
  MotParams flat;
  flat.p1_population = 0.0;
  bool all_one = true;
  for (const auto& p : mot_dip_profile(grid(-400.0, 400.0, 2.0), flat)) all_one = all_one && p.normalized_n == 1.0;
  c.expect(all_one, "eta = 0 gives N/N0 = 1 everywhere");
}

void criterion_3(Check& c) {
  const LevelScheme scheme = build_level_scheme();
  const CavityParams cav;
  double worst = 0.0, max_n = 0.0;
  for (const auto& p : oracle::sample_oracle_points(10, 20261019)) {
    const auto r = oracle::compare_with_master_equation(p, scheme, cav);
    worst = std::max(worst, r.relative_error);
    max_n = std::max(max_n, r.max_photon_number);
  }
  c.detail << " worst relative error=" << worst << " max <n>=" << max_n;
  c.expect(worst <= 0.05, "adiabatic rates within 5% of master-equation flux");
  c.expect(max_n < 0.05, "weak-excitation regime");
}

void criterion_4(Check& c) {
  const double snr = predicted_snr(measurement(true));
  c.detail << " predicted SNR=" << snr;
  c.expect(std::abs(snr - 8.7) <= 0.15 * 8.7, "SNR 8.7 +- 15%");

  const RunConfig defaults;
  std::vector<double> powers;
  for (double p : defaults.snr.light_shift_powers_mW) powers.push_back(milliwatts(p));
  const auto curve = predicted_snr_vs_power(powers, measurement(true));
  bool mono = true;
  for (std::size_t i = 1; i < curve.size(); ++i) mono = mono && curve[i].snr >= curve[i - 1].snr;
  c.expect(mono, "SNR nondecreasing over the default power grid");

  const std::vector<double> waists{micrometers(20.0), micrometers(50.0)};
  const auto w = predicted_snr_vs_waist(waists, measurement(true));
  c.detail << " SNR(20um)=" << w[0].snr << " SNR(50um)=" << w[1].snr;
  c.expect(w[0].snr < w[1].snr, "20 um waist below 50 um at equal peak intensity");
}

void criterion_5(Check& c) {
  const TransitModel on(measurement(true));
  const TransitModel off(measurement(false));
  constexpr std::size_t kN = 10000;
  double total = 0.0;
  for (Spin s : {Spin::up, Spin::down}) {
    const auto recs = run_transit_ensemble(kN, 500 + static_cast<std::uint64_t>(s), s, on, 4);
    for (const auto& r : recs) total += static_cast<double>(r.counts_sigma_plus + r.counts_sigma_minus);
    const auto snr = snr_from_counts(recs, s);
    c.detail << " MC SNR(" << to_string(s) << ")=" << snr.value;
    c.expect(snr.value > 2.0, "Monte Carlo SNR above 2 for " + to_string(s));
  }
  const double per_atom = total / (2.0 * kN);
  c.detail << " counts/atom=" << per_atom;
  c.expect(per_atom >= 3.5 && per_atom <= 8.5, "mean counts per atom in [3.5, 8.5]");

  for (Spin s : {Spin::up, Spin::down}) {
    const WindowSpec spec{s == Spin::up ? 500.0 : 600.0, 2e-3, s};
    const auto r_off = pearson_correlation(run_ensemble(kN, 700 + static_cast<std::uint64_t>(s), spec, off, 4));
    const auto r_on = pearson_correlation(run_ensemble(kN, 800 + static_cast<std::uint64_t>(s), spec, on, 4));
    c.detail << " r_off(" << to_string(s) << ")=" << r_off.value << " r_on=" << r_on.value;
    c.expect(r_off.defined && r_on.defined, "correlations defined");
    c.expect(r_off.value > 0.0, "r_off > 0 for " + to_string(s));
    c.expect(r_on.value < r_off.value, "r_on < r_off for " + to_string(s));
  }
}

void criterion_6(Check& c) {
  const TransitModel m(measurement(true));
  const auto recs = run_ensemble(10000, 2024, {0.0, 2e-3, Spin::up}, m, 4);
  const auto [mp, sep] = mean_and_se(recs, true);
  const auto [mm, sem] = mean_and_se(recs, false);
  c.detail << " dark means " << mp << " +- " << sep << ", " << mm << " +- " << sem;
  c.expect(std::abs(mp - 2.0) <= 3.0 * sep, "sigma+ dark mean 2 within 3 SE");
  c.expect(std::abs(mm - 1.0) <= 3.0 * sem, "sigma- dark mean 1 within 3 SE");
  const auto id = dark_count_correct({12.5, 3.25}, {0.0, 0.0}, 2e-3);
  c.expect(id.counts.sigma_plus == 12.5 && id.counts.sigma_minus == 3.25 && !id.clamped(),
           "zero dark rates leave counts unchanged");
}

void criterion_7(Check& c) {
  // Clebsch-Gordan orthonormality for 1/2 x 1 -> {1/2, 3/2}, summed both ways.
  const HalfInt j1 = half(1), j2 = HalfInt::from_int(1);
  const std::vector<HalfInt> m2s{HalfInt::from_int(-1), HalfInt::from_int(0), HalfInt::from_int(1)};
  for (HalfInt m1 : {half(1), half(-1)})
    for (HalfInt m2 : m2s) {
      double sum = 0.0;
      for (HalfInt J : {half(1), half(3)})
        if (abs(m1 + m2) <= J) sum += clebsch_gordan_squared(j1, m1, j2, m2, J, m1 + m2);
      c.expect(std::abs(sum - 1.0) <= 1e-14, "CG completeness over J");
    }
  for (HalfInt J : {half(1), half(3)})
    for (HalfInt M : {half(3), half(1), half(-1), half(-3)}) {
      if (abs(M) > J) continue;
      double sum = 0.0;
      for (HalfInt m1 : {half(1), half(-1)})
        for (HalfInt m2 : m2s)
          if (m1 + m2 == M) sum += clebsch_gordan_squared(j1, m1, j2, m2, J, M);
      c.expect(std::abs(sum - 1.0) <= 1e-14, "CG normalization over m1 and m2");
    }
  for (HalfInt mp : {half(3), half(1), half(-1), half(-3)}) {
    double sum = 0.0;
    for (const auto& ch : decay_branching(mp)) sum += ch.fraction;
    c.expect(std::abs(sum - 1.0) <= 1e-14, "decay branching sums to 1");
  }

  // Random evolutions stay physical.
  const LevelScheme scheme = build_level_scheme();
  const CavityParams cav;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_trace = 0.0, worst_herm = 0.0, worst_eig = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    BeamParams shift_beam = reference_light_shift_beam();
    shift_beam.power = milliwatts(9.0 * u(rng));
    const Vec3 p{20e-6 * (u(rng) - 0.5), 20e-6 * (u(rng) - 0.5), 20e-6 * (u(rng) - 0.5)};
    const BeamParams drive{5e-6 * u(rng), micrometers(25.0), 0.0, BeamPolarization::linear_y, 0.0};
    const auto gen = build_lindblad(
        build_hamiltonian(scheme, cav, drive, stark_shifts(shift_beam, scheme, p), mhz(40.0 * (u(rng) - 0.5)), p),
        scheme, cav);
    const int n = gen.dims.dim();
    DenseOp a(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) a(i, k) = Complex(g(rng), g(rng));
    DenseOp rho = a * a.adjoint();
    rho /= rho.trace();
    const auto s = evolve(SystemState{gen.dims, rho}, gen, 1e-6 * u(rng));
    worst_trace = std::max(worst_trace, std::abs(s.trace() - 1.0));
    worst_herm = std::max(worst_herm, s.hermiticity_error());
    worst_eig = std::min(worst_eig, s.min_eigenvalue());
  }
  c.detail << " evolutions: |tr-1|<=" << worst_trace << " herm<=" << worst_herm << " min eig>=" << worst_eig;
  c.expect(worst_trace <= 1e-8 && worst_herm <= 1e-8 && worst_eig >= -1e-6, "100 random evolutions physical");

  // Spectral skewness: symmetric without the shift beam, low-frequency tail for a narrow beam.
  const SpectrumOptions opts{{12, 4}, 4};
  TransitConfig spec;
  const auto g_wide = grid(-60.0, 60.0, 1.0);
  const double skew_off = spectrum_stats(fluorescence_spectrum(g_wide, spec, false, opts)).skewness;
  spec.light_shift.waist = micrometers(20.0);
  const double skew_narrow = spectrum_stats(fluorescence_spectrum(g_wide, spec, true, opts)).skewness;
  c.detail << " skew(off)=" << skew_off << " skew(20um)=" << skew_narrow;
  c.expect(std::abs(skew_off) < 0.1, "unshifted spectrum symmetric");
  c.expect(skew_narrow < -0.2, "narrow-beam spectrum skewed to low frequency");

  // Byte-exact determinism across worker counts.
  const TransitModel m(measurement(true));
  const auto table = [&](unsigned threads) {
    std::ostringstream os;
    write_csv(os, count_records_table(run_ensemble(2000, 99, {500.0, 2e-3, Spin::up}, m, threads)));
    write_csv(os, transit_records_table(run_transit_ensemble(2000, 98, Spin::down, m, threads)));
    return os.str();
  };
  c.expect(table(1) == table(8), "1 and 8 threads give byte-identical output");
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void(Check&)>>> criteria{
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
      {5, criterion_5}, {6, criterion_6}, {7, criterion_7}};
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d:%s (%.1f s)\n", c.ok ? "PASS" : "FAIL", id, c.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!c.ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
