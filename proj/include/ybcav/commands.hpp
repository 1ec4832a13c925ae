#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ybcav/config.hpp"
#include "ybcav/io.hpp"
#include "ybcav/observables.hpp"
#include "ybcav/transit.hpp"

namespace ybcav {

// Each command writes its tables and a "<name>_summary.json" into
// config.output and returns the summary.

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& c) {
  const std::filesystem::path dir(c.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + c.output + ": " + ec.message());
  return dir;
}

inline void emit(const std::filesystem::path& dir, const std::string& stem, const Table& t, EmitFormat f) {
  std::ostringstream os;
  write_table(os, t, f);
  write_file((dir / (stem + table_extension(f))).string(), os.str());
}

inline void emit_summary(const std::filesystem::path& dir, const std::string& stem, const nlohmann::ordered_json& j) {
  write_file((dir / (stem + "_summary.json")).string(), j.dump(2) + "\n");
}

inline nlohmann::ordered_json stats_json(const SpectrumStats& s) {
  return {{"peak_MHz", s.peak_detuning_mhz},
          {"peak_counts_per_atom", s.peak_counts},
          {"mean_MHz", s.mean_mhz},
          {"skewness", s.skewness},
          {"moment_window_points", s.window_points}};
}

// Independent stream families for the datasets of one command.
inline std::uint64_t dataset_seed(std::uint64_t master, std::uint64_t tag) {
  return splitmix64(master ^ splitmix64(tag * 0x9E3779B97F4A7C15ULL + 1));
}

inline nlohmann::json snr_json(const SnrResult& s) {
  if (s.infinite) return "inf";
  return s.value;
}

inline nlohmann::json pearson_json(const PearsonResult& p) {
  if (!p.defined) return nullptr;
  return p.value;
}

}  // namespace detail

/// Fluorescence spectra with the light-shift beam off, on, and on with the
/// narrow waist at the same power.
inline nlohmann::ordered_json cmd_spectrum(const RunConfig& c) {
  c.validate();
  const auto dir = detail::prepare_output(c);
  const auto fmt = c.emit_format();
  const auto grid = c.spectrum.grid_MHz.values();
  const TransitConfig base = c.transit_config(c.spectrum.excitation_power_uW, true);
  SpectrumOptions opts{c.spectrum.quadrature.params(), static_cast<unsigned>(c.threads)};

  const auto off = fluorescence_spectrum(grid, base, false, opts);
  const auto on = fluorescence_spectrum(grid, base, true, opts);
  TransitConfig narrow_cfg = base;
  narrow_cfg.light_shift.waist = micrometers(c.spectrum.narrow_waist_um);
  const auto narrow = fluorescence_spectrum(grid, narrow_cfg, true, opts);

  detail::emit(dir, "spectrum_off", spectrum_table(off), fmt);
  detail::emit(dir, "spectrum_on", spectrum_table(on), fmt);
  detail::emit(dir, "spectrum_narrow", spectrum_table(narrow), fmt);

  const ShiftResult centre = stark_shifts(base.light_shift, base.scheme, Vec3{0.0, base.light_shift.axis_offset, 0.0});
  const auto s_off = spectrum_stats(off), s_on = spectrum_stats(on), s_narrow = spectrum_stats(narrow);
  nlohmann::ordered_json j;
  j["grid_step_MHz"] = c.spectrum.grid_MHz.step;
  j["delta_32_MHz"] = to_mhz(centre.delta_32);
  j["delta_12_MHz"] = to_mhz(centre.delta_12);
  j["splitting_MHz"] = to_mhz(centre.splitting);
  j["off"] = detail::stats_json(s_off);
  j["on"] = detail::stats_json(s_on);
  j["narrow"] = detail::stats_json(s_narrow);
  j["narrow"]["waist_um"] = c.spectrum.narrow_waist_um;
  j["peak_shift_MHz"] = s_on.peak_detuning_mhz - s_off.peak_detuning_mhz;
  detail::emit_summary(dir, "spectrum", j);
  return j;
}

/// Dark-count-free SNR versus light-shift power and versus waist.
inline nlohmann::ordered_json cmd_snr(const RunConfig& c) {
  c.validate();
  const auto dir = detail::prepare_output(c);
  const auto fmt = c.emit_format();
  const TransitConfig base = c.measurement_config(true);
  SnrSweepOptions opts{c.snr.quadrature.params(), static_cast<unsigned>(c.threads), true,
                       mhz(c.measurement.detuning_offset_MHz)};

  std::vector<double> powers, waists;
  for (double p : c.snr.light_shift_powers_mW) powers.push_back(milliwatts(p));
  for (double w : c.snr.light_shift_waists_um) waists.push_back(micrometers(w));
  const auto by_power = predicted_snr_vs_power(powers, base, opts);
  const auto by_waist = predicted_snr_vs_waist(waists, base, opts);
  detail::emit(dir, "snr_power", snr_curve_table(by_power, "power_mW", 1e3), fmt);
  detail::emit(dir, "snr_waist", snr_curve_table(by_waist, "waist_um", 1e6), fmt);

  bool nondecreasing = true;
  for (std::size_t i = 1; i < by_power.size(); ++i)
    if (by_power[i].x > by_power[i - 1].x && by_power[i].snr < by_power[i - 1].snr) nondecreasing = false;

  nlohmann::ordered_json j;
  j["operating_point"] = {{"power_mW", c.light_shift.power_mW},
                          {"waist_um", c.light_shift.waist_um},
                          {"detuning_MHz", c.light_shift.detuning_MHz},
                          {"excitation_power_uW", c.measurement.excitation_power_uW},
                          {"predicted_snr", predicted_snr(base, c.snr.quadrature.params())}};
  j["snr_nondecreasing_in_power"] = nondecreasing;
  detail::emit_summary(dir, "snr", j);
  return j;
}

/// Measurement windows for both spins with the light-shift beam off and on.
inline nlohmann::ordered_json cmd_scatter(const RunConfig& c) {
  c.validate();
  const std::uint64_t seed = c.require_seed();
  const auto dir = detail::prepare_output(c);
  const auto fmt = c.emit_format();
  const auto n = static_cast<std::size_t>(c.measurement.windows);
  const CavityParams cav = c.cavity_params();

  nlohmann::ordered_json j;
  j["master_seed"] = seed;
  j["windows"] = c.measurement.windows;
  j["window_ms"] = c.measurement.window_ms;
  std::uint64_t tag = 0;
  for (bool shift_on : {false, true}) {
    const TransitModel model(c.measurement_config(shift_on));
    const std::string label = shift_on ? "on" : "off";
    for (Spin s : {Spin::up, Spin::down}) {
      const auto recs = run_ensemble(n, detail::dataset_seed(seed, tag++), c.window_spec(s), model,
                                     static_cast<unsigned>(c.threads));
      detail::emit(dir, "scatter_" + label + "_" + to_string(s), count_records_table(recs), fmt);

      double plus = 0.0, minus = 0.0, atoms = 0.0;
      for (const auto& r : recs) {
        plus += static_cast<double>(r.counts_sigma_plus);
        minus += static_cast<double>(r.counts_sigma_minus);
        atoms += static_cast<double>(r.atom_count);
      }
      const double exposure = static_cast<double>(n) * c.measurement.window_ms * 1e-3;
      const auto corrected = dark_count_correct({plus, minus}, {cav.dark_rate_sigma_plus, cav.dark_rate_sigma_minus},
                                                exposure);
      const double nn = static_cast<double>(n);
      j[label][to_string(s)] = {{"mean_sigma_plus", plus / nn},
                                {"mean_sigma_minus", minus / nn},
                                {"mean_atoms", atoms / nn},
                                {"pearson_r", detail::pearson_json(pearson_correlation(recs))},
                                {"snr_raw", detail::snr_json(snr_from_counts(recs, s))},
                                {"snr_dark_corrected", detail::snr_json(corrected.snr(s))},
                                {"dark_correction_clamped", corrected.clamped()}};
    }
  }
  detail::emit_summary(dir, "scatter", j);
  return j;
}

/// Single-atom transit records for both spins, light-shift beam on.
inline nlohmann::ordered_json cmd_transit(const RunConfig& c) {
  c.validate();
  const std::uint64_t seed = c.require_seed();
  const auto dir = detail::prepare_output(c);
  const auto fmt = c.emit_format();
  const auto n = static_cast<std::size_t>(c.measurement.transits);
  const TransitModel model(c.measurement_config(true));

  nlohmann::ordered_json j;
  j["master_seed"] = seed;
  j["transits"] = c.measurement.transits;
  std::uint64_t tag = 100;
  double all_counts = 0.0;
  for (Spin s : {Spin::up, Spin::down}) {
    const auto recs = run_transit_ensemble(n, detail::dataset_seed(seed, tag++), s, model,
                                           static_cast<unsigned>(c.threads));
    detail::emit(dir, "transits_" + to_string(s), transit_records_table(recs), fmt);
    double plus = 0.0, minus = 0.0, flipped_count = 0.0;
    for (const auto& r : recs) {
      plus += static_cast<double>(r.counts_sigma_plus);
      minus += static_cast<double>(r.counts_sigma_minus);
      if (r.final_spin != r.initial_spin) flipped_count += 1.0;
    }
    const double nn = static_cast<double>(n);
    all_counts += plus + minus;
    j[to_string(s)] = {{"mean_counts_per_atom", (plus + minus) / nn},
                       {"mean_sigma_plus", plus / nn},
                       {"mean_sigma_minus", minus / nn},
                       {"snr", detail::snr_json(snr_from_counts(recs, s))},
                       {"final_spin_flipped_fraction", flipped_count / nn}};
  }
  j["mean_counts_per_atom"] = all_counts / (2.0 * static_cast<double>(n));
  detail::emit_summary(dir, "transit", j);
  return j;
}

/// MOT atom number versus light-shift beam detuning.
inline nlohmann::ordered_json cmd_motdip(const RunConfig& c) {
  c.validate();
  const auto dir = detail::prepare_output(c);
  const auto fmt = c.emit_format();
  const MotParams mot = c.mot_params();
  const auto dip = mot_dip_profile(c.mot.grid_MHz.values(), mot);
  detail::emit(dir, "motdip", dip_table(dip), fmt);
  nlohmann::ordered_json j;
  j["eta"] = mot.eta();
  j["saturation_parameter"] = mot.saturation();
  j["depth"] = 1.0 - mot.normalized_atom_number(0.0);
  if (const auto h = mot_dip_hwhm_mhz(mot))
    j["hwhm_MHz"] = *h;
  else
    j["hwhm_MHz"] = nullptr;
  detail::emit_summary(dir, "motdip", j);
  return j;
}

}  // namespace ybcav
