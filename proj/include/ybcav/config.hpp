#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ybcav/io.hpp"
#include "ybcav/observables.hpp"
#include "ybcav/transit.hpp"

namespace ybcav {

// Configuration values are held in the units named by their keys, exactly as
// they appear in the file, and converted to SI only when models are built.

struct GridSection {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  std::vector<double> values() const {
    require(std::isfinite(start) && std::isfinite(stop) && std::isfinite(step), "grid bounds must be finite");
    require(step > 0.0, "grid step must be positive");
    require(stop >= start, "grid stop must not precede start");
    const double span = (stop - start) / step;
    require(span < 1e6, "grid has too many points");
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = start + step * static_cast<double>(i);
    return v;
  }
};

struct QuadratureSection {
  int radial = 24;
  int angular = 6;
  ImpactQuadrature params() const { return {radial, angular}; }
};

struct RunConfig {
  struct {
    double gamma_p1_MHz = 0.091;
    double gamma_d1_line_kHz = 16.0;
    double branching_d1_to_p0 = 0.64;
    double d1_hyperfine_splitting_MHz = 2991.176470588235;
    double stark_scale = 2.8631086245289681;
  } scheme;

  struct {
    double g0_MHz = 2.8;
    double kappa_MHz = 4.8;
    double gamma_MHz = 0.091;
    double mode_waist_um = 19.0;
    double detection_efficiency = 0.20;
    double dark_rate_sigma_plus_per_ms = 1.0;
    double dark_rate_sigma_minus_per_ms = 0.5;
  } cavity;

  struct {
    double drop_height_mm = 7.0;
    double impact_radius_waists = 3.0;
    double axial_factor = 0.70710678118654757;
    double window_half_length_um = 75.0;
    double time_step_us = 1.0;
  } geometry;

  struct {
    double waist_um = 25.0;
    std::string polarization = "linear_y";
    double axis_offset_um = 0.0;
  } excitation;

  struct {
    double power_mW = 9.0;
    double waist_um = 50.0;
    double detuning_MHz = -300.0;
    std::string polarization = "pi";
    double axis_offset_um = 0.0;
  } light_shift;

  struct {
    double excitation_power_uW = 1.8;
    GridSection grid_MHz{-60.0, 60.0, 0.5};
    double narrow_waist_um = 20.0;
    QuadratureSection quadrature;
  } spectrum;

  struct {
    double excitation_power_uW = 4.7;
    double detuning_offset_MHz = 0.0;
    double window_ms = 2.0;
    double atom_rate_up_per_ms = 0.5;
    double atom_rate_down_per_ms = 0.6;
    std::int64_t windows = 10000;
    std::int64_t transits = 10000;
  } measurement;

  struct {
    std::vector<double> light_shift_powers_mW{0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
    std::vector<double> light_shift_waists_um{10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0, 60.0, 80.0, 100.0};
    QuadratureSection quadrature;
  } snr;

  struct {
    double loading_rate_per_s = 1e6;
    double gamma0_per_s = 0.5;
    double probe_power_density_mW_per_cm2 = 3.0;
    double natural_linewidth_d1_kHz = 16.0;
    double branching = 0.64;
    double p1_population = 0.5;
    GridSection grid_MHz{-400.0, 400.0, 2.0};
  } mot;

  std::optional<std::uint64_t> master_seed;
  std::string output = "out";
  std::string format = "csv";
  int threads = 1;

  // -- model builders -------------------------------------------------------

  LevelScheme level_scheme() const {
    SchemeConfig c;
    c.gamma_p1 = mhz(scheme.gamma_p1_MHz);
    c.gamma_d1_line = khz(scheme.gamma_d1_line_kHz);
    c.branching_d1_to_p0 = scheme.branching_d1_to_p0;
    c.d1_hyperfine_splitting = mhz(scheme.d1_hyperfine_splitting_MHz);
    c.stark_scale = scheme.stark_scale;
    return build_level_scheme(c);
  }

  CavityParams cavity_params() const {
    CavityParams c;
    c.g0 = mhz(cavity.g0_MHz);
    c.kappa = mhz(cavity.kappa_MHz);
    c.gamma = mhz(cavity.gamma_MHz);
    c.mode_waist = micrometers(cavity.mode_waist_um);
    c.detection_efficiency = cavity.detection_efficiency;
    c.dark_rate_sigma_plus = cavity.dark_rate_sigma_plus_per_ms * 1e3;
    c.dark_rate_sigma_minus = cavity.dark_rate_sigma_minus_per_ms * 1e3;
    c.validate();
    return c;
  }

  TransitGeometry geometry_params() const {
    TransitGeometry g;
    g.drop_height = geometry.drop_height_mm * 1e-3;
    g.mode_waist = micrometers(cavity.mode_waist_um);
    g.impact_radius_factor = geometry.impact_radius_waists;
    g.axial_factor = geometry.axial_factor;
    g.window_half_length = micrometers(geometry.window_half_length_um);
    g.time_step = geometry.time_step_us * 1e-6;
    g.validate();
    return g;
  }

  BeamParams light_shift_beam() const {
    BeamParams b{milliwatts(light_shift.power_mW), micrometers(light_shift.waist_um), mhz(light_shift.detuning_MHz),
                 beam_polarization_from_string(light_shift.polarization), micrometers(light_shift.axis_offset_um)};
    b.validate();
    return b;
  }

  BeamParams excitation_beam(double power_uW) const {
    BeamParams b{power_uW * 1e-6, micrometers(excitation.waist_um), 0.0,
                 beam_polarization_from_string(excitation.polarization), micrometers(excitation.axis_offset_um)};
    b.validate();
    return b;
  }

  /// Transit model inputs at the given excitation power; detuning left at 0.
  TransitConfig transit_config(double excitation_power_uW, bool light_shift_on) const {
    TransitConfig t;
    t.scheme = level_scheme();
    t.cavity = cavity_params();
    t.excitation = excitation_beam(excitation_power_uW);
    t.light_shift = light_shift_beam();
    t.light_shift_on = light_shift_on;
    t.geometry = geometry_params();
    t.validate();
    return t;
  }

  /// Measurement scenario: laser on the shifted m'=3/2 line at the beam
  /// centre (the bare line with the beam off) plus the configured offset.
  TransitConfig measurement_config(bool light_shift_on) const {
    TransitConfig t = transit_config(measurement.excitation_power_uW, light_shift_on);
    t.excitation.detuning = tuned_excitation_detuning(t) + mhz(measurement.detuning_offset_MHz);
    return t;
  }

  WindowSpec window_spec(Spin s) const {
    const double rate = (s == Spin::up ? measurement.atom_rate_up_per_ms : measurement.atom_rate_down_per_ms) * 1e3;
    WindowSpec w{rate, measurement.window_ms * 1e-3, s};
    w.validate();
    return w;
  }

  MotParams mot_params() const {
    MotParams m;
    m.loading_rate = mot.loading_rate_per_s;
    m.gamma0 = mot.gamma0_per_s;
    m.probe_power_density = mot.probe_power_density_mW_per_cm2 * 10.0;  // mW/cm^2 -> W/m^2
    m.natural_linewidth_d1 = mot.natural_linewidth_d1_kHz * 1e3;
    m.branching = mot.branching;
    m.p1_population = mot.p1_population;
    m.validate();
    return m;
  }

  EmitFormat emit_format() const { return emit_format_from_string(format); }

  std::uint64_t require_seed() const {
    if (!master_seed) throw ConfigError("master_seed is required for stochastic commands (set it in the config or pass --seed)");
    return *master_seed;
  }

  /// Builds every parameter set once so that each validates on its own.
  void validate() const {
    (void)level_scheme();
    (void)transit_config(spectrum.excitation_power_uW, true);
    (void)transit_config(measurement.excitation_power_uW, true);
    (void)mot_params();
    (void)emit_format();
    (void)window_spec(Spin::up);
    (void)window_spec(Spin::down);
    (void)spectrum.grid_MHz.values();
    (void)mot.grid_MHz.values();
    require(spectrum.narrow_waist_um > 0.0, "narrow waist must be positive");
    require(measurement.windows >= 1 && measurement.transits >= 1, "ensemble sizes must be at least 1");
    require(!snr.light_shift_powers_mW.empty() && !snr.light_shift_waists_um.empty(), "SNR grids must be nonempty");
    for (double p : snr.light_shift_powers_mW) require(p > 0.0 && std::isfinite(p), "SNR power grid must be positive");
    for (double w : snr.light_shift_waists_um) require(w > 0.0 && std::isfinite(w), "SNR waist grid must be positive");
    require(threads >= 1 && threads <= 1024, "threads must lie in [1, 1024]");
    require(!output.empty(), "output path must not be empty");
  }
};

// ---------------------------------------------------------------------------
// JSON mapping. Missing keys keep their defaults; unknown keys are rejected.

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    read(*it, out, where(key));
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string sub(const char* key) const { return where(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key().c_str()));
  }

 private:
  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : path_;
    return key ? p + "." + key : p;
  }

  static void read(const nlohmann::json& v, double& out, const std::string& at) {
    if (!v.is_number()) throw ConfigError(at + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(at + " must be finite");
  }
  static void read(const nlohmann::json& v, int& out, const std::string& at) {
    if (!v.is_number_integer()) throw ConfigError(at + " must be an integer");
    out = v.get<int>();
  }
  static void read(const nlohmann::json& v, std::int64_t& out, const std::string& at) {
    if (!v.is_number_integer()) throw ConfigError(at + " must be an integer");
    out = v.get<std::int64_t>();
  }
  static void read(const nlohmann::json& v, std::string& out, const std::string& at) {
    if (!v.is_string()) throw ConfigError(at + " must be a string");
    out = v.get<std::string>();
  }
  static void read(const nlohmann::json& v, std::vector<double>& out, const std::string& at) {
    if (!v.is_array()) throw ConfigError(at + " must be an array of numbers");
    out.clear();
    for (const auto& e : v) {
      double d = 0.0;
      read(e, d, at);
      out.push_back(d);
    }
  }
  static void read(const nlohmann::json& v, std::optional<std::uint64_t>& out, const std::string& at) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(at + " must be a nonnegative integer");
    out = v.get<std::uint64_t>();
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_grid(ObjectReader& parent, const char* key, GridSection& g) {
  if (const auto* j = parent.child(key)) {
    ObjectReader r(*j, parent.sub(key));
    r.get("start", g.start);
    r.get("stop", g.stop);
    r.get("step", g.step);
    r.finish();
  }
}

inline void read_quadrature(ObjectReader& parent, const char* key, QuadratureSection& q) {
  if (const auto* j = parent.child(key)) {
    ObjectReader r(*j, parent.sub(key));
    r.get("radial", q.radial);
    r.get("angular", q.angular);
    r.finish();
  }
}

template <class Fn>
void read_section(ObjectReader& root, const char* key, Fn fn) {
  if (const auto* j = root.child(key)) {
    ObjectReader r(*j, key);
    fn(r);
    r.finish();
  }
}

inline nlohmann::ordered_json grid_json(const GridSection& g) {
  return {{"start", g.start}, {"stop", g.stop}, {"step", g.step}};
}

inline nlohmann::ordered_json quadrature_json(const QuadratureSection& q) {
  return {{"radial", q.radial}, {"angular", q.angular}};
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  detail::ObjectReader root(j, "");
  detail::read_section(root, "scheme", [&](auto& r) {
    r.get("gamma_p1_MHz", c.scheme.gamma_p1_MHz);
    r.get("gamma_d1_line_kHz", c.scheme.gamma_d1_line_kHz);
    r.get("branching_d1_to_p0", c.scheme.branching_d1_to_p0);
    r.get("d1_hyperfine_splitting_MHz", c.scheme.d1_hyperfine_splitting_MHz);
    r.get("stark_scale", c.scheme.stark_scale);
  });
  detail::read_section(root, "cavity", [&](auto& r) {
    r.get("g0_MHz", c.cavity.g0_MHz);
    r.get("kappa_MHz", c.cavity.kappa_MHz);
    r.get("gamma_MHz", c.cavity.gamma_MHz);
    r.get("mode_waist_um", c.cavity.mode_waist_um);
    r.get("detection_efficiency", c.cavity.detection_efficiency);
    r.get("dark_rate_sigma_plus_per_ms", c.cavity.dark_rate_sigma_plus_per_ms);
    r.get("dark_rate_sigma_minus_per_ms", c.cavity.dark_rate_sigma_minus_per_ms);
  });
  detail::read_section(root, "geometry", [&](auto& r) {
    r.get("drop_height_mm", c.geometry.drop_height_mm);
    r.get("impact_radius_waists", c.geometry.impact_radius_waists);
    r.get("axial_factor", c.geometry.axial_factor);
    r.get("window_half_length_um", c.geometry.window_half_length_um);
    r.get("time_step_us", c.geometry.time_step_us);
  });
  detail::read_section(root, "excitation", [&](auto& r) {
    r.get("waist_um", c.excitation.waist_um);
    r.get("polarization", c.excitation.polarization);
    r.get("axis_offset_um", c.excitation.axis_offset_um);
  });
  detail::read_section(root, "light_shift", [&](auto& r) {
    r.get("power_mW", c.light_shift.power_mW);
    r.get("waist_um", c.light_shift.waist_um);
    r.get("detuning_MHz", c.light_shift.detuning_MHz);
    r.get("polarization", c.light_shift.polarization);
    r.get("axis_offset_um", c.light_shift.axis_offset_um);
  });
  detail::read_section(root, "spectrum", [&](auto& r) {
    r.get("excitation_power_uW", c.spectrum.excitation_power_uW);
    detail::read_grid(r, "grid_MHz", c.spectrum.grid_MHz);
    r.get("narrow_waist_um", c.spectrum.narrow_waist_um);
    detail::read_quadrature(r, "quadrature", c.spectrum.quadrature);
  });
  detail::read_section(root, "measurement", [&](auto& r) {
    r.get("excitation_power_uW", c.measurement.excitation_power_uW);
    r.get("detuning_offset_MHz", c.measurement.detuning_offset_MHz);
    r.get("window_ms", c.measurement.window_ms);
    r.get("atom_rate_up_per_ms", c.measurement.atom_rate_up_per_ms);
    r.get("atom_rate_down_per_ms", c.measurement.atom_rate_down_per_ms);
    r.get("windows", c.measurement.windows);
    r.get("transits", c.measurement.transits);
  });
  detail::read_section(root, "snr", [&](auto& r) {
    r.get("light_shift_powers_mW", c.snr.light_shift_powers_mW);
    r.get("light_shift_waists_um", c.snr.light_shift_waists_um);
    detail::read_quadrature(r, "quadrature", c.snr.quadrature);
  });
  detail::read_section(root, "mot", [&](auto& r) {
    r.get("loading_rate_per_s", c.mot.loading_rate_per_s);
    r.get("gamma0_per_s", c.mot.gamma0_per_s);
    r.get("probe_power_density_mW_per_cm2", c.mot.probe_power_density_mW_per_cm2);
    r.get("natural_linewidth_d1_kHz", c.mot.natural_linewidth_d1_kHz);
    r.get("branching", c.mot.branching);
    r.get("p1_population", c.mot.p1_population);
    detail::read_grid(r, "grid_MHz", c.mot.grid_MHz);
  });
  root.get("master_seed", c.master_seed);
  root.get("output", c.output);
  root.get("format", c.format);
  root.get("threads", c.threads);
  root.finish();
  return c;
}

inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["scheme"] = {{"gamma_p1_MHz", c.scheme.gamma_p1_MHz},
                 {"gamma_d1_line_kHz", c.scheme.gamma_d1_line_kHz},
                 {"branching_d1_to_p0", c.scheme.branching_d1_to_p0},
                 {"d1_hyperfine_splitting_MHz", c.scheme.d1_hyperfine_splitting_MHz},
                 {"stark_scale", c.scheme.stark_scale}};
  j["cavity"] = {{"g0_MHz", c.cavity.g0_MHz},
                 {"kappa_MHz", c.cavity.kappa_MHz},
                 {"gamma_MHz", c.cavity.gamma_MHz},
                 {"mode_waist_um", c.cavity.mode_waist_um},
                 {"detection_efficiency", c.cavity.detection_efficiency},
                 {"dark_rate_sigma_plus_per_ms", c.cavity.dark_rate_sigma_plus_per_ms},
                 {"dark_rate_sigma_minus_per_ms", c.cavity.dark_rate_sigma_minus_per_ms}};
  j["geometry"] = {{"drop_height_mm", c.geometry.drop_height_mm},
                   {"impact_radius_waists", c.geometry.impact_radius_waists},
                   {"axial_factor", c.geometry.axial_factor},
                   {"window_half_length_um", c.geometry.window_half_length_um},
                   {"time_step_us", c.geometry.time_step_us}};
  j["excitation"] = {{"waist_um", c.excitation.waist_um},
                     {"polarization", c.excitation.polarization},
                     {"axis_offset_um", c.excitation.axis_offset_um}};
  j["light_shift"] = {{"power_mW", c.light_shift.power_mW},
                      {"waist_um", c.light_shift.waist_um},
                      {"detuning_MHz", c.light_shift.detuning_MHz},
                      {"polarization", c.light_shift.polarization},
                      {"axis_offset_um", c.light_shift.axis_offset_um}};
  j["spectrum"] = {{"excitation_power_uW", c.spectrum.excitation_power_uW},
                   {"grid_MHz", detail::grid_json(c.spectrum.grid_MHz)},
                   {"narrow_waist_um", c.spectrum.narrow_waist_um},
                   {"quadrature", detail::quadrature_json(c.spectrum.quadrature)}};
  j["measurement"] = {{"excitation_power_uW", c.measurement.excitation_power_uW},
                      {"detuning_offset_MHz", c.measurement.detuning_offset_MHz},
                      {"window_ms", c.measurement.window_ms},
                      {"atom_rate_up_per_ms", c.measurement.atom_rate_up_per_ms},
                      {"atom_rate_down_per_ms", c.measurement.atom_rate_down_per_ms},
                      {"windows", c.measurement.windows},
                      {"transits", c.measurement.transits}};
  j["snr"] = {{"light_shift_powers_mW", c.snr.light_shift_powers_mW},
              {"light_shift_waists_um", c.snr.light_shift_waists_um},
              {"quadrature", detail::quadrature_json(c.snr.quadrature)}};
  j["mot"] = {{"loading_rate_per_s", c.mot.loading_rate_per_s},
              {"gamma0_per_s", c.mot.gamma0_per_s},
              {"probe_power_density_mW_per_cm2", c.mot.probe_power_density_mW_per_cm2},
              {"natural_linewidth_d1_kHz", c.mot.natural_linewidth_d1_kHz},
              {"branching", c.mot.branching},
              {"p1_population", c.mot.p1_population},
              {"grid_MHz", detail::grid_json(c.mot.grid_MHz)}};
  if (c.master_seed)
    j["master_seed"] = *c.master_seed;
  else
    j["master_seed"] = nullptr;
  j["output"] = c.output;
  j["format"] = c.format;
  j["threads"] = c.threads;
  return j;
}

inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const RunConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace ybcav
