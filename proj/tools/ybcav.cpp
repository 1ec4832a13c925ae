// Command-line front end: ybcav <spectrum|snr|scatter|transit|motdip> [options]

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "ybcav/ybcav.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> threads;
};

ybcav::RunConfig assemble(const Overrides& o) {
  ybcav::RunConfig c = o.config_path.empty() ? ybcav::RunConfig{} : ybcav::load_config(o.config_path);
  if (o.seed) c.master_seed = *o.seed;
  if (o.out) c.output = *o.out;
  if (o.format) c.format = *o.format;
  if (o.threads) c.threads = *o.threads;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-mode cavity QED simulator for nuclear-spin readout of 171Yb"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  Overrides o;
  bool print_defaults = false;
  app.add_option("-c,--config", o.config_path, "JSON config file; missing keys keep their defaults")
      ->envname("YBCAV_CONFIG");
  app.add_option("--seed", o.seed, "master seed for stochastic commands")->envname("YBCAV_SEED");
  app.add_option("-o,--out", o.out, "output directory")->envname("YBCAV_OUT");
  app.add_option("--format", o.format, "table format: csv or jsonl")->envname("YBCAV_FORMAT");
  app.add_option("-j,--threads", o.threads, "worker threads")->envname("YBCAV_THREADS");
  app.add_flag("--print-defaults", print_defaults, "print the default config as JSON and exit");

  auto* spectrum = app.add_subcommand("spectrum", "fluorescence spectra with the light-shift beam off and on");
  auto* snr = app.add_subcommand("snr", "predicted SNR versus light-shift power and waist");
  auto* scatter = app.add_subcommand("scatter", "sigma+/sigma- counts per measurement window");
  auto* transit = app.add_subcommand("transit", "single-atom transit records");
  auto* motdip = app.add_subcommand("motdip", "MOT atom-number dip versus light-shift detuning");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (print_defaults) {
      std::cout << ybcav::serialize_config(ybcav::RunConfig{});
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitConfig;
    }
    const ybcav::RunConfig c = assemble(o);
    nlohmann::ordered_json summary;
    if (spectrum->parsed()) summary = ybcav::cmd_spectrum(c);
    if (snr->parsed()) summary = ybcav::cmd_snr(c);
    if (scatter->parsed()) summary = ybcav::cmd_scatter(c);
    if (transit->parsed()) summary = ybcav::cmd_transit(c);
    if (motdip->parsed()) summary = ybcav::cmd_motdip(c);
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const ybcav::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ybcav::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}
