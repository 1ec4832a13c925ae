#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ybcav/observables.hpp"
#include "ybcav/transit.hpp"

namespace ybcav {

enum class EmitFormat { csv, jsonl };

inline std::string to_string(EmitFormat f) { return f == EmitFormat::csv ? "csv" : "jsonl"; }

inline EmitFormat emit_format_from_string(const std::string& s) {
  if (s == "csv") return EmitFormat::csv;
  if (s == "jsonl") return EmitFormat::jsonl;
  throw ConfigError("unknown output format '" + s + "' (expected csv or jsonl)");
}

/// Shortest round-trip decimal form, independent of the C locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw NumericalError("number formatting failed");
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }

/// Flat table with a named, versioned schema.
struct Table {
  using Cell = std::variant<double, std::int64_t, std::string>;

  std::string kind;
  int version = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw ModelError("table row width does not match its header");
    rows.push_back(std::move(row));
  }
};

namespace detail {

inline std::string cell_text(const Table::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return format_number(*i);
  return std::get<std::string>(c);
}

inline nlohmann::json cell_json(const Table::Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return format_number(*d);
    return *d;
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace detail

/// CSV: "# ybcav.<kind> v<version>", then the header row, then data.
inline void write_csv(std::ostream& os, const Table& t) {
  os << "# ybcav." << t.kind << " v" << t.version << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::cell_text(row[i]);
    os << '\n';
  }
}

/// JSON lines: a header object, then one object per row.
inline void write_jsonl(std::ostream& os, const Table& t) {
  nlohmann::ordered_json header;
  header["format"] = "ybcav." + t.kind;
  header["version"] = t.version;
  header["columns"] = t.columns;
  os << header.dump() << '\n';
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = detail::cell_json(row[i]);
    os << obj.dump() << '\n';
  }
}

inline void write_table(std::ostream& os, const Table& t, EmitFormat f) {
  f == EmitFormat::csv ? write_csv(os, t) : write_jsonl(os, t);
}

inline std::string table_extension(EmitFormat f) { return f == EmitFormat::csv ? ".csv" : ".jsonl"; }

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Record tables

inline Table count_records_table(const std::vector<CountRecord>& recs) {
  Table t{"count_records", 1, {"run", "window_ms", "counts_sigma_plus", "counts_sigma_minus", "atom_count"}, {}};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    t.add_row({static_cast<std::int64_t>(i), r.window * 1e3, r.counts_sigma_plus, r.counts_sigma_minus, r.atom_count});
  }
  return t;
}

inline Table transit_records_table(const std::vector<TransitRecord>& recs) {
  Table t{"transit_records",
          1,
          {"run", "counts_sigma_plus", "counts_sigma_minus", "initial_spin", "final_spin", "transit_duration_us",
           "peak_coupling_MHz"},
          {}};
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    t.add_row({static_cast<std::int64_t>(i), r.counts_sigma_plus, r.counts_sigma_minus, to_string(r.initial_spin),
               to_string(r.final_spin), r.transit_duration * 1e6, to_mhz(r.peak_coupling)});
  }
  return t;
}

inline Table spectrum_table(const std::vector<SpectrumPoint>& pts) {
  Table t{"spectrum", 1, {"detuning_MHz", "mean_counts"}, {}};
  for (const auto& p : pts) t.add_row({p.detuning_mhz, p.mean_counts});
  return t;
}

inline Table snr_curve_table(const std::vector<CurvePoint>& pts, const std::string& x_column, double x_scale) {
  Table t{"snr_curve", 1, {x_column, "snr"}, {}};
  for (const auto& p : pts) t.add_row({p.x * x_scale, p.snr});
  return t;
}

inline Table dip_table(const std::vector<DipPoint>& pts) {
  Table t{"dip", 1, {"detuning_MHz", "normalized_N"}, {}};
  for (const auto& p : pts) t.add_row({p.detuning_mhz, p.normalized_n});
  return t;
}

}  // namespace ybcav
