#pragma once

// Plain comma-separated files: property tables, datasets, parameter trajectories, training curves,
// field snapshots and probe histories. Data columns are written in shortest round-trip form so a
// file read back reproduces the doubles bit for bit.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/fmt/fmt.h>

#include "heatadapt/errors.hpp"
#include "heatadapt/field.hpp"
#include "heatadapt/materials.hpp"
#include "heatadapt/trainer.hpp"

namespace heatadapt::io {

inline constexpr std::string_view kDatasetHeader = "zt12,zt34,zt56,T135,T246,p12,p34,p56,cool,target";
inline constexpr std::string_view kTrajectoryHeader = "n,phi_x,omega_x,phi_y,omega_y";
inline constexpr std::string_view kCurveHeader = "epoch,train_mae,test_mae,grad_norm";
inline constexpr std::string_view kPropertyHeader = "T,value";
inline constexpr std::string_view kProbeHeader = "n,time,T";

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto c = line.find(',', pos);
    out.push_back(trim(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos)));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  return out;
}

inline std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

inline double parse_double(std::string_view s, std::string_view source, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || p != end)
    throw InvalidArgument(where(source, line) + ": not a number: '" + std::string(s) + "'");
  return v;
}

/// Reads a header-checked table with a fixed column count; blank lines are skipped.
inline std::vector<std::vector<double>> read_table(std::istream& in, std::string_view header, std::string_view source) {
  std::string line;
  std::size_t no = 0;
  bool seen_header = false;
  const std::size_t cols = split(header).size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++no;
    if (no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);  // UTF-8 byte order mark
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!seen_header) {
      auto got = split(t);
      auto want = split(header);
      if (got != want)
        throw InvalidArgument(where(source, no) + ": expected header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    const auto fields = split(t);
    if (fields.size() != cols)
      throw InvalidArgument(where(source, no) + ": expected " + std::to_string(cols) + " columns, got " +
                            std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(cols);
    for (auto f : fields) row.push_back(parse_double(f, source, no));
    rows.push_back(std::move(row));
  }
  if (!seen_header) throw InvalidArgument(std::string(source) + ": missing header '" + std::string(header) + "'");
  return rows;
}

inline std::size_t as_index(double v, std::string_view source, std::size_t row) {
  if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw InvalidArgument(std::string(source) + ": row " + std::to_string(row) + ": index must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InvalidArgument("cannot open '" + p.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + p.string() + "' for writing");
  return out;
}

}  // namespace detail

// ---- property tables

inline PropertyTable read_property_table(std::istream& in, PropertyKind kind, std::string_view source = "<stream>") {
  std::vector<PropertyPoint> pts;
  for (const auto& r : detail::read_table(in, kPropertyHeader, source)) pts.push_back({r[0], r[1]});
  return PropertyTable(kind, std::move(pts));
}

inline PropertyTable read_property_table(const std::filesystem::path& p, PropertyKind kind) {
  auto in = detail::open_in(p);
  return read_property_table(in, kind, p.string());
}

inline void write_property_table(std::ostream& out, const PropertyTable& t) {
  out << kPropertyHeader << '\n';
  for (const auto& p : t.points()) out << fmt::format("{},{}\n", p.temperature, p.value);
}

// ---- datasets

inline Dataset read_dataset(std::istream& in, std::string_view source = "<stream>") {
  Dataset d;
  std::size_t row = 0;
  for (const auto& r : detail::read_table(in, kDatasetHeader, source)) {
    ++row;
    HeatingRecord h{r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8], r[9]};
    try {
      h.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(std::string(source) + ": record " + std::to_string(row) + ": " + e.what());
    }
    d.push_back(h);
  }
  return d;
}

inline Dataset read_dataset(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_dataset(in, p.string());
}

inline void write_dataset(std::ostream& out, std::span<const HeatingRecord> data) {
  out << kDatasetHeader << '\n';
  for (const auto& r : data)
    out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.zone_time_12, r.zone_time_34, r.zone_time_56,
                       r.zone_temp_135, r.zone_temp_246, r.zone_press_12, r.zone_press_34, r.zone_press_56,
                       r.cooling_time, r.target_temp);
}

inline void write_dataset(const std::filesystem::path& p, std::span<const HeatingRecord> data) {
  auto out = detail::open_out(p);
  write_dataset(out, data);
}

// ---- parameter trajectories (stored units)

inline ParamTrajectory read_trajectory(std::istream& in, std::string_view source = "<stream>") {
  ParamTrajectory t;
  std::size_t row = 0;
  for (const auto& r : detail::read_table(in, kTrajectoryHeader, source)) {
    if (detail::as_index(r[0], source, row + 1) != row)
      throw InvalidArgument(std::string(source) + ": step indices must run 0, 1, 2, ...");
    t.phi_x.push_back(r[1]);
    t.omega_x.push_back(r[2]);
    t.phi_y.push_back(r[3]);
    t.omega_y.push_back(r[4]);
    ++row;
  }
  if (t.size() == 0) throw InvalidArgument(std::string(source) + ": empty trajectory");
  return t;
}

inline ParamTrajectory read_trajectory(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_trajectory(in, p.string());
}

inline void write_trajectory(std::ostream& out, const ParamTrajectory& t) {
  if (!t.consistent()) throw InvalidArgument("trajectory sequences differ in length");
  out << kTrajectoryHeader << '\n';
  for (std::size_t n = 0; n < t.size(); ++n)
    out << fmt::format("{},{},{},{},{}\n", n, t.phi_x[n], t.omega_x[n], t.phi_y[n], t.omega_y[n]);
}

inline void write_trajectory(const std::filesystem::path& p, const ParamTrajectory& t) {
  auto out = detail::open_out(p);
  write_trajectory(out, t);
}

// ---- training curves

inline std::string curve_row(const EpochRecord& e) {
  return fmt::format("{},{},{},{}\n", e.epoch, e.train_mae, e.test_mae, e.grad_norm);
}

inline void write_curve(std::ostream& out, std::span<const EpochRecord> history) {
  out << kCurveHeader << '\n';
  for (const auto& e : history) out << curve_row(e);
}

inline std::vector<EpochRecord> read_curve(std::istream& in, std::string_view source = "<stream>") {
  std::vector<EpochRecord> h;
  std::size_t row = 0;
  for (const auto& r : detail::read_table(in, kCurveHeader, source))
    h.push_back({detail::as_index(r[0], source, ++row), r[1], r[2], r[3]});
  return h;
}

inline std::vector<EpochRecord> read_curve(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_curve(in, p.string());
}

// ---- field snapshots and probe histories

/// Row = y index, column = x index, values in K with 9 significant digits.
inline void write_field(std::ostream& out, const TemperatureField& f) {
  for (std::size_t q = 0; q <= f.ny(); ++q) {
    const auto row = f.row(q);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out << ',';
      out << fmt::format("{:.9g}", row[k]);
    }
    out << '\n';
  }
}

inline void write_field(const std::filesystem::path& p, const TemperatureField& f) {
  auto out = detail::open_out(p);
  write_field(out, f);
}

/// Matrix of node values as written by write_field.
inline std::vector<std::vector<double>> read_matrix(std::istream& in, std::string_view source = "<stream>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    std::vector<double> row;
    for (auto f : detail::split(t)) row.push_back(detail::parse_double(f, source, no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgument(detail::where(source, no) + ": ragged matrix");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_probe_history(std::ostream& out, std::span<const double> history, double tau) {
  out << kProbeHeader << '\n';
  for (std::size_t n = 0; n < history.size(); ++n)
    out << fmt::format("{},{},{}\n", n, static_cast<double>(n) * tau, history[n]);
}

inline void write_probe_history(const std::filesystem::path& p, std::span<const double> history, double tau) {
  auto out = detail::open_out(p);
  write_probe_history(out, history, tau);
}

}  // namespace heatadapt::io
