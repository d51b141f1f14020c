#pragma once

// Record CSV reader/writer.
//
//   # spc=64, device=IR-0042, t0=2017-03-01T12:00:00Z
//   Vssa,Vssb,Vssc,Vlsa,Vlsb,Vlsc,Ilsa,Ilsb,Ilsc
//   1.0,2.0,...
//
// Columns are matched by header name, so their order is free. Values are
// written with 17 significant digits, which round-trips every finite double.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pulsesrc/error.hpp"
#include "pulsesrc/waveform.hpp"

namespace pulsesrc {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace detail

inline WaveformRecord parse_record_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line).substr(0, 1) != "#")
    throw ParseError("line 1: expected metadata line '# spc=<int>, device=..., t0=...'");

  std::optional<int> spc;
  std::string device = "unknown";
  std::optional<std::string> t0;
  {
    auto meta = detail::trim(line);
    meta.remove_prefix(1);
    for (auto field : detail::split(meta, ',')) {
      if (field.empty()) continue;
      const auto eq = field.find('=');
      if (eq == std::string_view::npos)
        throw ParseError("line 1: metadata field without '=': '" + std::string(field) + "'");
      const auto key = detail::trim(field.substr(0, eq));
      const auto value = detail::trim(field.substr(eq + 1));
      if (key == "spc") {
        int v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || p != value.data() + value.size())
          throw ParseError("line 1: spc is not an integer: '" + std::string(value) + "'");
        spc = v;
      } else if (key == "device") {
        device = std::string(value);
      } else if (key == "t0") {
        if (value != "unknown") t0 = std::string(value);
      }
    }
  }
  if (!spc) throw ParseError("line 1: samples_per_cycle metadata (spc=) absent");

  if (!std::getline(in, line)) throw ParseError("line 2: missing channel header");
  const auto header = detail::split(detail::trim(line), ',');
  std::array<int, kChannelCount> column_of;
  column_of.fill(-1);
  for (std::size_t col = 0; col < header.size(); ++col) {
    auto ch = parse_channel(header[col]);
    if (!ch) throw ParseError("line 2, column " + std::to_string(col + 1) +
                              ": unknown channel name '" + std::string(header[col]) + "'");
    if (column_of[index_of(*ch)] != -1)
      throw ParseError("line 2: duplicate channel column '" + std::string(header[col]) + "'");
    column_of[index_of(*ch)] = static_cast<int>(col);
  }
  for (auto c : kAllChannels)
    if (column_of[index_of(c)] == -1)
      throw ParseError("missing channel column '" + std::string(name_of(c)) + "'");

  WaveformRecord::Channels channels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    ++row;
    const auto cells = detail::split(trimmed, ',');
    if (cells.size() != header.size())
      throw ParseError("data row " + std::to_string(row) + " (line " + std::to_string(row + 2) +
                       "): ragged row, expected " + std::to_string(header.size()) +
                       " cells, got " + std::to_string(cells.size()));
    for (auto c : kAllChannels) {
      const auto cell = cells[static_cast<std::size_t>(column_of[index_of(c)])];
      double v = 0.0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError("data row " + std::to_string(row) + " (line " +
                         std::to_string(row + 2) + "), column " + std::string(name_of(c)) +
                         ": non-numeric or non-finite cell '" + std::string(cell) + "'");
      channels[index_of(c)].push_back(v);
    }
  }
  try {
    return WaveformRecord(*spc, std::move(channels), std::move(device), std::move(t0));
  } catch (const PreconditionError& e) {
    throw ParseError(std::string("invalid record: ") + e.what());
  }
}

inline WaveformRecord ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open record file " + path.string());
  try {
    return parse_record_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_csv(const WaveformRecord& record, std::ostream& out) {
  out << "# spc=" << record.samples_per_cycle() << ", device=" << record.device_id()
      << ", t0=" << record.start_timestamp().value_or("unknown") << '\n';
  for (std::size_t i = 0; i < kChannelCount; ++i) out << (i ? "," : "") << kChannelNames[i];
  out << '\n';
  std::string row;
  for (std::size_t k = 0; k < record.length(); ++k) {
    row.clear();
    for (std::size_t i = 0; i < kChannelCount; ++i) {
      if (i) row += ',';
      row += detail::format_double(record.channels()[i][k]);
    }
    out << row << '\n';
  }
}

inline void write_csv(const WaveformRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(record, out);
}

}  // namespace pulsesrc
