#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "epsketch/core.hpp"
#include "epsketch/sketch.hpp"

namespace epsketch {

enum class PointsFormat { kAuto, kCsv, kBinary };

inline constexpr std::array<char, 4> kPointsMagic{'E', 'P', 'T', 'S'};
inline constexpr std::uint8_t kPointsVersion = 0x01;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view tok, std::size_t line) {
  tok = trim(tok);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw InvalidArgument("line " + std::to_string(line) + ": bad number '" +
                          std::string(tok) + "'");
  return v;
}

}  // namespace detail

/// One point per row, comma separated. Blank lines and lines starting with
/// '#' are skipped. An input without rows yields an empty set of dimension 1.
inline PointSet parse_points_csv(std::istream& in) {
  std::vector<double> flat;
  std::size_t dim = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::size_t count = 0;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = view.find(',', start);
      flat.push_back(detail::parse_double(view.substr(start, comma - start), lineno));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (dim == 0) dim = count;
    else if (count != dim)
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(dim) + " values, got " + std::to_string(count));
  }
  return dim == 0 ? PointSet(1) : PointSet(dim, std::move(flat));
}

inline PointSet parse_points_binary(std::span<const std::uint8_t> bytes) {
  detail::ByteSource in(bytes);
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), kPointsMagic.begin(), kPointsMagic.end(),
                  [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); }))
    throw DecodeError("not a binary points file (bad magic)");
  if (in.get_le<std::uint8_t>() != kPointsVersion)
    throw DecodeError("unsupported points file version");
  const auto n = in.get_le<std::uint32_t>();
  const auto k = in.get_le<std::uint32_t>();
  if (k == 0) throw DecodeError("points file has dimension 0");
  if (in.remaining() != static_cast<std::uint64_t>(n) * k * 8)
    throw DecodeError("points file payload length mismatch");
  std::vector<double> flat(static_cast<std::size_t>(n) * k);
  for (auto& v : flat) v = in.get_f64();
  return PointSet(k, std::move(flat));
}

inline std::vector<std::uint8_t> serialize_points_binary(const PointSet& p) {
  detail::ByteSink out;
  for (char c : kPointsMagic) out.bytes.push_back(static_cast<std::uint8_t>(c));
  out.put_le<std::uint8_t>(kPointsVersion);
  out.put_le<std::uint32_t>(static_cast<std::uint32_t>(p.size()));
  out.put_le<std::uint32_t>(static_cast<std::uint32_t>(p.dim()));
  for (double v : p.flat()) out.put_f64(v);
  return std::move(out.bytes);
}

inline void write_points_csv(std::ostream& out, const PointSet& p) {
  char buf[32];
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t c = 0; c < p.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p[i][c]);
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

inline PointSet read_points(const std::filesystem::path& path,
                            PointsFormat format = PointsFormat::kAuto) {
  const std::vector<std::uint8_t> bytes = detail::read_all(path);
  if (format == PointsFormat::kAuto) {
    const bool magic = bytes.size() >= 4 &&
                       std::equal(kPointsMagic.begin(), kPointsMagic.end(), bytes.begin(),
                                  [](char a, std::uint8_t b) {
                                    return static_cast<std::uint8_t>(a) == b;
                                  });
    format = magic ? PointsFormat::kBinary : PointsFormat::kCsv;
  }
  if (format == PointsFormat::kBinary) return parse_points_binary(bytes);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  return parse_points_csv(in);
}

inline void write_points(const std::filesystem::path& path, const PointSet& p,
                         PointsFormat format) {
  if (format == PointsFormat::kBinary) {
    detail::write_all(path, serialize_points_binary(p));
    return;
  }
  std::ostringstream out;
  write_points_csv(out, p);
  const std::string s = out.str();
  detail::write_all(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace epsketch
