#pragma once

#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "epsketch/core.hpp"
#include "epsketch/rng.hpp"
#include "epsketch/sketch.hpp"

namespace epsketch {

struct BenchSweep {
  std::vector<std::uint64_t> n;
  std::vector<std::uint64_t> k;
  std::vector<double> eps;
  std::vector<std::uint64_t> seeds;
};

struct BenchRow {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  double eps = 0.0;
  std::string regime;
  double bits_per_point = 0.0;
  double max_abs_error = 0.0;
  std::uint64_t violating_pairs = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::string status = "ok";

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

inline constexpr std::string_view kBenchHeader =
    "n,k,eps,regime,bits_per_point,max_abs_error,violating_pairs,seed,wall_ms,status";

/// n points uniform in B^k.
inline PointSet random_ball_points(std::size_t n, std::size_t k, std::uint64_t seed) {
  PointSet p(k);
  p.reserve(n);
  std::vector<double> v(k);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, stream_tag::kPoints | i);
    rng.uniform_ball(v);
    p.push_back(v);
  }
  return p;
}

/// Encodes a random set, decodes every pair and compares with exact
/// squared distances. Failures land in `status`.
inline BenchRow bench_cell(std::uint64_t n, std::uint64_t k, double eps, std::uint64_t seed,
                           bool timing = true, const SketchConfig& cfg = {}) {
  BenchRow row;
  row.n = n;
  row.k = k;
  row.eps = eps;
  row.seed = seed;
  row.regime = "-";
  try {
    const RegimeParams params = classify_regime(n, k, eps, cfg.rounding_constant);
    row.regime = std::string(to_string(params.regime));
    const PointSet x = random_ball_points(n, k, seed);
    const auto start = std::chrono::steady_clock::now();
    const SketchFile f = encode_set(x, eps, seed, cfg);
    const std::vector<QueryResult> decoded = decode_all_pairs(f);
    const auto stop = std::chrono::steady_clock::now();
    const GramDistances truth = gram_and_distances(x);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++idx) {
        const double err = std::abs(decoded[idx].dist_sq -
                                    truth.dist_sq(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j)));
        row.max_abs_error = std::max(row.max_abs_error, err);
        if (err > eps) ++row.violating_pairs;
      }
    }
    row.bits_per_point = f.bits_per_point();
    if (timing) row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  } catch (const std::exception& e) {
    row.status = e.what();
    for (auto& c : row.status)
      if (c == ',' || c == '\n') c = ';';
  }
  return row;
}

/// Cells in n, k, eps, seed nesting order.
inline std::vector<BenchRow> run_bench(const BenchSweep& sweep, bool timing = true,
                                       const SketchConfig& cfg = {}) {
  std::vector<BenchRow> rows;
  for (auto n : sweep.n)
    for (auto k : sweep.k)
      for (auto eps : sweep.eps)
        for (auto seed : sweep.seeds) rows.push_back(bench_cell(n, k, eps, seed, timing, cfg));
  return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << kBenchHeader << '\n';
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g,%s,%.17g,%.17g,%llu,%llu,%.17g,",
                  static_cast<unsigned long long>(r.n), static_cast<unsigned long long>(r.k),
                  r.eps, r.regime.c_str(), r.bits_per_point, r.max_abs_error,
                  static_cast<unsigned long long>(r.violating_pairs),
                  static_cast<unsigned long long>(r.seed), r.wall_ms);
    out << buf << r.status << '\n';
  }
}

inline std::vector<BenchRow> parse_bench_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kBenchHeader)
    throw DecodeError("bench CSV: unexpected header");
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string tok; f.size() < 9 && std::getline(ls, tok, ',');) f.push_back(tok);
    std::string status;
    std::getline(ls, status);
    if (f.size() != 9) throw DecodeError("bench CSV: short row");
    BenchRow r;
    r.n = std::stoull(f[0]);
    r.k = std::stoull(f[1]);
    r.eps = std::stod(f[2]);
    r.regime = f[3];
    r.bits_per_point = std::stod(f[4]);
    r.max_abs_error = std::stod(f[5]);
    r.violating_pairs = std::stoull(f[6]);
    r.seed = std::stoull(f[7]);
    r.wall_ms = std::stod(f[8]);
    r.status = status;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace epsketch
