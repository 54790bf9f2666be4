#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "epsketch/bitstream.hpp"
#include "epsketch/core.hpp"
#include "epsketch/grid_codec.hpp"
#include "epsketch/jl_project.hpp"
#include "epsketch/rng.hpp"

namespace epsketch {

struct SketchConfig {
  /// Constant C in m = C ln n / eps^2.
  double rounding_constant = kDefaultRoundingConstant;
  /// Worker threads for encode_set; output does not depend on it.
  unsigned threads = 1;
};

/// How a point set is turned into grid points for given (n, k, eps).
///
/// eps is split in thirds: one third for the projection, one third for the
/// shrink, one third for rounding. Stochastic rounding uses spacing
/// 1/sqrt(m_eff) with m_eff = C ln n / (eps/3)^2. The projection runs only
/// when m_eff < k. SMALL rounds to the nearest point of N(k, eps/3).
struct SketchPlan {
  Regime regime = Regime::kLarge;
  std::size_t working_dim = 0;
  double delta = 0.0;
  bool stochastic = true;
  bool projected = false;
  std::uint64_t m_eff = 0;

  GridSpec grid() const { return GridSpec(working_dim, delta); }
};

inline double shrink_factor(double eps) { return 1.0 - eps / 3.0; }

inline SketchPlan plan_sketch(const RegimeParams& params, const SketchConfig& cfg = {}) {
  SketchPlan plan;
  plan.regime = params.regime;
  const double eps_part = params.eps / 3.0;
  if (params.regime == Regime::kSmall) {
    plan.working_dim = params.k;
    plan.delta = eps_part;
    plan.stochastic = false;
    return plan;
  }
  plan.m_eff = static_cast<std::uint64_t>(std::ceil(
      cfg.rounding_constant * std::log(static_cast<double>(params.n)) /
      (eps_part * eps_part)));
  if (params.regime == Regime::kLarge && plan.m_eff < params.k) {
    plan.projected = true;
    plan.working_dim = plan.m_eff;
    plan.delta = 1.0;
  } else {
    plan.working_dim = params.k;
    plan.delta = std::min(
        0.5, std::sqrt(static_cast<double>(params.k) / static_cast<double>(plan.m_eff)));
  }
  return plan;
}

/// Guaranteed per-point ceiling: fixed-width norm field plus the worst-case
/// body length of the plan's grid.
inline std::uint64_t sketch_bits_budget(const RegimeParams& params,
                                        const SketchConfig& cfg = {}) {
  return norm_level_bits(params.eps) + plan_sketch(params, cfg).grid().body_bit_ceiling();
}

struct QueryResult {
  double inner = 0.0;
  double dist_sq = 0.0;

  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

struct PointSketch {
  QuantizedNorm norm;
  GridPoint body;
};

inline constexpr std::array<char, 4> kSketchMagic{'E', 'P', 'S', 'K'};
inline constexpr std::uint8_t kSketchVersion = 0x01;

/// Sketches of a whole point set plus the header needed to decode them.
///
/// Binary layout (little-endian): "EPSK", u8 version, u32 n, u32 k_original,
/// u32 working_dim, f64 eps, u8 regime, f64 delta, u64 seed,
/// u64 payload_bit_length, n x u64 bit offsets, payload bytes with the final
/// byte zero-padded.
struct SketchFile {
  std::uint32_t n = 0;
  std::uint32_t k_original = 0;
  std::uint32_t working_dim = 0;
  double eps = 0.0;
  Regime regime = Regime::kLarge;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t payload_bit_length = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint8_t> payload;

  GridSpec grid() const { return GridSpec(working_dim, delta); }
  bool projected() const noexcept { return working_dim < k_original; }

  std::uint64_t point_bits(std::size_t i) const {
    check_index(i);
    const std::uint64_t end = i + 1 < offsets.size() ? offsets[i + 1] : payload_bit_length;
    return end - offsets[i];
  }

  double bits_per_point() const {
    return static_cast<double>(payload_bit_length) / static_cast<double>(n);
  }

  void check_index(std::size_t i) const {
    if (i >= offsets.size())
      throw IndexError("point index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(offsets.size()) + ")");
  }

  std::vector<std::uint8_t> serialize() const;
  static SketchFile parse(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static SketchFile load(const std::filesystem::path& path);

  friend bool operator==(const SketchFile&, const SketchFile&) = default;
};

namespace detail {

class ByteSink {
 public:
  template <typename T>
  void put_le(T value) {
    auto u = static_cast<std::uint64_t>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<std::uint8_t>(u & 0xFF));
      u >>= 8;
    }
  }
  void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> bytes;
};

class ByteSource {
 public:
  explicit ByteSource(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  std::span<const std::uint8_t> take(std::size_t count) {
    need(count);
    auto s = bytes_.subspan(pos_, count);
    pos_ += count;
    return s;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) throw DecodeError("sketch file truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace detail

inline std::vector<std::uint8_t> SketchFile::serialize() const {
  detail::ByteSink out;
  for (char c : kSketchMagic) out.bytes.push_back(static_cast<std::uint8_t>(c));
  out.put_le<std::uint8_t>(kSketchVersion);
  out.put_le<std::uint32_t>(n);
  out.put_le<std::uint32_t>(k_original);
  out.put_le<std::uint32_t>(working_dim);
  out.put_f64(eps);
  out.put_le<std::uint8_t>(static_cast<std::uint8_t>(regime));
  out.put_f64(delta);
  out.put_le<std::uint64_t>(seed);
  out.put_le<std::uint64_t>(payload_bit_length);
  for (auto o : offsets) out.put_le<std::uint64_t>(o);
  out.bytes.insert(out.bytes.end(), payload.begin(), payload.end());
  return std::move(out.bytes);
}

inline SketchFile SketchFile::parse(std::span<const std::uint8_t> bytes) {
  detail::ByteSource in(bytes);
  const auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), kSketchMagic.begin(), kSketchMagic.end(),
                  [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); }))
    throw DecodeError("not a sketch file (bad magic)");
  if (in.get_le<std::uint8_t>() != kSketchVersion)
    throw DecodeError("unsupported sketch file version");

  SketchFile f;
  f.n = in.get_le<std::uint32_t>();
  f.k_original = in.get_le<std::uint32_t>();
  f.working_dim = in.get_le<std::uint32_t>();
  f.eps = in.get_f64();
  const auto regime = in.get_le<std::uint8_t>();
  if (regime > 2) throw DecodeError("bad regime tag");
  f.regime = static_cast<Regime>(regime);
  f.delta = in.get_f64();
  f.seed = in.get_le<std::uint64_t>();
  f.payload_bit_length = in.get_le<std::uint64_t>();

  if (f.n == 0 || f.k_original == 0 || f.working_dim == 0)
    throw DecodeError("header has zero count or dimension");
  if (!(f.eps > 0.0 && f.eps <= 0.5)) throw DecodeError("header eps out of range");
  if (!(f.delta > 0.0 && f.delta <= 1.0)) throw DecodeError("header delta out of range");

  if (in.remaining() / 8 < f.n) throw DecodeError("sketch file truncated");
  f.offsets.resize(f.n);
  for (auto& o : f.offsets) o = in.get_le<std::uint64_t>();
  for (std::size_t i = 1; i < f.offsets.size(); ++i)
    if (f.offsets[i] <= f.offsets[i - 1])
      throw DecodeError("offsets not strictly increasing");
  if (f.offsets.front() != 0 || f.offsets.back() >= f.payload_bit_length)
    throw DecodeError("offsets inconsistent with payload length");

  const std::uint64_t payload_bytes = (f.payload_bit_length + 7) / 8;
  if (in.remaining() != payload_bytes) throw DecodeError("payload length mismatch");
  const auto body = in.take(payload_bytes);
  f.payload.assign(body.begin(), body.end());
  if (const unsigned pad = static_cast<unsigned>(payload_bytes * 8 - f.payload_bit_length);
      pad != 0 && (f.payload.back() & ((1U << pad) - 1U)) != 0)
    throw DecodeError("nonzero padding bits");
  return f;
}

inline void SketchFile::save(const std::filesystem::path& path) const {
  detail::write_all(path, serialize());
}

inline SketchFile SketchFile::load(const std::filesystem::path& path) {
  return parse(detail::read_all(path));
}

inline PointSketch decode_point(const SketchFile& f, std::size_t i) {
  f.check_index(i);
  const std::uint64_t begin = f.offsets[i];
  BitReader in(f.payload, begin, begin + f.point_bits(i));
  PointSketch s;
  s.norm = {in.get_bits(norm_level_bits(f.eps)), norm_step(f.eps)};
  s.body = read_gridpoint(in, f.grid());
  if (in.remaining() != 0) throw DecodeError("sketch " + std::to_string(i) + " has trailing bits");
  return s;
}

namespace detail {

inline double grid_inner(const SketchFile& f, const GridPoint& a, const GridPoint& b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.dim(); ++c)
    acc += static_cast<double>(a.index(c)) * static_cast<double>(b.index(c));
  const double s = f.grid().spacing();
  double inner = acc * s * s;
  if (f.projected()) {
    const double shrink = shrink_factor(f.eps);
    inner /= shrink * shrink;
  }
  return inner;
}

}  // namespace detail

/// Approximate inner product and squared distance of points i and j.
/// Norms come from the stored side channel, never from the rounded body.
inline QueryResult decode_pair(const SketchFile& f, std::size_t i, std::size_t j) {
  f.check_index(i);
  f.check_index(j);
  if (i == j) throw InvalidArgument("diagonal query not supported");
  const PointSketch a = decode_point(f, i);
  const PointSketch b = decode_point(f, j);
  QueryResult r;
  r.inner = detail::grid_inner(f, a.body, b.body);
  r.dist_sq = a.norm.value() + b.norm.value() - 2.0 * r.inner;
  return r;
}

/// All pairwise results, decoding each sketch once.
inline std::vector<QueryResult> decode_all_pairs(const SketchFile& f) {
  std::vector<PointSketch> pts;
  pts.reserve(f.n);
  for (std::size_t i = 0; i < f.n; ++i) pts.push_back(decode_point(f, i));
  std::vector<QueryResult> out;
  out.reserve(static_cast<std::size_t>(f.n) * (f.n - 1) / 2);
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = i + 1; j < f.n; ++j) {
      QueryResult r;
      r.inner = detail::grid_inner(f, pts[i].body, pts[j].body);
      r.dist_sq = pts[i].norm.value() + pts[j].norm.value() - 2.0 * r.inner;
      out.push_back(r);
    }
  }
  return out;
}

inline SketchFile encode_set(const PointSet& x, double eps, std::uint64_t seed,
                             const SketchConfig& cfg = {}) {
  x.require_unit_ball("encode_set");
  const RegimeParams params =
      classify_regime(x.size(), x.dim(), eps, cfg.rounding_constant);
  const SketchPlan plan = plan_sketch(params, cfg);
  const GridSpec grid = plan.grid();

  PointSet working = x;
  if (plan.projected) {
    const ProjectionSpec spec{x.dim(), plan.working_dim,
                              detail::splitmix64(seed ^ stream_tag::kProjection)};
    working = shrink(project(x, spec), params.eps / 3.0);
    // A projection that stretched a norm past 1 + eps/3 is clipped back.
    for (std::size_t i = 0; i < working.size(); ++i) {
      auto row = working.row(i);
      const double norm = std::sqrt(squared_norm(row));
      if (norm > 1.0)
        for (auto& v : row) v /= norm;
    }
  }

  const std::size_t n = x.size();
  const unsigned norm_bits = norm_level_bits(eps);
  std::vector<EncodedPoint> chunks(n);
  auto encode_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(seed, stream_tag::kRounding | i);
      const GridPoint g = plan.stochastic ? stochastic_round(working[i], grid, rng)
                                          : nearest_round(working[i], grid);
      BitWriter w;
      w.put_bits(quantize_norm(x[i], eps).level, norm_bits);
      write_gridpoint(w, g, grid);
      chunks[i].bit_length = w.bit_length();
      chunks[i].payload = std::move(w).release();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(cfg.threads, 1, n);
  if (workers == 1) {
    encode_range(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t per = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(encode_range, w * per, std::min(n, (w + 1) * per));
  }

  SketchFile f;
  f.n = static_cast<std::uint32_t>(n);
  f.k_original = static_cast<std::uint32_t>(x.dim());
  f.working_dim = static_cast<std::uint32_t>(plan.working_dim);
  f.eps = eps;
  f.regime = plan.regime;
  f.delta = plan.delta;
  f.seed = seed;
  BitWriter all;
  f.offsets.reserve(n);
  for (const auto& c : chunks) {
    f.offsets.push_back(all.bit_length());
    all.append(c.payload, c.bit_length);
  }
  f.payload_bit_length = all.bit_length();
  f.payload = std::move(all).release();
  return f;
}

}  // namespace epsketch
