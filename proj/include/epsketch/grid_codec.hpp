#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "epsketch/bitstream.hpp"
#include "epsketch/core.hpp"
#include "epsketch/rng.hpp"

namespace epsketch {

/// The cubic net N(k, delta): coordinates are integer multiples of
/// delta / sqrt(k).
///
/// Magnitudes are Rice coded with a parameter fixed by (k, delta). Rounding a
/// point of norm <= 1 onto this grid never yields more than
/// k * (1/delta + 1) total magnitude, and the parameter is the minimizer of
/// the resulting worst-case body length k(2 + b) + floor(mass / 2^b).
class GridSpec {
 public:
  GridSpec(std::size_t dim, double delta) : dim_(dim), delta_(delta) {
    if (dim == 0) throw InvalidArgument("GridSpec: dimension must be >= 1");
    if (!(delta > 0.0 && delta <= 1.0))
      throw InvalidArgument("GridSpec: delta must lie in (0, 1]");
    spacing_ = delta / std::sqrt(static_cast<double>(dim));
    const double k = static_cast<double>(dim);
    mass_capacity_ = static_cast<std::uint64_t>(
                         std::floor(k * (1.0 + 2.0 * kUnitBallTolerance) / delta)) +
                     dim;
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (unsigned b = 0; b < 63; ++b) {
      const std::uint64_t bits = dim * (2 + b) + (mass_capacity_ >> b);
      if (bits < best) {
        best = bits;
        rice_ = b;
      }
    }
    body_ceiling_ = best;
  }

  std::size_t dim() const noexcept { return dim_; }
  double delta() const noexcept { return delta_; }
  double spacing() const noexcept { return spacing_; }
  unsigned rice_parameter() const noexcept { return rice_; }
  /// Upper bound on the sum of magnitudes of any valid grid point.
  std::uint64_t mass_capacity() const noexcept { return mass_capacity_; }
  /// Worst-case encoded length of a valid grid point, in bits.
  std::uint64_t body_bit_ceiling() const noexcept { return body_ceiling_; }

 private:
  std::size_t dim_;
  double delta_;
  double spacing_;
  std::uint64_t mass_capacity_;
  unsigned rice_ = 0;
  std::uint64_t body_ceiling_ = 0;
};

/// Sign/magnitude form of a net point. A zero magnitude carries sign 0.
struct GridPoint {
  std::vector<std::uint8_t> negative;
  std::vector<std::uint64_t> magnitude;

  std::size_t dim() const noexcept { return magnitude.size(); }

  std::int64_t index(std::size_t c) const {
    const auto m = static_cast<std::int64_t>(magnitude[c]);
    return negative[c] ? -m : m;
  }

  std::uint64_t mass() const {
    std::uint64_t s = 0;
    for (auto m : magnitude) s += m;
    return s;
  }

  std::vector<double> coordinates(const GridSpec& grid) const {
    std::vector<double> out(dim());
    for (std::size_t c = 0; c < dim(); ++c)
      out[c] = static_cast<double>(index(c)) * grid.spacing();
    return out;
  }

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

namespace detail {

inline GridPoint grid_point_from_indices(std::span<const std::int64_t> idx) {
  GridPoint g;
  g.negative.resize(idx.size());
  g.magnitude.resize(idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) {
    g.negative[c] = idx[c] < 0 ? 1 : 0;
    g.magnitude[c] = static_cast<std::uint64_t>(idx[c] < 0 ? -idx[c] : idx[c]);
  }
  return g;
}

inline void check_roundable(std::span<const double> x, const GridSpec& grid) {
  if (x.size() != grid.dim())
    throw InvalidArgument("rounding: vector dimension " + std::to_string(x.size()) +
                          " does not match grid dimension " +
                          std::to_string(grid.dim()));
  if (squared_norm(x) > (1.0 + kUnitBallTolerance) * (1.0 + kUnitBallTolerance))
    throw InvalidArgument("rounding: vector outside the unit ball");
}

}  // namespace detail

/// Unbiased rounding: each coordinate goes to the lower or upper adjacent
/// multiple with probabilities making its expectation exact. Consumes one
/// uniform per coordinate.
inline GridPoint stochastic_round(std::span<const double> x, const GridSpec& grid,
                                  RngStream& rng) {
  detail::check_roundable(x, grid);
  std::vector<std::int64_t> idx(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double v = x[c] / grid.spacing();
    const double lo = std::floor(v);
    const double p = v - lo;
    idx[c] = static_cast<std::int64_t>(lo) + (rng.uniform() < p ? 1 : 0);
  }
  return detail::grid_point_from_indices(idx);
}

/// Nearest multiple, ties to the even multiple.
inline GridPoint nearest_round(std::span<const double> x, const GridSpec& grid) {
  detail::check_roundable(x, grid);
  std::vector<std::int64_t> idx(x.size());
  for (std::size_t c = 0; c < x.size(); ++c)
    idx[c] = static_cast<std::int64_t>(std::nearbyint(x[c] / grid.spacing()));
  return detail::grid_point_from_indices(idx);
}

struct EncodedPoint {
  std::vector<std::uint8_t> payload;
  std::size_t bit_length = 0;

  friend bool operator==(const EncodedPoint&, const EncodedPoint&) = default;
};

/// Layout: k sign bits in coordinate order, then per coordinate the Rice
/// code of its magnitude (quotient in unary as ones closed by a zero, then
/// the low `rice_parameter` bits high-first).
inline void write_gridpoint(BitWriter& out, const GridPoint& g, const GridSpec& grid) {
  if (g.dim() != grid.dim() || g.negative.size() != g.magnitude.size())
    throw InvalidArgument("encode: grid point dimension mismatch");
  if (g.mass() > grid.mass_capacity())
    throw InvalidArgument("encode: grid point magnitude exceeds net capacity");
  for (auto s : g.negative) out.put_bit(s != 0);
  const unsigned b = grid.rice_parameter();
  for (auto m : g.magnitude) {
    out.put_unary(m >> b);
    out.put_bits(m, b);
  }
}

inline GridPoint read_gridpoint(BitReader& in, const GridSpec& grid) {
  GridPoint g;
  g.negative.resize(grid.dim());
  g.magnitude.resize(grid.dim());
  for (auto& s : g.negative) s = in.get_bit() ? 1 : 0;
  const unsigned b = grid.rice_parameter();
  std::uint64_t mass = 0;
  for (std::size_t c = 0; c < grid.dim(); ++c) {
    const std::uint64_t q = in.get_unary(grid.mass_capacity() >> b);
    const std::uint64_t m = (q << b) | in.get_bits(b);
    mass += m;
    if (mass > grid.mass_capacity()) throw DecodeError("magnitude overflow");
    g.magnitude[c] = m;
  }
  return g;
}

inline EncodedPoint encode_gridpoint(const GridPoint& g, const GridSpec& grid) {
  BitWriter out;
  write_gridpoint(out, g, grid);
  EncodedPoint e;
  e.bit_length = out.bit_length();
  e.payload = std::move(out).release();
  return e;
}

inline GridPoint decode_gridpoint(const EncodedPoint& e, const GridSpec& grid) {
  BitReader in(e.payload, e.bit_length);
  GridPoint g = read_gridpoint(in, grid);
  if (in.remaining() != 0) throw DecodeError("trailing bits after grid point");
  return g;
}

/// Squared norm quantized with step eps/4.
struct QuantizedNorm {
  std::uint64_t level = 0;
  double step = 0.0;

  double value() const noexcept { return static_cast<double>(level) * step; }

  friend bool operator==(const QuantizedNorm&, const QuantizedNorm&) = default;
};

inline double norm_step(double eps) { return eps / 4.0; }

inline std::uint64_t max_norm_level(double eps) {
  const double limit = (1.0 + kUnitBallTolerance) * (1.0 + kUnitBallTolerance);
  return static_cast<std::uint64_t>(std::llround(limit / norm_step(eps)));
}

/// Fixed width of the norm field.
inline unsigned norm_level_bits(double eps) {
  return std::max(1U, static_cast<unsigned>(std::bit_width(max_norm_level(eps))));
}

inline QuantizedNorm quantize_norm(std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("quantize_norm: eps must be positive");
  const double sq = squared_norm(x);
  if (sq > (1.0 + kUnitBallTolerance) * (1.0 + kUnitBallTolerance))
    throw InvalidArgument("quantize_norm: squared norm out of range");
  const double step = norm_step(eps);
  return {static_cast<std::uint64_t>(std::llround(sq / step)), step};
}

inline double dequantize_norm(const QuantizedNorm& q) { return q.value(); }

}  // namespace epsketch
