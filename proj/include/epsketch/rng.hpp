#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include <boost/math/distributions/normal.hpp>

namespace epsketch {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Stream tags keep the (seed, stream_id) spaces of different consumers
/// disjoint. The low 48 bits carry the per-task index.
namespace stream_tag {
inline constexpr std::uint64_t kRounding = 1ULL << 48;
inline constexpr std::uint64_t kProjection = 2ULL << 48;
inline constexpr std::uint64_t kOrthogonal = 3ULL << 48;
inline constexpr std::uint64_t kSolver = 4ULL << 48;
inline constexpr std::uint64_t kNet = 5ULL << 48;
inline constexpr std::uint64_t kDistinguish = 6ULL << 48;
inline constexpr std::uint64_t kPoints = 7ULL << 48;
inline constexpr std::uint64_t kRetry = 8ULL << 48;
}  // namespace stream_tag

/// Counter-based random stream. The i-th draw is a pure function of
/// (seed, stream_id, i), so results do not depend on which thread or in
/// which order independent streams are consumed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed),
        stream_id_(stream_id),
        key_(detail::splitmix64(seed ^ detail::splitmix64(stream_id))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  /// Child stream, independent of this one.
  RngStream fork(std::uint64_t child_id) const noexcept {
    return RngStream(key_, child_id);
  }

  std::uint64_t next_u64() noexcept {
    return detail::splitmix64(key_ + 0xD1B54A32D192ED03ULL * ++counter_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by inverse CDF.
  double gaussian() {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, uniform());
  }

  void fill_gaussian(std::span<double> out) {
    for (auto& v : out) v = gaussian();
  }

  /// Uniform point of the unit ball: Gaussian direction, radius U^(1/k).
  void uniform_ball(std::span<double> out) {
    double sq = 0.0;
    do {
      fill_gaussian(out);
      sq = 0.0;
      for (double v : out) sq += v * v;
    } while (sq == 0.0);
    const double radius =
        std::pow(uniform(), 1.0 / static_cast<double>(out.size()));
    const double scale = radius / std::sqrt(sq);
    for (auto& v : out) v *= scale;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace epsketch
