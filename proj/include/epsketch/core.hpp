#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "epsketch/error.hpp"

namespace epsketch {

inline constexpr double kUnitBallTolerance = 1e-9;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

/// Ordered list of points sharing one dimension, stored row-major.
class PointSet {
 public:
  explicit PointSet(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvalidArgument("PointSet: dimension must be >= 1");
  }

  PointSet(std::size_t dim, std::vector<double> flat)
      : dim_(dim), data_(std::move(flat)) {
    if (dim == 0) throw InvalidArgument("PointSet: dimension must be >= 1");
    if (data_.size() % dim != 0)
      throw InvalidArgument("PointSet: flat data not a multiple of dim");
    check_finite(data_);
  }

  PointSet(std::initializer_list<std::initializer_list<double>> rows)
      : PointSet(rows.size() == 0 ? 1 : rows.begin()->size()) {
    for (const auto& r : rows) push_back(std::vector<double>(r));
  }

  std::size_t size() const noexcept { return data_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  std::span<const double> flat() const noexcept { return data_; }

  void push_back(std::span<const double> p) {
    if (p.size() != dim_)
      throw InvalidArgument("PointSet: point has dimension " +
                            std::to_string(p.size()) + ", expected " +
                            std::to_string(dim_));
    check_finite(p);
    data_.insert(data_.end(), p.begin(), p.end());
  }

  void reserve(std::size_t n) { data_.reserve(n * dim_); }

  double max_squared_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, squared_norm((*this)[i]));
    return m;
  }

  bool in_unit_ball(double tol = kUnitBallTolerance) const {
    const double limit = (1.0 + tol) * (1.0 + tol);
    for (std::size_t i = 0; i < size(); ++i)
      if (squared_norm((*this)[i]) > limit) return false;
    return true;
  }

  void require_unit_ball(std::string_view who) const {
    if (!in_unit_ball())
      throw InvalidArgument(std::string(who) +
                            ": points must lie in the unit ball (max norm " +
                            std::to_string(std::sqrt(max_squared_norm())) + ")");
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(size()),
            static_cast<Eigen::Index>(dim_)};
  }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  static void check_finite(std::span<const double> v) {
    for (double x : v)
      if (!std::isfinite(x)) throw InvalidArgument("PointSet: non-finite coordinate");
  }

  std::size_t dim_;
  std::vector<double> data_;
};

enum class Regime : std::uint8_t { kLarge = 0, kMid = 1, kSmall = 2 };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::kLarge: return "LARGE";
    case Regime::kMid: return "MID";
    case Regime::kSmall: return "SMALL";
  }
  return "?";
}

/// ln(2 + eps^2 n) / eps^2.
inline double t_threshold(double n, double eps) {
  if (!(n >= 1.0) || !(eps > 0.0))
    throw InvalidArgument("t_threshold: need n >= 1 and eps > 0");
  return std::log(2.0 + eps * eps * n) / (eps * eps);
}

struct RegimeParams {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  double eps = 0.0;
  Regime regime = Regime::kLarge;
  double t_threshold = 0.0;
  std::uint64_t m = 0;         // LARGE only
  double delta = 0.0;          // MID only, after clamping
  double delta_raw = 0.0;      // MID only, before clamping
  bool delta_clamped = false;
  bool below_guarantee = false;  // eps < n^-0.49
};

/// The constant 40 in m = 40 ln n / eps^2 and in the MID delta formula.
inline constexpr double kDefaultRoundingConstant = 40.0;

/// Regime boundaries go to the larger regime: k == ln n is MID,
/// k == ln n / eps^2 is LARGE.
inline RegimeParams classify_regime(std::uint64_t n, std::uint64_t k, double eps,
                                    double constant = kDefaultRoundingConstant) {
  if (n < 2) throw InvalidArgument("need >= 2 points");
  if (k < 1) throw InvalidArgument("dimension must be >= 1");
  if (k > n)
    throw InvalidArgument("dimension k=" + std::to_string(k) +
                          " exceeds point count n=" + std::to_string(n));
  if (!(eps > 0.0 && eps <= 0.5)) throw InvalidArgument("eps must lie in (0, 0.5]");

  RegimeParams p;
  p.n = n;
  p.k = k;
  p.eps = eps;
  p.t_threshold = epsketch::t_threshold(static_cast<double>(n), eps);
  p.below_guarantee = eps < std::pow(static_cast<double>(n), -0.49);

  const double log_n = std::log(static_cast<double>(n));
  const double kd = static_cast<double>(k);
  if (kd >= log_n / (eps * eps)) {
    p.regime = Regime::kLarge;
    p.m = static_cast<std::uint64_t>(std::ceil(constant * log_n / (eps * eps)));
  } else if (kd >= log_n) {
    p.regime = Regime::kMid;
    p.delta_raw = std::sqrt(kd * eps * eps / (constant * log_n));
    p.delta = std::clamp(p.delta_raw, eps, 0.5);
    p.delta_clamped = p.delta != p.delta_raw;
  } else {
    p.regime = Regime::kSmall;
  }
  return p;
}

struct GramDistances {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd dist_sq;
};

inline GramDistances gram_and_distances(const PointSet& x) {
  if (x.empty()) throw InvalidArgument("gram_and_distances: empty point set");
  const auto rows = x.matrix();
  GramDistances out;
  out.gram = rows * rows.transpose();
  const Eigen::VectorXd norms = out.gram.diagonal();
  const auto n = out.gram.rows();
  out.dist_sq.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.dist_sq(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = norms(i) + norms(j) - 2.0 * out.gram(i, j);
      out.dist_sq(i, j) = d;
      out.dist_sq(j, i) = d;
    }
  }
  return out;
}

}  // namespace epsketch
