#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "epsketch/core.hpp"
#include "epsketch/rng.hpp"

namespace epsketch {

/// Relation k = delta^2 ln n / (200 eps^2) between the lower-bound parameters,
/// solved for each unknown.
namespace lower_bound_params {

inline double k_for(double n, double delta, double eps) {
  return delta * delta * std::log(n) / (200.0 * eps * eps);
}

inline double n_for(double k, double delta, double eps) {
  return std::exp(200.0 * eps * eps * k / (delta * delta));
}

inline double eps_for(double k, double delta, double n) {
  return delta * std::sqrt(std::log(n) / (200.0 * k));
}

}  // namespace lower_bound_params

struct SeparatedNet {
  PointSet points{1};
  double delta = 0.0;
};

inline constexpr std::size_t kNetPatiencePerPoint = 200;

/// Greedy rejection: uniform draws from B^k, kept when at distance >= delta
/// from every kept point. Not maximal; it stops at target_size.
inline SeparatedNet build_separated_net(std::size_t k, double delta, std::size_t target_size,
                                        RngStream& rng) {
  if (k == 0) throw InvalidArgument("build_separated_net: k must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidArgument("build_separated_net: delta must lie in (0, 1)");
  SeparatedNet net{PointSet(k), delta};
  net.points.reserve(target_size);
  const double delta_sq = delta * delta;
  const std::size_t patience = kNetPatiencePerPoint * target_size;
  std::vector<double> candidate(k);
  for (std::size_t draw = 0; net.points.size() < target_size; ++draw) {
    if (draw == patience) throw PatienceExhausted(net.points.size(), target_size);
    rng.uniform_ball(candidate);
    bool ok = true;
    for (std::size_t i = 0; i < net.points.size() && ok; ++i) {
      const auto p = net.points[i];
      double d = 0.0;
      for (std::size_t c = 0; c < k; ++c) d += (p[c] - candidate[c]) * (p[c] - candidate[c]);
      ok = d >= delta_sq;
    }
    if (ok) net.points.push_back(candidate);
  }
  return net;
}

inline PointSet draw_R(std::size_t k, std::size_t count, RngStream& rng) {
  if (k == 0) throw InvalidArgument("draw_R: k must be >= 1");
  PointSet r(k);
  r.reserve(count);
  std::vector<double> p(k);
  for (std::size_t i = 0; i < count; ++i) {
    rng.uniform_ball(p);
    r.push_back(p);
  }
  return r;
}

struct WorstPair {
  std::size_t first = 0;
  std::size_t second = 0;
  /// max over r of |<b - b', r>| for this pair.
  double separation = 0.0;
};

struct WitnessReport {
  SeparatedNet net;
  PointSet r{1};
  double eps = 0.0;
  bool distinguished = false;
  std::optional<WorstPair> worst_pair;
  /// Pigeonhole bound log2 |N|.
  double implied_bits = 0.0;
};

/// Exhaustive over all pairs of the net and all points of R.
inline WitnessReport verify_distinguishing(SeparatedNet net, PointSet r, double eps) {
  if (net.points.dim() != r.dim())
    throw InvalidArgument("verify_distinguishing: dimension mismatch");
  WitnessReport rep;
  const std::size_t size = net.points.size();
  rep.eps = eps;
  rep.implied_bits = size == 0 ? 0.0 : std::log2(static_cast<double>(size));
  rep.distinguished = true;
  if (size >= 2 && !r.empty()) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor proj = net.points.matrix() * r.matrix().transpose();
    WorstPair worst{0, 0, std::numeric_limits<double>::infinity()};
    for (Eigen::Index p = 0; p < proj.rows(); ++p) {
      for (Eigen::Index q = p + 1; q < proj.rows(); ++q) {
        const double sep = (proj.row(p) - proj.row(q)).cwiseAbs().maxCoeff();
        if (sep < worst.separation)
          worst = {static_cast<std::size_t>(p), static_cast<std::size_t>(q), sep};
      }
    }
    rep.worst_pair = worst;
    rep.distinguished = worst.separation > eps;
  } else if (size >= 2) {
    rep.worst_pair = WorstPair{0, 1, 0.0};
    rep.distinguished = false;
  }
  rep.net = std::move(net);
  rep.r = std::move(r);
  return rep;
}

}  // namespace epsketch
