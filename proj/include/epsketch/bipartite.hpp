#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "epsketch/core.hpp"
#include "epsketch/rng.hpp"

namespace epsketch {

struct OrthogonalMap {
  Eigen::MatrixXd matrix;
  std::uint64_t seed = 0;
};

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix, with the
/// columns of Q flipped so that R has a positive diagonal.
inline OrthogonalMap sample_orthogonal(std::size_t n, RngStream& rng) {
  if (n == 0) throw InvalidArgument("sample_orthogonal: n must be >= 1");
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) g(r, c) = rng.gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  OrthogonalMap u;
  u.seed = rng.seed();
  u.matrix = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index c = 0; c < dim; ++c)
    if (r(c, c) < 0.0) u.matrix.col(c) *= -1.0;
  return u;
}

/// a_i, b_j in the unit ball of R^n and the target dimension
/// t = floor(C ln(2 + eps^2 n) / eps^2), clamped to [1, n].
struct BipartiteInstance {
  PointSet a;
  PointSet b;
  double eps = 0.0;
  std::size_t t = 0;
  double c_scale = 1.0;

  static std::size_t target_dim(std::size_t n, double eps, double c) {
    const double raw = std::floor(c * t_threshold(static_cast<double>(n), eps));
    return static_cast<std::size_t>(std::clamp(raw, 1.0, static_cast<double>(n)));
  }

  static BipartiteInstance make(PointSet a, PointSet b, double eps, double c = 4.0,
                                double c_scale = 1.0) {
    if (a.dim() != b.dim()) throw InvalidArgument("bipartite: A and B differ in dimension");
    if (a.empty() || b.empty()) throw InvalidArgument("bipartite: empty point set");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("bipartite: eps must lie in (0, 1)");
    if (!(c > 0.0) || !(c_scale > 0.0)) throw InvalidArgument("bipartite: constants must be positive");
    a.require_unit_ball("bipartite A");
    b.require_unit_ball("bipartite B");
    const std::size_t n = a.dim();
    const std::size_t t = target_dim(n, eps, c);
    return {std::move(a), std::move(b), eps, t, c_scale};
  }
};

/// y_j = sqrt(t) * (first t coordinates of U^-1 b_j).
inline PointSet build_y(const PointSet& b, const OrthogonalMap& u, std::size_t t) {
  const auto n = static_cast<std::size_t>(u.matrix.rows());
  if (b.dim() != n) throw InvalidArgument("build_y: dimension mismatch");
  if (t == 0 || t > n) throw InvalidArgument("build_y: need 1 <= t <= n");
  const Eigen::MatrixXd rotated =
      u.matrix.transpose() * b.matrix().transpose();  // n x |B|
  const double root_t = std::sqrt(static_cast<double>(t));
  PointSet y(t);
  y.reserve(b.size());
  std::vector<double> row(t);
  for (Eigen::Index j = 0; j < rotated.cols(); ++j) {
    for (std::size_t c = 0; c < t; ++c)
      row[c] = root_t * rotated(static_cast<Eigen::Index>(c), j);
    y.push_back(row);
  }
  return y;
}

struct SolverOptions {
  std::size_t max_sweeps = 10'000;
  double tolerance = 1e-9;
};

struct SlabSolution {
  Eigen::VectorXd x;  // in the sqrt(t)-scaled frame
  std::size_t sweeps = 0;
  double residual = 0.0;
};

/// Finds x in R^t with |<x, p_j>/sqrt(t) - target_j| <= half_width for every
/// column p_j of `heads`, by cyclic projection onto the slabs starting from
/// sqrt(t) * start. Works on z = x / sqrt(t), where slab j is
/// |<z, p_j> - target_j| <= half_width.
inline SlabSolution solve_x(const Eigen::VectorXd& start, const Eigen::MatrixXd& heads,
                            const Eigen::VectorXd& targets, double half_width,
                            const SolverOptions& opts = {}) {
  if (start.size() != heads.rows() || targets.size() != heads.cols())
    throw InvalidArgument("solve_x: shape mismatch");
  if (!(half_width > 0.0)) throw InvalidArgument("solve_x: slab width must be positive");
  const Eigen::VectorXd col_norm_sq = heads.colwise().squaredNorm().transpose();
  // Projecting onto a slightly narrower slab lets the iteration land strictly
  // inside instead of creeping towards the boundary.
  const double inner_width = half_width * (1.0 - 1e-6);

  Eigen::VectorXd z = start;
  SlabSolution out;
  for (;;) {
    const Eigen::VectorXd resid = heads.transpose() * z - targets;
    out.residual = std::max(0.0, resid.cwiseAbs().maxCoeff() - half_width);
    if (out.residual <= opts.tolerance) break;
    if (out.sweeps == opts.max_sweeps) throw NonConvergence(out.residual, out.sweeps);
    for (Eigen::Index j = 0; j < heads.cols(); ++j) {
      if (col_norm_sq(j) == 0.0) continue;
      const double r = heads.col(j).dot(z) - targets(j);
      double excess = 0.0;
      if (r > inner_width) excess = r - inner_width;
      else if (r < -inner_width) excess = r + inner_width;
      if (excess != 0.0) z -= (excess / col_norm_sq(j)) * heads.col(j);
    }
    ++out.sweeps;
  }
  out.x = std::sqrt(static_cast<double>(heads.rows())) * z;
  return out;
}

struct ReductionOptions {
  std::size_t max_attempts = 5;
  SolverOptions solver;
};

/// x_i and y_j are stored divided by sqrt(t), so <x_i, y_j> approximates
/// <a_i, b_j> directly.
struct ReductionResult {
  PointSet x{1};
  PointSet y{1};
  std::size_t t = 0;
  double achieved_eps = 0.0;
  std::size_t attempts = 0;
  std::vector<std::size_t> sweeps;  // per a_i
  std::vector<double> x_norms;      // |x_i|, normalized frame
  OrthogonalMap rotation;
};

namespace detail {

inline PointSet columns_as_points(const Eigen::MatrixXd& m) {
  PointSet p(static_cast<std::size_t>(m.rows()));
  p.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const Eigen::VectorXd col = m.col(c);
    p.push_back(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  }
  return p;
}

inline double max_cross_error(const PointSet& x, const PointSet& y, const PointSet& a,
                              const PointSet& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      worst = std::max(worst, std::abs(dot(x[i], y[j]) - dot(a[i], b[j])));
  return worst;
}

}  // namespace detail

/// Random rotation, slab feasibility per a_i, coordinate projection.
/// Retries with a fresh rotation when a solve stalls or the brute-force
/// error exceeds eps.
inline ReductionResult reduce(const BipartiteInstance& inst, std::uint64_t seed,
                              const ReductionOptions& opts = {}) {
  const std::size_t n = inst.a.dim();
  const std::size_t t = inst.t;
  if (t == 0 || t > n) throw InvalidArgument("reduce: need 1 <= t <= n");
  const auto ti = static_cast<Eigen::Index>(t);
  const Eigen::MatrixXd targets = inst.a.matrix() * inst.b.matrix().transpose();
  const double half_width = inst.c_scale * inst.eps;

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t attempt = 0; attempt < opts.max_attempts; ++attempt) {
    RngStream rng(seed, stream_tag::kOrthogonal | attempt);
    OrthogonalMap u = sample_orthogonal(n, rng);
    const Eigen::MatrixXd rot_a = u.matrix.transpose() * inst.a.matrix().transpose();
    const Eigen::MatrixXd heads = (u.matrix.transpose() * inst.b.matrix().transpose()).topRows(ti);

    Eigen::MatrixXd z(ti, static_cast<Eigen::Index>(inst.a.size()));
    std::vector<std::size_t> sweeps;
    bool stalled = false;
    for (Eigen::Index i = 0; i < z.cols(); ++i) {
      try {
        const SlabSolution s = solve_x(rot_a.col(i).head(ti), heads,
                                       targets.row(i).transpose(), half_width, opts.solver);
        z.col(i) = s.x / std::sqrt(static_cast<double>(t));
        sweeps.push_back(s.sweeps);
      } catch (const NonConvergence&) {
        stalled = true;
        break;
      }
    }
    if (stalled) continue;

    ReductionResult res;
    res.x = detail::columns_as_points(z);
    res.y = detail::columns_as_points(heads);
    res.t = t;
    res.attempts = attempt + 1;
    res.sweeps = std::move(sweeps);
    res.achieved_eps = detail::max_cross_error(res.x, res.y, inst.a, inst.b);
    best = std::min(best, res.achieved_eps);
    if (res.achieved_eps > inst.eps) continue;
    for (std::size_t i = 0; i < res.x.size(); ++i)
      res.x_norms.push_back(std::sqrt(squared_norm(res.x[i])));
    res.rotation = std::move(u);
    return res;
  }
  throw ExhaustedRetries(opts.max_attempts, best);
}

/// The two summands bounding |<x_i, y_j> - <a_i, b_j>|, both maximized over
/// (i, j): |<U x_i - a_i, b_j>| and |<x_i, y_j - U^-1 b_j>| with x_i, y_j
/// embedded in the first t coordinates of R^n. The second is zero by
/// construction of y_j.
struct ErrorSplit {
  double first = 0.0;
  double second = 0.0;
};

inline ErrorSplit error_split(const BipartiteInstance& inst, const ReductionResult& res) {
  const auto n = static_cast<Eigen::Index>(inst.a.dim());
  const auto t = static_cast<Eigen::Index>(res.t);
  const Eigen::MatrixXd& u = res.rotation.matrix;
  Eigen::MatrixXd xe = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(res.x.size()));
  xe.topRows(t) = res.x.matrix().transpose();
  Eigen::MatrixXd ye = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(res.y.size()));
  ye.topRows(t) = res.y.matrix().transpose();
  const Eigen::MatrixXd bt = inst.b.matrix().transpose();
  const Eigen::MatrixXd first = (u * xe - inst.a.matrix().transpose()).transpose() * bt;
  const Eigen::MatrixXd second = xe.transpose() * (ye - u.transpose() * bt);
  return {first.cwiseAbs().maxCoeff(), second.cwiseAbs().maxCoeff()};
}

}  // namespace epsketch
