#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "epsketch/core.hpp"
#include "epsketch/rng.hpp"

namespace epsketch {

enum class ProjectionKind : std::uint8_t { kDenseGaussian };

struct ProjectionSpec {
  std::size_t k_in = 0;
  std::size_t m_out = 0;
  std::uint64_t seed = 0;
  ProjectionKind kind = ProjectionKind::kDenseGaussian;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// m_out x k_in matrix with i.i.d. N(0, 1/m_out) entries. Row r comes from
/// its own stream, so rows can be generated in any order.
inline RowMatrix projection_matrix(const ProjectionSpec& spec) {
  if (spec.k_in == 0 || spec.m_out == 0)
    throw InvalidArgument("projection: dimensions must be >= 1");
  RowMatrix mat(static_cast<Eigen::Index>(spec.m_out),
                static_cast<Eigen::Index>(spec.k_in));
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.m_out));
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    RngStream rng(spec.seed, stream_tag::kProjection | static_cast<std::uint64_t>(r));
    for (Eigen::Index c = 0; c < mat.cols(); ++c) mat(r, c) = scale * rng.gaussian();
  }
  return mat;
}

inline PointSet project(const PointSet& x, const ProjectionSpec& spec) {
  if (x.dim() != spec.k_in)
    throw InvalidArgument("project: input dimension " + std::to_string(x.dim()) +
                          " does not match spec k_in " + std::to_string(spec.k_in));
  const RowMatrix mat = projection_matrix(spec);
  RowMatrix y = x.matrix() * mat.transpose();
  return PointSet(spec.m_out, std::vector<double>(y.data(), y.data() + y.size()));
}

/// Scales every point by (1 - eps).
inline PointSet shrink(const PointSet& x, double eps) {
  std::vector<double> flat(x.flat().begin(), x.flat().end());
  for (auto& v : flat) v *= 1.0 - eps;
  return PointSet(x.dim(), std::move(flat));
}

struct ProjectionAudit {
  double max_dist_sq_deviation = 0.0;
  double max_norm_sq_deviation = 0.0;

  bool within(double eps) const {
    return max_dist_sq_deviation <= eps && max_norm_sq_deviation <= eps;
  }
};

/// Exact worst-case change of squared norms and squared pairwise distances.
inline ProjectionAudit verify_projection(const PointSet& x, const PointSet& y) {
  if (x.size() != y.size()) throw InvalidArgument("verify_projection: size mismatch");
  ProjectionAudit audit;
  auto dist_sq = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return s;
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    audit.max_norm_sq_deviation = std::max(
        audit.max_norm_sq_deviation, std::abs(squared_norm(y[i]) - squared_norm(x[i])));
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      audit.max_dist_sq_deviation =
          std::max(audit.max_dist_sq_deviation,
                   std::abs(dist_sq(y[i], y[j]) - dist_sq(x[i], x[j])));
    }
  }
  return audit;
}

}  // namespace epsketch
