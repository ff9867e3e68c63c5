#pragma once

// Left-invariant Riemannian metric d_0 on a Carnot group, given by a
// positive-definite form on each stratum (strata mutually orthogonal).
// Distances are reported as certified intervals: the upper end is the length
// of an explicit optimised polyline, the lower end a projection bound.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coarsemodel/carnot/algebra.hpp"
#include "coarsemodel/path_optimizer.hpp"

namespace coarsemodel::carnot {

using Matrix = Eigen::MatrixXd;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool converged = true;

  double width() const { return upper - lower; }
  double mid() const { return 0.5 * (lower + upper); }
  bool overlaps(const Interval& o) const { return lower <= o.upper && o.lower <= upper; }

  static Interval exact(double v) { return {v, v, true}; }
};

class LeftInvariantMetric {
 public:
  LeftInvariantMetric(CarnotAlgebra algebra, std::vector<Matrix> blocks)
      : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
    require(static_cast<int>(blocks_.size()) == algebra_.step(), "need one metric block per stratum");
    full_ = Matrix::Zero(algebra_.dim(), algebra_.dim());
    for (int s = 1; s <= algebra_.step(); ++s) {
      const Matrix& b = blocks_[static_cast<std::size_t>(s - 1)];
      const int m = algebra_.stratum_dim(s);
      require(b.rows() == m && b.cols() == m, "metric block has the wrong size");
      require((b - b.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff()),
              "metric block must be symmetric");
      const Eigen::LLT<Matrix> llt(b);
      require(llt.info() == Eigen::Success, "metric block must be positive definite");
      chol_.push_back(llt.matrixU());
      full_.block(algebra_.stratum_offset(s), algebra_.stratum_offset(s), m, m) = b;
    }
  }

  /// Each stratum carries weight * (Euclidean form) in the graded basis.
  static LeftInvariantMetric euclidean(const CarnotAlgebra& g, const std::vector<double>& weights = {}) {
    std::vector<Matrix> blocks;
    for (int s = 1; s <= g.step(); ++s) {
      const double w = weights.empty() ? 1.0 : weights.at(static_cast<std::size_t>(s - 1));
      blocks.push_back(w * Matrix::Identity(g.stratum_dim(s), g.stratum_dim(s)));
    }
    return {g, blocks};
  }

  const CarnotAlgebra& algebra() const { return algebra_; }
  const Matrix& block(int stratum) const { return blocks_[static_cast<std::size_t>(stratum - 1)]; }
  /// Upper Cholesky factor R with R^T R = block.
  const Matrix& cholesky(int stratum) const { return chol_[static_cast<std::size_t>(stratum - 1)]; }
  const Matrix& full() const { return full_; }

  double norm(const Vector& v) const { return std::sqrt(std::max(0.0, v.dot(full_ * v))); }

  double stratum_norm(const Vector& v, int stratum) const {
    const Vector part = v.segment(algebra_.stratum_offset(stratum), algebra_.stratum_dim(stratum));
    return (cholesky(stratum) * part).norm();
  }

 private:
  CarnotAlgebra algebra_;
  std::vector<Matrix> blocks_;
  std::vector<Matrix> chol_;
  Matrix full_;
};

inline constexpr int kSimpsonPanels = 4;

/// Length of the coordinate-straight segment p -> q: Simpson quadrature of the
/// norm of the velocity pulled back to the identity.
inline double segment_length_d0(const LeftInvariantMetric& metric, const Vector& p, const Vector& q,
                                int panels = kSimpsonPanels) {
  const CarnotAlgebra& g = metric.algebra();
  const Vector delta = q - p;
  if (g.is_abelian()) return metric.norm(delta);
  return simpson([&](double t) { return metric.norm(pullback_velocity<double>(g, Vector(p + t * delta), delta)); },
                 panels);
}

using Polyline = std::vector<CarnotPoint>;

inline double riemannian_length_d0(const Polyline& path, const LeftInvariantMetric& metric,
                                   int panels = kSimpsonPanels) {
  require(path.size() >= 2, "path needs at least two nodes");
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k)
    total += segment_length_d0(metric, path[k].coords, path[k + 1].coords, panels);
  return total;
}

/// Largest |[u, v]| in the stratum-2 norm over stratum-1 unit vectors u, v
/// (or an upper bound on it when stratum 2 has dimension > 1).
inline double bracket_norm_bound(const LeftInvariantMetric& metric) {
  const CarnotAlgebra& g = metric.algebra();
  if (g.step() < 2) return 0.0;
  const int m1 = g.stratum_dim(1), m2 = g.stratum_dim(2), o2 = g.stratum_offset(2);
  const Matrix r1_inv = metric.cholesky(1).inverse();
  const Matrix& r2 = metric.cholesky(2);
  std::vector<Matrix> forms(static_cast<std::size_t>(m2), Matrix::Zero(m1, m1));
  for (int i = 0; i < m1; ++i)
    for (int j = 0; j < m1; ++j) {
      const Vector br = g.bracket<double>(Vector::Unit(g.dim(), i), Vector::Unit(g.dim(), j));
      const Vector w = r2 * br.segment(o2, m2);
      for (int k = 0; k < m2; ++k) forms[static_cast<std::size_t>(k)](i, j) = w(k);
    }
  double sum_sq = 0.0;
  for (const Matrix& f : forms) {
    const Matrix orth = r1_inv.transpose() * f * r1_inv;
    const double s = Eigen::JacobiSVD<Matrix>(orth).singularValues()(0);
    sum_sq += s * s;
  }
  return std::sqrt(sum_sq);
}

/// Lower bound on d_0(e, w). Stratum 1 projects 1-Lipschitz onto the
/// abelianisation. For step >= 2, the stratum-2 displacement of any path of
/// horizontal length L and vertical length V is at most V + lambda L^2 / (2 pi)
/// (isoperimetric bound on swept area), and length >= sqrt(L^2 + V^2).
inline double d0_lower_bound_from_identity(const LeftInvariantMetric& metric, const Vector& w) {
  const CarnotAlgebra& g = metric.algebra();
  const double h0 = metric.stratum_norm(w, 1);
  if (g.step() == 1) return h0;
  const double z = metric.stratum_norm(w, 2);
  const double lambda = bracket_norm_bound(metric);
  if (lambda <= 0.0) return std::hypot(h0, z);
  const double k = lambda / (2.0 * std::numbers::pi);
  const double h0_sq = h0 * h0;
  double u = z / k - 1.0 / (2.0 * k * k);
  u = std::clamp(u, h0_sq, std::max(h0_sq, z / k));
  const double vertical = std::max(0.0, z - k * u);
  return std::sqrt(u + vertical * vertical);
}

inline double d0_lower_bound(const LeftInvariantMetric& metric, const CarnotPoint& p, const CarnotPoint& q) {
  return d0_lower_bound_from_identity(metric, multiply(metric.algebra(), inverse(p), q).coords);
}

namespace detail {

/// Starting polylines e -> w for the optimiser besides the straight segment:
/// stratum-1 loops in each coordinate plane that sweep out the area needed
/// to reach the higher strata, with the residual spread along the path.
/// Coordinate descent cannot leave the straight path when w is vertical, so
/// these loops are what makes the upper bound useful there.
inline std::vector<std::vector<Vector>> loop_guesses(const CarnotAlgebra& g, const Vector& w, int segments = 8) {
  std::vector<std::vector<Vector>> out;
  const int m1 = g.stratum_dim(1);
  const double vertical = w.tail(g.dim() - m1).norm();
  if (g.is_abelian() || m1 < 2 || vertical == 0.0) return out;
  const Vector h = w.head(m1);
  const double r0 = std::sqrt(vertical / std::numbers::pi);
  for (int i = 0; i < m1; ++i)
    for (int j = i + 1; j < m1; ++j)
      for (double orient : {1.0, -1.0})
        for (double factor : {0.5, 1.0, 2.0}) {
          const double r = factor * r0;
          std::vector<CarnotPoint> pts{CarnotPoint::identity(g.dim())};
          Vector prev = Vector::Zero(m1);
          for (int k = 1; k <= segments; ++k) {
            const double t = static_cast<double>(k) / segments;
            const double ang = 2.0 * std::numbers::pi * t;
            Vector c = t * h;
            c(i) += r * (std::cos(ang) - 1.0);
            c(j) += orient * r * std::sin(ang);
            CarnotPoint step = CarnotPoint::identity(g.dim());
            step.coords.head(m1) = c - prev;
            pts.push_back(multiply(g, pts.back(), step));
            prev = c;
          }
          const Vector residual = multiply(g, inverse(pts.back()), CarnotPoint{w}).coords;
          std::vector<Vector> nodes;
          for (int k = 0; k <= segments; ++k)
            nodes.push_back(multiply(g, pts[static_cast<std::size_t>(k)],
                                     CarnotPoint{Vector((static_cast<double>(k) / segments) * residual)})
                                .coords);
          nodes.back() = w;
          out.push_back(std::move(nodes));
        }
  return out;
}

}  // namespace detail

/// d_0(e, w) as an interval, without any symmetrisation of the endpoints.
/// The upper end is the better of the straight start and the shortest
/// loop start after optimisation.
inline Interval distance_from_identity(const LeftInvariantMetric& metric, const Vector& w,
                                       const PathOptimizerOptions& opt = {}) {
  const CarnotAlgebra& g = metric.algebra();
  const double lower = d0_lower_bound_from_identity(metric, w);
  if (g.is_abelian()) return Interval::exact(lower);
  const auto seg = [&](const Vector& a, const Vector& b) { return segment_length_d0(metric, a, b); };
  const auto polyline_length = [&](const std::vector<Vector>& nodes) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) total += seg(nodes[k], nodes[k + 1]);
    return total;
  };
  std::vector<std::pair<double, std::vector<Vector>>> starts;
  for (auto& nodes : detail::loop_guesses(g, w)) {
    const double len = polyline_length(nodes);
    starts.emplace_back(len, std::move(nodes));
  }
  std::stable_sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (starts.size() > 1) starts.resize(1);
  starts.insert(starts.begin(), {0.0, {Vector::Zero(g.dim()), w}});

  OptimizedPath best;
  best.length = std::numeric_limits<double>::infinity();
  for (auto& [len, nodes] : starts) {
    OptimizedPath path = optimize_polyline(std::move(nodes), seg, opt);
    if (path.length < best.length) best = std::move(path);
  }
  return {std::min(lower, best.length), best.length, best.converged};
}

namespace detail {
inline bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) != b(i)) return a(i) < b(i);
  return false;
}
}  // namespace detail

/// d_0(p, q) as an interval. The metric is left-invariant and symmetric, so
/// the pair is ordered canonically and translated to start at the identity.
inline Interval distance_d0(const LeftInvariantMetric& metric, const CarnotPoint& p, const CarnotPoint& q,
                            const PathOptimizerOptions& opt = {}) {
  require(p.dim() == metric.algebra().dim() && q.dim() == metric.algebra().dim(), "point dimension mismatch");
  const bool swap = detail::lex_less(q.coords, p.coords);
  const CarnotPoint& a = swap ? q : p;
  const CarnotPoint& b = swap ? p : q;
  if (a.coords == b.coords) return Interval::exact(0.0);
  return distance_from_identity(metric, multiply(metric.algebra(), inverse(a), b).coords, opt);
}

}  // namespace coarsemodel::carnot
