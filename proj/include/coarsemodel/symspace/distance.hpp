#pragma once

// Lengths and distances in G/K for the warped metric. Distances are
// intervals: rank-one abelian models have an exact closed form, everything
// else gets an optimised polyline above and projection bounds below.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "coarsemodel/carnot/metric.hpp"
#include "coarsemodel/path_optimizer.hpp"
#include "coarsemodel/symspace/warped_metric.hpp"

namespace coarsemodel::symspace {

inline constexpr int kGKSimpsonPanels = 8;

namespace detail {

inline Vector stack(const HorocyclicPoint& p) {
  Vector v(p.a.size() + p.n.coords.size());
  v << p.a, p.n.coords;
  return v;
}

inline bool lex_less(const HorocyclicPoint& p, const HorocyclicPoint& q) {
  if (p.a != q.a) return carnot::detail::lex_less(p.a, q.a);
  return carnot::detail::lex_less(p.n.coords, q.n.coords);
}

}  // namespace detail

/// Length of the coordinate-straight segment between stacked (a, n) vectors.
inline double segment_length_GK(const WarpedMetric& metric, const Vector& p, const Vector& q,
                                int panels = kGKSimpsonPanels) {
  const int r = metric.rank(), d = metric.algebra().dim();
  const Vector delta = q - p;
  const Vector da = delta.head(r), dn = delta.tail(d);
  const double flat = da.squaredNorm();
  const auto integrand = [&](double t) {
    const Vector a = p.head(r) + t * da;
    const Vector n = p.tail(d) + t * dn;
    const Vector v = carnot::pullback_velocity<double>(metric.algebra(), n, dn);
    double sq = flat;
    for (const auto& blk : metric.blocks())
      sq += char_eval(blk.functional, a) * blk.weight * v.segment(blk.offset, blk.len).squaredNorm();
    return std::sqrt(sq);
  };
  if (dn.squaredNorm() == 0.0) return std::sqrt(flat);
  return simpson(integrand, panels);
}

inline double path_length_GK(const std::vector<HorocyclicPoint>& path, const WarpedMetric& metric,
                             int panels = kGKSimpsonPanels) {
  require(path.size() >= 2, "path needs at least two nodes");
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k)
    total += segment_length_GK(metric, detail::stack(path[k]), detail::stack(path[k + 1]), panels);
  return total;
}

/// Exact distance in da^2 + w e^{kappa a} |dn|^2 on R x R^m. Substituting
/// b = kappa a / 2 and n' = (kappa / 2) sqrt(w) n gives (2 / kappa)^2 times the
/// upper half-space metric with height e^{-b}, where
///   sinh^2(d / 2) = |dn'|^2 e^{b_p + b_q} / 4 + sinh^2((b_p - b_q) / 2).
inline double hyperbolic_distance(double kappa, double weight, double a_p, const Vector& n_p, double a_q,
                                  const Vector& n_q) {
  const double bp = 0.5 * kappa * a_p, bq = 0.5 * kappa * a_q;
  const double dn2 = (0.25 * kappa * kappa * weight) * (n_p - n_q).squaredNorm();
  const double sh = std::sinh(0.5 * (bp - bq));
  const double x = 0.25 * dn2 * std::exp(bp + bq) + sh * sh;
  return (2.0 / kappa) * 2.0 * std::asinh(std::sqrt(x));
}

inline double closed_form_distance(const WarpedMetric& metric, const HorocyclicPoint& p, const HorocyclicPoint& q) {
  require(metric.has_closed_form(), "model has no closed-form distance");
  const RootBlock& blk = metric.blocks().front();
  const double kappa = blk.functional(0);
  if (kappa > 0) return hyperbolic_distance(kappa, blk.weight, p.a(0), p.n.coords, q.a(0), q.n.coords);
  return hyperbolic_distance(-kappa, blk.weight, -p.a(0), p.n.coords, -q.a(0), q.n.coords);
}

/// Intrinsic distance in the leaf {a} x N.
inline Interval leaf_distance_da(const WarpedMetric& metric, const Vector& a, const CarnotPoint& x,
                                 const CarnotPoint& y, const PathOptimizerOptions& opt = {}) {
  return carnot::distance_d0(metric.leaf_metric(a), x, y, opt);
}

/// Image of q under the isometry taking p to (0, e): left translation by
/// n_p^{-1}, then (a, n) -> (a - a_p, F_{-a_p} n).
inline HorocyclicPoint canonical_offset(const WarpedMetric& metric, const HorocyclicPoint& p,
                                        const HorocyclicPoint& q) {
  const CarnotPoint rel = carnot::multiply(metric.algebra(), carnot::inverse(p.n), q.n);
  return {q.a - p.a, metric.F(Vector(-p.a), rel)};
}

/// Lower bound on d(0, e) -> (a, m) in the canonical frame, the maximum of
///  - |a| (the flat projection is 1-Lipschitz);
///  - for each stratum-1 root beta, the hyperbolic distance of the projection
///    to (<beta/|beta|, a>, m_beta), which is 1-Lipschitz onto a rank-one model;
///  - the root l of l e^{kappa l / 2} = d_0 lower bound, kappa = max |beta|: a
///    path of length l has |a| <= l, so its leaf part has d_0-length at most
///    l e^{kappa l / 2}.
inline double canonical_lower_bound(const WarpedMetric& metric, const HorocyclicPoint& off) {
  double lower = off.a.norm();
  if (off.n.coords.squaredNorm() == 0.0) return lower;
  for (const auto& blk : metric.blocks()) {
    if (blk.stratum != 1) continue;
    const double kappa = blk.functional.norm();
    const double s = blk.functional.dot(off.a) / kappa;
    const Vector zero = Vector::Zero(blk.len);
    lower = std::max(lower, hyperbolic_distance(kappa, blk.weight, 0.0, zero, s, off.n.coords.segment(blk.offset, blk.len)));
  }
  const double d0 = carnot::d0_lower_bound_from_identity(metric.base_metric(), off.n.coords);
  const double kappa = metric.max_char_norm();
  const auto grow = [&](double l) { return l * std::exp(0.5 * kappa * l); };
  double lo = 0.0, hi = std::max(d0, 1e-300);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (grow(mid) < d0 ? lo : hi) = mid;
  }
  return std::max(lower, lo);
}

inline double distance_GK_lower_bound(const WarpedMetric& metric, const HorocyclicPoint& p, const HorocyclicPoint& q) {
  const bool swap = detail::lex_less(q, p);
  return canonical_lower_bound(metric, canonical_offset(metric, swap ? q : p, swap ? p : q));
}

struct DistanceOptions {
  PathOptimizerOptions optimizer;
  bool use_closed_form = true;  // off: optimise even on rank-one models
};

/// d_{G/K}(p, q) as an interval.
inline Interval distance_GK(const WarpedMetric& metric, const HorocyclicPoint& p, const HorocyclicPoint& q,
                            const DistanceOptions& opt = {}) {
  require(p.a.size() == metric.rank() && q.a.size() == metric.rank(), "flat coordinate has the wrong rank");
  if (p == q) return Interval::exact(0.0);
  // Same n: the straight path in a realises the flat lower bound.
  if (p.n == q.n) return Interval::exact((p.a - q.a).norm());
  if (opt.use_closed_form && metric.has_closed_form()) return Interval::exact(closed_form_distance(metric, p, q));

  const bool swap = detail::lex_less(q, p);
  const HorocyclicPoint off = canonical_offset(metric, swap ? q : p, swap ? p : q);
  const double lower = canonical_lower_bound(metric, off);

  const int r = metric.rank(), dn = metric.algebra().dim();
  const Vector origin = Vector::Zero(r + dn);
  const Vector target = detail::stack(off);
  const auto seg = [&](const Vector& x, const Vector& y) { return segment_length_GK(metric, x, y); };

  std::vector<std::vector<Vector>> starts{{origin, target}};
  double best_loop = std::numeric_limits<double>::infinity();
  std::vector<Vector> loop_start;
  for (auto& nodes : carnot::detail::loop_guesses(metric.algebra(), off.n.coords)) {
    std::vector<Vector> lifted;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      Vector v(r + dn);
      v << (static_cast<double>(k) / static_cast<double>(nodes.size() - 1)) * off.a, nodes[k];
      lifted.push_back(std::move(v));
    }
    double len = 0.0;
    for (std::size_t k = 0; k + 1 < lifted.size(); ++k) len += seg(lifted[k], lifted[k + 1]);
    if (len < best_loop) {
      best_loop = len;
      loop_start = std::move(lifted);
    }
  }
  if (!loop_start.empty()) starts.push_back(std::move(loop_start));

  OptimizedPath best;
  best.length = std::numeric_limits<double>::infinity();
  for (auto& nodes : starts) {
    OptimizedPath path = optimize_polyline(std::move(nodes), seg, opt.optimizer);
    if (path.length < best.length) best = std::move(path);
  }
  return {std::min(lower, best.length), best.length, best.converged};
}

/// Pair of lattice elements x, y in the leaf at a, embedded as (a, F_a x).
struct LeafPair {
  Vector a;
  CarnotPoint x;
  CarnotPoint y;
};

struct DistortionRow {
  Vector a;
  Interval d0;
  Interval ambient;
  double ratio = 0.0;  // ambient.upper / ln(d0.upper)
};

struct DistortionProfile {
  std::vector<DistortionRow> rows;
  double c1 = 0.0;  // smallest ratio
  double c2 = 0.0;  // largest ratio
};

inline DistortionProfile distortion_profile(const std::vector<LeafPair>& pairs, const WarpedMetric& metric,
                                            const DistanceOptions& opt = {}) {
  DistortionProfile out;
  out.c1 = std::numeric_limits<double>::infinity();
  out.c2 = -std::numeric_limits<double>::infinity();
  for (const auto& pr : pairs) {
    const Interval d0 = carnot::distance_d0(metric.base_metric(), pr.x, pr.y, opt.optimizer);
    if (!(d0.lower > 1.0)) fail(ErrorKind::invalid_argument, "distortion_profile needs d0 > 1 for every pair");
    const Interval amb = distance_GK(metric, metric.embed(pr.a, pr.x), metric.embed(pr.a, pr.y), opt);
    DistortionRow row{pr.a, d0, amb, amb.upper / std::log(d0.upper)};
    out.c1 = std::min(out.c1, row.ratio);
    out.c2 = std::max(out.c2, row.ratio);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace coarsemodel::symspace
