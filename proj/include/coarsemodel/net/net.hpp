#pragma once

// Finite windows of the net X(Delta) = {(a, F_a g) : a in Z^rank, g in Delta}
// inside G/K, the right-translation action of Delta on them, and the
// diagnostics run on a window: wobbling, freeness, uniform discreteness and
// bounded geometry, and density.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coarsemodel/carnot/lattice.hpp"
#include "coarsemodel/coarse/action.hpp"
#include "coarsemodel/symspace/distance.hpp"

namespace coarsemodel::net {

using carnot::CarnotPoint;
using carnot::Interval;
using carnot::LatticeElement;
using carnot::LatticeSpec;
using carnot::Word;
using symspace::HorocyclicPoint;
using symspace::Vector;
using symspace::WarpedMetric;

using IntVector = std::vector<int>;

inline Vector to_vector(const IntVector& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i];
  return v;
}

/// Product of integer intervals [lo_i, hi_i].
struct ABox {
  IntVector lo;
  IntVector hi;

  static ABox cube(int rank, int lo, int hi) {
    return {IntVector(static_cast<std::size_t>(rank), lo), IntVector(static_cast<std::size_t>(rank), hi)};
  }

  int rank() const { return static_cast<int>(lo.size()); }

  void validate() const {
    require(!lo.empty() && lo.size() == hi.size(), "a-box bounds must be non-empty and of equal rank");
    for (std::size_t i = 0; i < lo.size(); ++i) require(lo[i] <= hi[i], "a-box has an empty interval");
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < lo.size(); ++i) n *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
    return n;
  }

  /// Lattice points in lexicographic order.
  std::vector<IntVector> points() const {
    validate();
    std::vector<IntVector> out;
    IntVector a = lo;
    while (true) {
      out.push_back(a);
      std::size_t i = a.size();
      while (i-- > 0) {
        if (a[i] < hi[i]) {
          ++a[i];
          break;
        }
        a[i] = lo[i];
      }
      if (i == std::numeric_limits<std::size_t>::max()) break;
    }
    return out;
  }

  bool contains(const IntVector& a) const {
    if (a.size() != lo.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] < lo[i] || a[i] > hi[i]) return false;
    return true;
  }

  /// At least `margin` from every face.
  bool interior(const Vector& a, double margin = 1.0) const {
    if (a.size() != rank()) return false;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const double x = a(static_cast<Eigen::Index>(i));
      if (x < lo[i] + margin || x > hi[i] - margin) return false;
    }
    return true;
  }
  bool interior(const IntVector& a, int margin = 1) const { return interior(to_vector(a), margin); }
};

struct NetPoint {
  IntVector a;
  LatticeElement g;
  HorocyclicPoint embedded;  // (a, F_a(g.point))
};

struct NetOptions {
  double dedup_eps = 1e-6;
  // Separation margin of the lattice under d_0, measured on a word ball.
  bool enforce_margin = true;
  double margin_tolerance = 1e-9;
  int margin_window_radius = 3;
  PathOptimizerOptions optimizer;
};

class NetWindow {
 public:
  NetWindow(LatticeSpec spec, WarpedMetric metric, ABox box, int ball_radius, Interval margin, double dedup_eps)
      : spec_(std::move(spec)), metric_(std::move(metric)), box_(std::move(box)), radius_(ball_radius),
        margin_(margin), eps_(dedup_eps) {}

  const LatticeSpec& spec() const { return spec_; }
  const WarpedMetric& metric() const { return metric_; }
  const ABox& box() const { return box_; }
  int ball_radius() const { return radius_; }
  const Interval& margin() const { return margin_; }
  double dedup_eps() const { return eps_; }
  const std::vector<NetPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const NetPoint& operator[](std::size_t i) const { return points_[i]; }

  std::optional<std::size_t> find(const IntVector& a, const CarnotPoint& g) const {
    const auto it = leaves_.find(a);
    if (it == leaves_.end()) return std::nullopt;
    return it->second.find(g.coords);
  }

  /// Points whose word length is at most ball_radius - margin.
  bool word_interior(std::size_t i, int margin = 1) const { return points_[i].g.length() <= radius_ - margin; }

  void add(NetPoint p) {
    const std::size_t id = points_.size();
    auto [it, fresh] = leaves_.try_emplace(p.a, eps_);
    (void)fresh;
    if (it->second.insert(p.g.point.coords, id) != id) fail(ErrorKind::numerical, "duplicate lattice element in net window");
    points_.push_back(std::move(p));
  }

 private:
  LatticeSpec spec_;
  WarpedMetric metric_;
  ABox box_;
  int radius_;
  Interval margin_;
  double eps_;
  std::vector<NetPoint> points_;
  std::map<IntVector, carnot::CoordinateIndex> leaves_;
};

inline NetPoint make_net_point(const WarpedMetric& metric, IntVector a, LatticeElement g) {
  HorocyclicPoint emb = metric.embed(to_vector(a), g.point);
  return {std::move(a), std::move(g), std::move(emb)};
}

/// All (a, g) with a in the box and |g| <= ball_radius, leaves in lexicographic
/// order of a and each leaf in breadth-first order of the word ball.
inline NetWindow build_net(const LatticeSpec& spec, const WarpedMetric& metric, const ABox& box, int ball_radius,
                           const NetOptions& opt = {}) {
  box.validate();
  require(box.rank() == metric.rank(), "a-box rank differs from the model rank");
  require(spec.algebra == metric.algebra(), "lattice lives in a different nilpotent group than the model");
  require(ball_radius >= 0, "ball radius must be non-negative");

  Interval margin{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), true};
  if (opt.enforce_margin) {
    std::vector<CarnotPoint> window;
    for (const auto& e : carnot::lattice_ball(spec, opt.margin_window_radius, opt.dedup_eps)) window.push_back(e.point);
    margin = carnot::separation_margin(window, metric.base_metric(), opt.optimizer);
    if (margin.lower < 1.0 - opt.margin_tolerance)
      fail(ErrorKind::infeasible, "lattice separation margin " + std::to_string(margin.lower) +
                                      " is below 1; call rescale_lattice with a larger factor");
  }

  NetWindow net(spec, metric, box, ball_radius, margin, opt.dedup_eps);
  const auto ball = carnot::lattice_ball(spec, ball_radius, opt.dedup_eps);
  for (const IntVector& a : box.points())
    for (const auto& g : ball) net.add(make_net_point(metric, a, g));
  return net;
}

inline LatticeElement lattice_element(const LatticeSpec& spec, const Word& w) { return {w, spec.evaluate(w)}; }

/// delta . (a, F_a h) = (a, F_a(h delta^{-1})). With this convention
/// act(d1, act(d2, p)) = act(d1 d2, p).
inline NetPoint act(const LatticeSpec& spec, const WarpedMetric& metric, const LatticeElement& delta, const NetPoint& p) {
  LatticeElement g{p.g.word, carnot::multiply(spec.algebra, p.g.point, carnot::inverse(delta.point))};
  const Word inv = carnot::inverse_word(delta.word);
  g.word.insert(g.word.end(), inv.begin(), inv.end());
  return make_net_point(metric, p.a, std::move(g));
}

inline NetPoint act(const NetWindow& net, const LatticeElement& delta, const NetPoint& p) {
  return act(net.spec(), net.metric(), delta, p);
}

/// Window index of delta . p, if it stays in the window.
inline std::optional<std::size_t> act_index(const NetWindow& net, const LatticeElement& delta, std::size_t i) {
  const NetPoint& p = net[i];
  return net.find(p.a, carnot::multiply(net.spec().algebra, p.g.point, carnot::inverse(delta.point)));
}

/// The action of the given elements and their inverses as index tables.
/// Defaults to the lattice generators.
inline coarse::PointedAction net_action(const NetWindow& net, std::vector<LatticeElement> elements = {}) {
  if (elements.empty())
    for (std::size_t i = 0; i < net.spec().generators.size(); ++i)
      elements.push_back(lattice_element(net.spec(), {static_cast<int>(i) + 1}));
  coarse::PointedAction out;
  out.num_points = net.size();
  for (const auto& e : elements) {
    const LatticeElement inv{carnot::inverse_word(e.word), carnot::inverse(e.point)};
    for (const LatticeElement* d : {&e, &inv}) {
      out.generators.push_back(carnot::word_to_string(d->word));
      std::vector<coarse::Move> row(net.size());
      for (std::size_t i = 0; i < net.size(); ++i) row[i] = act_index(net, *d, i);
      out.moves.push_back(std::move(row));
    }
    const std::size_t k = out.inverse_of.size();
    out.inverse_of.push_back(k + 1);
    out.inverse_of.push_back(k);
  }
  return out;
}

/// Ambient distance between two embedded points; exact on closed-form models.
inline Interval ambient_distance(const WarpedMetric& metric, const HorocyclicPoint& p, const HorocyclicPoint& q,
                                 const symspace::DistanceOptions& opt = {}) {
  return symspace::distance_GK(metric, p, q, opt);
}

inline double ambient_lower_bound(const WarpedMetric& metric, const HorocyclicPoint& p, const HorocyclicPoint& q) {
  if (p == q) return 0.0;
  if (metric.has_closed_form()) return symspace::closed_form_distance(metric, p, q);
  return symspace::distance_GK_lower_bound(metric, p, q);
}

struct LeafDisplacement {
  IntVector a;
  Interval displacement;  // sup over the evaluated points of the leaf
  std::size_t evaluated = 0;
};

struct DisplacementProfile {
  Word delta;
  Interval d0;          // d_0(1, delta)
  double sup_upper = 0.0;
  double sup_lower = 0.0;
  double mean_upper = 0.0;
  std::vector<LeafDisplacement> leaves;
  std::size_t excluded = 0;  // points at the word-ball boundary
  // Smallest C with sup <= C ln d_0(1, delta); infinite when d_0 <= 1.
  double admissible_c = std::numeric_limits<double>::infinity();

  bool bound_holds(double c) const { return d0.lower > 1.0 && sup_upper <= c * std::log(d0.lower); }
};

struct DisplacementOptions {
  symspace::DistanceOptions distance;
  // Models without a closed form are evaluated at one point per leaf (the
  // displacement is the same for every point, see the canonical frame).
  bool every_point = false;
};

inline DisplacementProfile displacement_profile(const NetWindow& net, const LatticeElement& delta,
                                                const DisplacementOptions& opt = {}) {
  require(delta.point.coords.cwiseAbs().maxCoeff() > net.dedup_eps(), "displacement of the identity is excluded");
  DisplacementProfile out;
  out.delta = delta.word;
  out.d0 = carnot::distance_from_identity(net.metric().base_metric(), delta.point.coords, opt.distance.optimizer);

  const bool all = opt.every_point || net.metric().has_closed_form();
  bool any_interior = false;
  for (std::size_t i = 0; i < net.size(); ++i) any_interior = any_interior || net.word_interior(i);

  std::map<IntVector, std::size_t> leaf_row;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const NetPoint& p = net[i];
    if (any_interior && !net.word_interior(i)) {
      ++out.excluded;
      continue;
    }
    auto [it, fresh] = leaf_row.try_emplace(p.a, out.leaves.size());
    if (fresh) out.leaves.push_back({p.a, Interval::exact(0.0), 0});
    LeafDisplacement& row = out.leaves[it->second];
    if (!all && row.evaluated > 0) continue;
    const Interval d = ambient_distance(net.metric(), p.embedded, act(net, delta, p).embedded, opt.distance);
    row.displacement.lower = std::max(row.displacement.lower, d.lower);
    row.displacement.upper = std::max(row.displacement.upper, d.upper);
    row.displacement.converged = row.displacement.converged && d.converged;
    ++row.evaluated;
    out.sup_lower = std::max(out.sup_lower, d.lower);
    out.sup_upper = std::max(out.sup_upper, d.upper);
    total += d.upper;
    ++count;
  }
  out.mean_upper = count ? total / static_cast<double>(count) : 0.0;
  if (out.d0.lower > 1.0) out.admissible_c = out.sup_upper / std::log(out.d0.lower);
  return out;
}

struct FreenessReport {
  int max_length = 0;
  std::size_t elements = 0;  // nontrivial delta with |delta| <= L
  std::size_t checked = 0;   // (delta, point) pairs
  std::size_t fixed = 0;
  double min_move = std::numeric_limits<double>::infinity();  // max-coordinate change of the embedded point
};

inline FreenessReport freeness_check(const NetWindow& net, int max_length) {
  require(max_length >= 1, "freeness word length must be at least 1");
  FreenessReport out;
  out.max_length = max_length;
  const auto ball = carnot::lattice_ball(net.spec(), max_length, net.dedup_eps());
  for (std::size_t k = 1; k < ball.size(); ++k) {
    ++out.elements;
    for (const NetPoint& p : net.points()) {
      const NetPoint q = act(net, ball[k], p);
      const double move = (q.embedded.n.coords - p.embedded.n.coords).cwiseAbs().maxCoeff();
      out.min_move = std::min(out.min_move, move);
      if (move <= net.dedup_eps()) ++out.fixed;
      ++out.checked;
    }
  }
  return out;
}

struct BallCountRow {
  double r = 0.0;
  std::size_t max_count = 0;
};

struct UdbgReport {
  std::optional<double> min_separation;  // none for a single point
  std::optional<double> min_same_leaf;
  std::optional<double> min_cross_leaf;
  std::pair<std::size_t, std::size_t> closest{0, 0};
  std::vector<BallCountRow> ball_counts;
  double slope = 0.0;  // least-squares slope of ln(max_count) against r
};

/// Pairwise lower bounds (exact on closed-form models). Ball counts use the
/// lower bounds, so they can only overcount.
inline UdbgReport udbg_report(const NetWindow& net, const std::vector<double>& radii = {0.5, 1, 1.5, 2, 2.5, 3}) {
  UdbgReport out;
  const std::size_t n = net.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = ambient_lower_bound(net.metric(), net[i].embedded, net[j].embedded);
      const bool same = net[i].a == net[j].a;
      auto& slot = same ? out.min_same_leaf : out.min_cross_leaf;
      if (!slot || d[i][j] < *slot) slot = d[i][j];
      if (!out.min_separation || d[i][j] < *out.min_separation) {
        out.min_separation = d[i][j];
        out.closest = {i, j};
      }
    }
  for (double r : radii) {
    BallCountRow row{r, 0};
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = 0;
      for (std::size_t j = 0; j < n; ++j) c += d[i][j] <= r ? 1 : 0;
      row.max_count = std::max(row.max_count, c);
    }
    out.ball_counts.push_back(row);
  }
  if (out.ball_counts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(out.ball_counts.size());
    for (const auto& row : out.ball_counts) {
      const double y = std::log(static_cast<double>(row.max_count));
      sx += row.r;
      sy += y;
      sxx += row.r * row.r;
      sxy += row.r * y;
    }
    const double den = m * sxx - sx * sx;
    out.slope = den > 0 ? (m * sxy - sx * sy) / den : 0.0;
  }
  return out;
}

/// Halton points in [a_lo, a_hi] x [n_lo, n_hi] with a seeded Cranley-Patterson
/// rotation. Degenerate intervals (lo == hi) pin the coordinate.
inline std::vector<HorocyclicPoint> halton_probes(const Vector& a_lo, const Vector& a_hi, const Vector& n_lo,
                                                  const Vector& n_hi, std::size_t count, std::uint64_t seed) {
  require(a_lo.size() == a_hi.size() && n_lo.size() == n_hi.size(), "probe box bounds differ in size");
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const Eigen::Index dim = a_lo.size() + n_lo.size();
  require(dim <= static_cast<Eigen::Index>(std::size(kPrimes)), "too many probe coordinates for the Halton table");
  Vector lo(dim), hi(dim);
  lo << a_lo, n_lo;
  hi << a_hi, n_hi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector shift(dim);
  for (Eigen::Index k = 0; k < dim; ++k) shift(k) = u(rng);

  std::vector<HorocyclicPoint> out;
  for (std::size_t i = 1; i <= count; ++i) {
    Vector x(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      const int b = kPrimes[k];
      double f = 1.0, r = 0.0;
      for (std::size_t m = i; m > 0; m /= static_cast<std::size_t>(b)) {
        f /= b;
        r += f * static_cast<double>(m % static_cast<std::size_t>(b));
      }
      r += shift(k);
      r -= std::floor(r);
      x(k) = lo(k) + r * (hi(k) - lo(k));
    }
    out.push_back({x.head(a_lo.size()), {x.tail(n_lo.size())}});
  }
  return out;
}

struct DensityRow {
  HorocyclicPoint probe;
  std::size_t nearest = 0;
  Interval distance;
  bool boundary = false;  // nearest point sits on the word-ball boundary
};

struct DensityReport {
  double epsilon = 0.0;  // max over used probes of the nearest upper bound
  std::vector<DensityRow> rows;
  std::size_t excluded = 0;  // probes outside the trusted interior
  std::size_t boundary_hits = 0;
};

/// Probes must be at least 1 from the faces of the a-box; others are counted
/// and skipped.
inline DensityReport density_report(const NetWindow& net, const std::vector<HorocyclicPoint>& probes,
                                    const symspace::DistanceOptions& opt = {}) {
  require(net.size() > 0, "density needs a non-empty window");
  DensityReport out;
  for (const auto& probe : probes) {
    if (!net.box().interior(probe.a, 1.0)) {
      ++out.excluded;
      continue;
    }
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < net.size(); ++i)
      cand.emplace_back(ambient_lower_bound(net.metric(), probe, net[i].embedded), i);
    std::sort(cand.begin(), cand.end());
    DensityRow row{probe, cand.front().second, {0, std::numeric_limits<double>::infinity(), true}, false};
    for (const auto& [lower, i] : cand) {
      if (lower >= row.distance.upper) break;
      const Interval d = ambient_distance(net.metric(), probe, net[i].embedded, opt);
      if (d.upper < row.distance.upper) {
        row.distance = d;
        row.nearest = i;
      }
    }
    row.distance.lower = std::min(row.distance.lower, cand.front().first);
    row.boundary = net[row.nearest].g.length() == net.ball_radius();
    out.boundary_hits += row.boundary ? 1 : 0;
    out.epsilon = std::max(out.epsilon, row.distance.upper);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace coarsemodel::net
