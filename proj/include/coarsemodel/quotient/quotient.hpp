#pragma once

// The quotient of a finite window by a translation-like action: orbit classes
// by union-find over the generator moves, the chain metric as shortest paths
// on the class graph, and the checks run on it.
//
// Window restriction only removes chains, so every distance here is an upper
// bound on the quotient metric of the infinite space. Where the base distance
// itself is an interval (non-closed-form models) both ends are carried.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "coarsemodel/coarse/action.hpp"
#include "coarsemodel/coarse/metric_space.hpp"
#include "coarsemodel/net/net.hpp"

namespace coarsemodel::quotient {

using carnot::CarnotPoint;
using carnot::Interval;
using coarse::FiniteMetricSpace;
using coarse::PointedAction;
using symspace::Vector;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Distance bounds on a window; lower == upper for exact spaces.
struct PairBounds {
  std::size_t size = 0;
  std::function<double(std::size_t, std::size_t)> lower;
  std::function<Interval(std::size_t, std::size_t)> interval;

  static PairBounds exact(const FiniteMetricSpace& x) {
    return {x.size(), [x](std::size_t i, std::size_t j) { return x(i, j); },
            [x](std::size_t i, std::size_t j) { return Interval::exact(x(i, j)); }};
  }
};

/// GK distances between net points: cheap lower bounds, optimised intervals.
inline PairBounds net_pair_bounds(const net::NetWindow& w, const symspace::DistanceOptions& opt = {}) {
  const auto pts = std::make_shared<const std::vector<net::NetPoint>>(w.points());
  const auto m = std::make_shared<const symspace::WarpedMetric>(w.metric());
  return {w.size(),
          [pts, m](std::size_t i, std::size_t j) { return net::ambient_lower_bound(*m, (*pts)[i].embedded, (*pts)[j].embedded); },
          [pts, m, opt](std::size_t i, std::size_t j) {
            return net::ambient_distance(*m, (*pts)[i].embedded, (*pts)[j].embedded, opt);
          }};
}

struct OrbitPartition {
  std::vector<std::size_t> class_of;
  std::vector<std::vector<std::size_t>> classes;  // members ascending; classes ordered by smallest member
  std::vector<char> truncated;                    // some member has an undefined move

  std::size_t size() const { return classes.size(); }
};

inline OrbitPartition orbit_classes(std::size_t n, const PointedAction& act) {
  require(act.num_points == n, "action and window have different sizes");
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  const auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<char> partial(n, 0);
  for (const auto& row : act.moves)
    for (std::size_t i = 0; i < n; ++i) {
      if (!row[i]) {
        partial[i] = 1;
        continue;
      }
      const std::size_t a = find(i), b = find(*row[i]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  OrbitPartition out;
  out.class_of.assign(n, 0);
  std::map<std::size_t, std::size_t> id_of_root;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [it, fresh] = id_of_root.try_emplace(find(i), out.classes.size());
    if (fresh) {
      out.classes.emplace_back();
      out.truncated.push_back(0);
    }
    out.class_of[i] = it->second;
    out.classes[it->second].push_back(i);
    if (partial[i]) out.truncated[it->second] = 1;
  }
  return out;
}

/// Steps (x_i, y_i); witness i is a sequence of generator indices taking
/// y_i to x_{i+1}, applied left to right.
struct Chain {
  std::vector<std::pair<std::size_t, std::size_t>> steps;
  std::vector<std::vector<std::size_t>> witnesses;
};

inline double chain_cost(const Chain& chain, const PointedAction& act, const FiniteMetricSpace& x) {
  require(!chain.steps.empty(), "chain has no steps");
  if (chain.witnesses.size() + 1 != chain.steps.size()) fail(ErrorKind::invalid_argument, "broken linkage: witness count");
  double cost = 0.0;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    const auto [a, b] = chain.steps[i];
    require(a < x.size() && b < x.size(), "chain point outside the window");
    cost += x(a, b);
    if (i + 1 == chain.steps.size()) break;
    std::size_t p = b;
    for (std::size_t g : chain.witnesses[i]) {
      require(g < act.num_generators(), "witness uses an unknown generator");
      const coarse::Move m = act.move(g, p);
      if (!m) fail(ErrorKind::invalid_argument, "broken linkage: witness leaves the window");
      p = *m;
    }
    if (p != chain.steps[i + 1].first) fail(ErrorKind::invalid_argument, "broken linkage: g_i y_i != x_{i+1}");
  }
  return cost;
}

struct ClassEdge {
  Interval weight{kInf, kInf, true};
  std::pair<std::size_t, std::size_t> witness{0, 0};  // point pair realising the upper end
};

class QuotientWindow {
 public:
  QuotientWindow(OrbitPartition partition, std::vector<std::vector<ClassEdge>> graph)
      : partition_(std::move(partition)), graph_(std::move(graph)) {}

  const OrbitPartition& partition() const { return partition_; }
  std::size_t num_classes() const { return partition_.size(); }
  std::size_t class_of(std::size_t point) const { return partition_.class_of.at(point); }
  const std::vector<std::vector<ClassEdge>>& class_graph() const { return graph_; }

 private:
  OrbitPartition partition_;
  std::vector<std::vector<ClassEdge>> graph_;
};

struct QuotientOptions {
  // Class pairs farther apart than this get no edge (sparser graph; classes
  // may become unreachable).
  double max_edge = kInf;
};

/// Edge weight between two classes = min cross-pair distance. Intervals are
/// only requested for pairs whose lower bound can still beat the best upper.
inline QuotientWindow build_quotient(const PairBounds& d, const PointedAction& act, const QuotientOptions& opt = {}) {
  OrbitPartition part = orbit_classes(d.size, act);
  const std::size_t k = part.size();
  std::vector<std::vector<ClassEdge>> graph(k, std::vector<ClassEdge>(k));
  for (std::size_t c = 0; c < k; ++c) graph[c][c] = {Interval::exact(0.0), {part.classes[c][0], part.classes[c][0]}};
  for (std::size_t c1 = 0; c1 < k; ++c1)
    for (std::size_t c2 = c1 + 1; c2 < k; ++c2) {
      std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> cand;
      for (std::size_t i : part.classes[c1])
        for (std::size_t j : part.classes[c2]) cand.push_back({d.lower(i, j), {i, j}});
      std::sort(cand.begin(), cand.end());
      ClassEdge e;
      if (cand.front().first > opt.max_edge) continue;
      for (const auto& [lo, pr] : cand) {
        if (lo >= e.weight.upper) break;
        const Interval v = d.interval(pr.first, pr.second);
        if (v.upper < e.weight.upper) {
          e.weight.upper = v.upper;
          e.weight.converged = v.converged;
          e.witness = pr;
        }
      }
      e.weight.lower = std::min(cand.front().first, e.weight.upper);
      if (e.weight.upper > opt.max_edge) e = ClassEdge{};
      graph[c1][c2] = graph[c2][c1] = e;
    }
  return {std::move(part), std::move(graph)};
}

inline QuotientWindow build_quotient(const FiniteMetricSpace& x, const PointedAction& act,
                                     const QuotientOptions& opt = {}) {
  return build_quotient(PairBounds::exact(x), act, opt);
}

namespace detail {

inline std::vector<double> dijkstra(const std::vector<std::vector<ClassEdge>>& g, std::size_t src, bool upper) {
  const std::size_t k = g.size();
  std::vector<double> dist(k, kInf);
  std::vector<char> done(k, 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    for (std::size_t v = 0; v < k; ++v) {
      const double w = upper ? g[u][v].weight.upper : g[u][v].weight.lower;
      if (v == u || !std::isfinite(w)) continue;
      if (du + w < dist[v]) {
        dist[v] = du + w;
        pq.push({dist[v], v});
      }
    }
  }
  return dist;
}

}  // namespace detail

struct QuotientDistance {
  Interval value;
  bool reachable = true;
};

inline QuotientDistance quotient_distance(const QuotientWindow& q, std::size_t cx, std::size_t cy) {
  require(cx < q.num_classes() && cy < q.num_classes(), "class index outside the quotient window");
  if (cx == cy) return {Interval::exact(0.0), true};
  const double up = detail::dijkstra(q.class_graph(), cx, true)[cy];
  if (!std::isfinite(up)) return {{kInf, kInf, true}, false};
  const double lo = detail::dijkstra(q.class_graph(), cx, false)[cy];
  return {{lo, up, true}, true};
}

/// All-pairs table; entry [c][c] is exactly 0.
struct QuotientMatrix {
  std::vector<std::vector<double>> lower;
  std::vector<std::vector<double>> upper;
  bool connected = true;
};

inline QuotientMatrix quotient_matrix(const QuotientWindow& q) {
  QuotientMatrix m;
  for (std::size_t c = 0; c < q.num_classes(); ++c) {
    m.upper.push_back(detail::dijkstra(q.class_graph(), c, true));
    m.lower.push_back(detail::dijkstra(q.class_graph(), c, false));
    for (double v : m.upper.back()) m.connected = m.connected && std::isfinite(v);
  }
  return m;
}

struct AxiomReport {
  std::size_t classes = 0;
  bool symmetric = true;
  bool positive = true;
  bool triangle = true;
  bool connected = true;
  double min_positive = kInf;          // min lower-bound distance between distinct classes
  double max_asymmetry = 0.0;
  double worst_triangle = 0.0;          // max of d(x,z) - d(x,y) - d(y,z)

  bool pass() const { return symmetric && positive && triangle && connected; }
};

/// Exhaustive over class pairs and triples. Distances compared are the
/// window upper bounds; positivity uses the lower bounds.
inline AxiomReport metric_axiom_check(const QuotientWindow& q, double tol = 1e-9) {
  const QuotientMatrix m = quotient_matrix(q);
  AxiomReport r;
  r.classes = q.num_classes();
  r.connected = m.connected;
  const std::size_t k = r.classes;
  for (std::size_t i = 0; i < k; ++i) {
    if (m.upper[i][i] != 0.0) r.positive = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      r.max_asymmetry = std::max(r.max_asymmetry, std::abs(m.upper[i][j] - m.upper[j][i]));
      r.min_positive = std::min(r.min_positive, m.lower[i][j]);
      for (std::size_t l = 0; l < k; ++l)
        r.worst_triangle = std::max(r.worst_triangle, m.upper[i][l] - m.upper[i][j] - m.upper[j][l]);
    }
  }
  r.symmetric = r.max_asymmetry <= tol;
  if (k > 1) r.positive = r.positive && r.min_positive > 0.0;
  r.triangle = r.worst_triangle <= tol;
  return r;
}

struct BilipschitzConstants {
  double lower = kInf;  // min d2 / d1 over compared class pairs (upper ends)
  double upper = 0.0;   // max d2 / d1
  // Guaranteed enclosures from the interval ends.
  double lower_certified = kInf;
  double upper_certified = 0.0;
  std::size_t pairs = 0;
};

/// `correspondence[c]` is the class of Q2 matched with class c of Q1; classes
/// with `use[c] == 0` are skipped (e.g. truncated or boundary classes).
inline BilipschitzConstants quotient_bilip_compare(const QuotientWindow& q1, const QuotientWindow& q2,
                                                   const std::vector<std::size_t>& correspondence,
                                                   const std::vector<char>& use = {}) {
  require(correspondence.size() == q1.num_classes(), "correspondence must map every class of the first quotient");
  {
    std::vector<char> hit(q2.num_classes(), 0);
    for (std::size_t c : correspondence) {
      if (c >= q2.num_classes() || hit[c]) fail(ErrorKind::invalid_argument, "correspondence is not a bijection");
      hit[c] = 1;
    }
    if (correspondence.size() != q2.num_classes()) fail(ErrorKind::invalid_argument, "correspondence is not a bijection");
  }
  require(use.empty() || use.size() == correspondence.size(), "one flag per class");
  const QuotientMatrix m1 = quotient_matrix(q1), m2 = quotient_matrix(q2);
  BilipschitzConstants out;
  for (std::size_t i = 0; i < correspondence.size(); ++i)
    for (std::size_t j = i + 1; j < correspondence.size(); ++j) {
      if (!use.empty() && (!use[i] || !use[j])) continue;
      const std::size_t a = correspondence[i], b = correspondence[j];
      const double d1 = m1.upper[i][j], d2 = m2.upper[a][b];
      if (!(d1 > 0) || !std::isfinite(d1) || !std::isfinite(d2)) continue;
      ++out.pairs;
      out.lower = std::min(out.lower, d2 / d1);
      out.upper = std::max(out.upper, d2 / d1);
      out.lower_certified = std::min(out.lower_certified, m2.lower[a][b] / d1);
      if (m1.lower[i][j] > 0) out.upper_certified = std::max(out.upper_certified, d2 / m1.lower[i][j]);
    }
  return out;
}

/// Classes of a net quotient whose leaf lies at least `margin` inside the
/// a-box. Each class of a net window sits in one leaf.
inline std::vector<char> interior_classes(const net::NetWindow& w, const QuotientWindow& q, int margin = 1) {
  std::vector<char> use(q.num_classes(), 0);
  for (std::size_t c = 0; c < q.num_classes(); ++c) use[c] = w.box().interior(w[q.partition().classes[c][0]].a, margin);
  return use;
}

struct CoarseModelReport {
  bool leaf_preserving = true;  // (i)
  std::size_t classes = 0;
  std::size_t leaves = 0;
  bool one_class_per_leaf = true;
  // (ii) same-leaf orbit distances against ln d_0, from distortion_profile.
  symspace::DistortionProfile distortion;
  bool log_lower_envelope = true;  // every sampled ratio >= c1 > 0
  // (iii) class map [p] -> p.a on interior classes.
  int image_rank = 0;
  std::string image;  // "rank-k image" or "rank-0 image"
  BilipschitzConstants class_map;
};

struct CoarseModelOptions {
  symspace::DistanceOptions distance;
  std::size_t pairs_per_leaf = 4;  // same-leaf pairs (e, g) with d_0(e, g) > 1
  int interior_margin = 1;
};

inline CoarseModelReport coarse_model_check(const net::NetWindow& w, const PointedAction& act, const QuotientWindow& q,
                                            int target_rank, const CoarseModelOptions& opt = {}) {
  require(target_rank == w.metric().rank(), "target flat dimension differs from the model rank");
  require(act.num_points == w.size() && q.partition().class_of.size() == w.size(), "action, quotient and window differ");
  CoarseModelReport r;
  for (const auto& row : act.moves)
    for (std::size_t i = 0; i < w.size(); ++i)
      if (row[i] && w[*row[i]].a != w[i].a) r.leaf_preserving = false;
  if (!r.leaf_preserving) fail(ErrorKind::numerical, "action moved a point off its leaf");

  r.classes = q.num_classes();
  std::map<net::IntVector, std::size_t> leaf_classes;
  for (std::size_t c = 0; c < q.num_classes(); ++c) ++leaf_classes[w[q.partition().classes[c][0]].a];
  r.leaves = leaf_classes.size();
  for (const auto& [a, n] : leaf_classes) r.one_class_per_leaf = r.one_class_per_leaf && n == 1;

  // (ii) pairs (e, g) in interior leaves, longest words first.
  std::vector<symspace::LeafPair> pairs;
  const CarnotPoint id = CarnotPoint::identity(w.spec().algebra.dim());
  for (const auto& [a, n] : leaf_classes) {
    if (!w.box().interior(a, opt.interior_margin) && w.box().size() > 1) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i].a == a && carnot::d0_lower_bound(w.metric().base_metric(), id, w[i].g.point) > 1.0) members.push_back(i);
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t x, std::size_t y) { return w[x].g.length() > w[y].g.length(); });
    if (members.size() > opt.pairs_per_leaf) members.resize(opt.pairs_per_leaf);
    for (std::size_t i : members) pairs.push_back({net::to_vector(a), id, w[i].g.point});
  }
  if (!pairs.empty()) {
    r.distortion = symspace::distortion_profile(pairs, w.metric(), opt.distance);
    r.log_lower_envelope = r.distortion.c1 > 0;
  }

  // (iii)
  for (std::size_t i = 0; i < w.box().lo.size(); ++i) r.image_rank += w.box().hi[i] > w.box().lo[i] ? 1 : 0;
  r.image = "rank-" + std::to_string(r.image_rank) + " image";
  if (r.image_rank == 0) return r;
  const std::vector<char> use = interior_classes(w, q, opt.interior_margin);
  const QuotientMatrix m = quotient_matrix(q);
  for (std::size_t c1 = 0; c1 < q.num_classes(); ++c1)
    for (std::size_t c2 = c1 + 1; c2 < q.num_classes(); ++c2) {
      if (!use[c1] || !use[c2]) continue;
      const Vector a1 = net::to_vector(w[q.partition().classes[c1][0]].a);
      const Vector a2 = net::to_vector(w[q.partition().classes[c2][0]].a);
      const double flat = (a1 - a2).norm();
      if (flat == 0.0) continue;
      ++r.class_map.pairs;
      r.class_map.lower = std::min(r.class_map.lower, m.upper[c1][c2] / flat);
      r.class_map.upper = std::max(r.class_map.upper, m.upper[c1][c2] / flat);
      r.class_map.lower_certified = std::min(r.class_map.lower_certified, m.lower[c1][c2] / flat);
      r.class_map.upper_certified = std::max(r.class_map.upper_certified, m.upper[c1][c2] / flat);
    }
  return r;
}

}  // namespace coarsemodel::quotient
