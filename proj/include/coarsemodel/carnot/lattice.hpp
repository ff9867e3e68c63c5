#pragma once

// Finitely generated lattices in Carnot groups: word balls by breadth-first
// search, coordinate-hash lookup of elements, and lattice rescaling by a
// dilation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "coarsemodel/carnot/algebra.hpp"
#include "coarsemodel/carnot/metric.hpp"

namespace coarsemodel::carnot {

/// Letters are +(i+1) for generator i and -(i+1) for its inverse.
using Word = std::vector<int>;

inline std::string word_to_string(const Word& w) {
  if (w.empty()) return "e";
  std::string s;
  for (int letter : w) {
    const int idx = std::abs(letter) - 1;
    const char base = letter > 0 ? 'a' : 'A';
    if (idx < 26) {
      s += static_cast<char>(base + idx);
    } else {
      s += (letter > 0 ? "g" : "G") + std::to_string(idx);
    }
  }
  return s;
}

inline Word inverse_word(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (int& letter : out) letter = -letter;
  return out;
}

struct LatticeSpec {
  std::string description;
  CarnotAlgebra algebra;
  std::vector<CarnotPoint> generators;

  /// Symmetric generating set: g_0, g_0^{-1}, g_1, g_1^{-1}, ...
  std::vector<std::pair<int, CarnotPoint>> letters() const {
    std::vector<std::pair<int, CarnotPoint>> out;
    for (std::size_t i = 0; i < generators.size(); ++i) {
      out.emplace_back(static_cast<int>(i) + 1, generators[i]);
      out.emplace_back(-(static_cast<int>(i) + 1), inverse(generators[i]));
    }
    return out;
  }

  CarnotPoint evaluate(const Word& w) const {
    CarnotPoint p = CarnotPoint::identity(algebra.dim());
    for (int letter : w) {
      const CarnotPoint& gen = generators.at(static_cast<std::size_t>(std::abs(letter) - 1));
      p = multiply(algebra, p, letter > 0 ? gen : inverse(gen));
    }
    return p;
  }
};

/// Z^n inside the abelian group R^n.
inline LatticeSpec integer_lattice(int n) {
  LatticeSpec spec{"Z^" + std::to_string(n), CarnotAlgebra::abelian(n), {}};
  for (int i = 0; i < n; ++i) spec.generators.push_back({Vector::Unit(n, i)});
  return spec;
}

/// Integer Heisenberg group generated by exp(e_1) and exp(e_2).
inline LatticeSpec integer_heisenberg() {
  const CarnotAlgebra h = CarnotAlgebra::heisenberg();
  return {"integer heisenberg", h, {{Vector::Unit(3, 0)}, {Vector::Unit(3, 1)}}};
}

struct LatticeElement {
  Word word;  // a shortest word found by the enumeration
  CarnotPoint point;

  int length() const { return static_cast<int>(word.size()); }
};

/// Hash index from coordinates to ids, with cells of width `eps`.
class CoordinateIndex {
 public:
  explicit CoordinateIndex(double eps = 1e-6) : eps_(eps) {}

  double eps() const { return eps_; }

  std::optional<std::size_t> find(const Vector& v) const {
    const auto it = cells_.find(key_of(v));
    if (it != cells_.end()) {
      for (const auto& [coords, id] : it->second)
        if ((coords - v).cwiseAbs().maxCoeff() < eps_) return id;
    }
    return std::nullopt;
  }

  /// Inserts v; returns the existing id when v is already present. Throws if a
  /// stored point lies within eps of v in a neighbouring cell (ambiguous key).
  std::size_t insert(const Vector& v, std::size_t id) {
    const Key key = key_of(v);
    if (const auto hit = find(v)) return *hit;
    if (near_in_neighbour(v, key))
      fail(ErrorKind::numerical, "coordinate hash collision: distinct keys within the dedup tolerance");
    cells_[key].emplace_back(v, id);
    return id;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [k, v] : cells_) n += v.size();
    return n;
  }

 private:
  using Key = std::vector<std::int64_t>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (std::int64_t x : k) {
        h ^= static_cast<std::uint64_t>(x);
        h *= 1099511628211ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };

  Key key_of(const Vector& v) const {
    Key k(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) k[static_cast<std::size_t>(i)] = std::llround(v(i) / eps_);
    return k;
  }

  bool near_in_neighbour(const Vector& v, const Key& key) const {
    const std::size_t d = key.size();
    std::size_t combos = 1;
    for (std::size_t i = 0; i < d; ++i) combos *= 3;
    Key probe = key;
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t rest = c;
      for (std::size_t i = 0; i < d; ++i) {
        probe[i] = key[i] + static_cast<std::int64_t>(rest % 3) - 1;
        rest /= 3;
      }
      if (probe == key) continue;
      const auto it = cells_.find(probe);
      if (it == cells_.end()) continue;
      for (const auto& [coords, id] : it->second)
        if ((coords - v).cwiseAbs().maxCoeff() < eps_) return true;
    }
    return false;
  }

  double eps_;
  std::unordered_map<Key, std::vector<std::pair<Vector, std::size_t>>, KeyHash> cells_;
};

/// Word ball of radius r, in breadth-first order (so word lengths are
/// non-decreasing and each stored word is a shortest one).
inline std::vector<LatticeElement> lattice_ball(const LatticeSpec& spec, int radius, double dedup_eps = 1e-6) {
  require(radius >= 0, "ball radius must be non-negative");
  std::vector<LatticeElement> ball{{{}, CarnotPoint::identity(spec.algebra.dim())}};
  CoordinateIndex index(dedup_eps);
  index.insert(ball.front().point.coords, 0);
  const auto letters = spec.letters();
  std::size_t frontier_begin = 0;
  for (int r = 1; r <= radius; ++r) {
    const std::size_t frontier_end = ball.size();
    for (std::size_t i = frontier_begin; i < frontier_end; ++i) {
      for (const auto& [letter, gen] : letters) {
        CarnotPoint next = multiply(spec.algebra, ball[i].point, gen);
        const std::size_t id = ball.size();
        if (index.insert(next.coords, id) == id) {
          Word w = ball[i].word;
          w.push_back(letter);
          ball.push_back({std::move(w), std::move(next)});
        }
      }
    }
    frontier_begin = frontier_end;
  }
  return ball;
}

/// Minimum pairwise d_0 over a finite set, as an interval. Lower bounds are
/// computed for every pair; optimised upper bounds only for pairs whose lower
/// bound could still beat the best upper bound found.
inline Interval separation_margin(const std::vector<CarnotPoint>& points, const LeftInvariantMetric& metric,
                                  const PathOptimizerOptions& opt = {}) {
  if (points.size() < 2) return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), true};
  const CarnotAlgebra& g = metric.algebra();
  // Distinct differences p^{-1} q, canonically ordered.
  CoordinateIndex seen(1e-9);
  std::vector<std::pair<double, Vector>> candidates;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const bool swap = detail::lex_less(points[j].coords, points[i].coords);
      const CarnotPoint& a = swap ? points[j] : points[i];
      const CarnotPoint& b = swap ? points[i] : points[j];
      Vector w = multiply(g, inverse(a), b).coords;
      const std::size_t id = candidates.size();
      if (seen.insert(w, id) != id) continue;
      candidates.emplace_back(d0_lower_bound_from_identity(metric, w), std::move(w));
    }
  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return detail::lex_less(x.second, y.second);
  });
  Interval margin{candidates.front().first, std::numeric_limits<double>::infinity(), true};
  for (const auto& [lower, w] : candidates) {
    if (lower >= margin.upper) break;
    const Interval d = distance_from_identity(metric, w, opt);
    if (d.upper < margin.upper) {
      margin.upper = d.upper;
      margin.converged = d.converged;
    }
  }
  return margin;
}

struct RescaledLattice {
  LatticeSpec spec;
  Interval margin;  // minimum pairwise d_0 on the radius-3 word ball
};

/// Applies the dilation delta_s to the generators. As delta_s is an
/// automorphism the image generates delta_s(Delta).
inline RescaledLattice rescale_lattice(const LatticeSpec& spec, double s, const LeftInvariantMetric& metric,
                                       int window_radius = 3, const PathOptimizerOptions& opt = {}) {
  if (!(s > 0)) fail(ErrorKind::invalid_argument, "rescale factor must be positive");
  LatticeSpec out = spec;
  for (CarnotPoint& g : out.generators) g = dilate(spec.algebra, s, g);
  if (s != 1.0) out.description = spec.description + " dilated by " + std::to_string(s);
  std::vector<CarnotPoint> window;
  for (const auto& e : lattice_ball(out, window_radius)) window.push_back(e.point);
  return {out, separation_margin(window, metric, opt)};
}

inline RescaledLattice rescale_lattice(const LatticeSpec& spec, double s) {
  return rescale_lattice(spec, s, LeftInvariantMetric::euclidean(spec.algebra));
}

}  // namespace coarsemodel::carnot
