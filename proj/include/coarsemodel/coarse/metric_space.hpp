#pragma once

// Finite metric windows, r-boundaries and Folner profiles, plus the two
// standard test windows: Z^2 with the l1 word metric and the Cayley ball of
// the free group F_2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coarsemodel/error.hpp"

namespace coarsemodel::coarse {

enum class Validation { automatic, exhaustive, sampled, none };

/// n points with a distance given by a callable. Construction checks
/// d(x, x) = 0, d >= 0, finiteness and symmetry: exhaustively for n <= 500,
/// on a seeded sample of pairs beyond that.
class FiniteMetricSpace {
 public:
  using DistanceFn = std::function<double(std::size_t, std::size_t)>;

  static constexpr std::size_t kExhaustiveLimit = 500;
  static constexpr std::size_t kSamplePairs = 20000;

  FiniteMetricSpace(std::size_t n, DistanceFn dist, Validation mode = Validation::automatic, std::uint64_t seed = 0)
      : n_(n), dist_(std::move(dist)) {
    require(static_cast<bool>(dist_), "distance function is empty");
    if (mode == Validation::automatic) mode = n_ <= kExhaustiveLimit ? Validation::exhaustive : Validation::sampled;
    if (mode == Validation::exhaustive) {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i; j < n_; ++j) check_pair(i, j);
    } else if (mode == Validation::sampled && n_ > 0) {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
      for (std::size_t i = 0; i < std::min<std::size_t>(n_, kSamplePairs); ++i) check_pair(i, i);
      for (std::size_t s = 0; s < kSamplePairs; ++s) check_pair(pick(rng), pick(rng));
    }
  }

  static FiniteMetricSpace from_matrix(std::vector<std::vector<double>> d) {
    const std::size_t n = d.size();
    for (const auto& row : d) require(row.size() == n, "distance matrix must be square");
    auto shared = std::make_shared<std::vector<std::vector<double>>>(std::move(d));
    return {n, [shared](std::size_t i, std::size_t j) { return (*shared)[i][j]; }, Validation::exhaustive};
  }

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return dist_(i, j); }
  double dist(std::size_t i, std::size_t j) const { return dist_(i, j); }

 private:
  void check_pair(std::size_t i, std::size_t j) const {
    const double dij = dist_(i, j);
    if (!std::isfinite(dij)) fail(ErrorKind::invalid_argument, "distance is not finite");
    if (dij < 0) fail(ErrorKind::invalid_argument, "distance is negative");
    if (i == j) {
      if (dij != 0.0) fail(ErrorKind::invalid_argument, "d(x, x) must be zero");
      return;
    }
    const double dji = dist_(j, i);
    if (std::abs(dij - dji) > 1e-12 * std::max(1.0, std::abs(dij)))
      fail(ErrorKind::invalid_argument, "distance is not symmetric");
  }

  std::size_t n_;
  DistanceFn dist_;
};

/// {x in X \ F : d(x, y) <= r for some y in F}, sorted.
inline std::vector<std::size_t> r_boundary(const std::vector<std::size_t>& f, double r, const FiniteMetricSpace& x) {
  std::vector<char> in_f(x.size(), 0);
  for (std::size_t i : f) {
    require(i < x.size(), "subset index outside the space");
    in_f[i] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (in_f[i]) continue;
    for (std::size_t j : f)
      if (x(i, j) <= r) {
        out.push_back(i);
        break;
      }
  }
  return out;
}

struct FolnerRow {
  std::size_t n = 0;  // position of the set in the sequence (or its radius)
  std::size_t size = 0;
  std::size_t boundary = 0;
  double ratio = 0.0;
};

struct FolnerProfile {
  std::vector<FolnerRow> rows;
  std::string verdict;  // heuristic label only
};

/// Ratios |d_r F_k| / |F_k| on a nested sequence, labelled
/// "amenable-consistent" when strictly decreasing and ending below 0.1,
/// "nonamenable-consistent" when at least 0.5 over the last half, and
/// "inconclusive" otherwise.
inline FolnerProfile folner_profile(const std::vector<std::vector<std::size_t>>& sets, double r,
                                    const FiniteMetricSpace& x, const std::vector<std::size_t>& labels = {}) {
  require(!sets.empty(), "folner_profile needs at least one set");
  require(labels.empty() || labels.size() == sets.size(), "one label per set");
  FolnerProfile out;
  std::vector<std::size_t> prev;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    std::vector<std::size_t> cur = sets[k];
    require(!cur.empty(), "Folner sets must be non-empty");
    std::sort(cur.begin(), cur.end());
    require(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()), "Folner sets must be nested");
    const std::size_t b = r_boundary(cur, r, x).size();
    out.rows.push_back({labels.empty() ? k + 1 : labels[k], cur.size(), b,
                        static_cast<double>(b) / static_cast<double>(cur.size())});
    prev = std::move(cur);
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < out.rows.size(); ++k) decreasing = decreasing && out.rows[k].ratio < out.rows[k - 1].ratio;
  double tail_min = out.rows.back().ratio;
  for (std::size_t k = out.rows.size() / 2; k < out.rows.size(); ++k) tail_min = std::min(tail_min, out.rows[k].ratio);
  if (decreasing && out.rows.back().ratio < 0.1) {
    out.verdict = "amenable-consistent";
  } else if (tail_min >= 0.5) {
    out.verdict = "nonamenable-consistent";
  } else {
    out.verdict = "inconclusive";
  }
  return out;
}

/// Z^2 points with l1 norm <= radius, in order of norm then lexicographic.
struct Z2Window {
  std::vector<std::pair<int, int>> points;

  explicit Z2Window(int radius) {
    require(radius >= 0, "radius must be non-negative");
    for (int n = 0; n <= radius; ++n)
      for (int x = -n; x <= n; ++x) {
        const int rest = n - std::abs(x);
        points.emplace_back(x, -rest);
        if (rest != 0) points.emplace_back(x, rest);
      }
  }

  int norm(std::size_t i) const { return std::abs(points[i].first) + std::abs(points[i].second); }

  FiniteMetricSpace space() const {
    const auto pts = std::make_shared<const std::vector<std::pair<int, int>>>(points);
    return {points.size(), [pts](std::size_t i, std::size_t j) {
              return static_cast<double>(std::abs((*pts)[i].first - (*pts)[j].first) +
                                         std::abs((*pts)[i].second - (*pts)[j].second));
            }};
  }

  /// Indices of the l1 ball of radius n (a prefix of `points`).
  std::vector<std::size_t> ball(int n) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (norm(i) <= n) out.push_back(i);
    return out;
  }
};

/// Reduced words of length <= radius in F_2 = <a, b>, letters 0..3 standing
/// for a, A, b, B. The word metric is |x| + |y| - 2 |common prefix|.
struct FreeGroupWindow {
  std::vector<std::vector<int>> words;

  static int inverse_letter(int l) { return l ^ 1; }

  explicit FreeGroupWindow(int radius) {
    require(radius >= 0, "radius must be non-negative");
    words.push_back({});
    std::size_t begin = 0;
    for (int len = 1; len <= radius; ++len) {
      const std::size_t end = words.size();
      for (std::size_t i = begin; i < end; ++i)
        for (int l = 0; l < 4; ++l) {
          if (!words[i].empty() && words[i].back() == inverse_letter(l)) continue;
          std::vector<int> w = words[i];
          w.push_back(l);
          words.push_back(std::move(w));
        }
      begin = end;
    }
  }

  static double word_distance(const std::vector<int>& x, const std::vector<int>& y) {
    std::size_t p = 0;
    while (p < x.size() && p < y.size() && x[p] == y[p]) ++p;
    return static_cast<double>(x.size() + y.size() - 2 * p);
  }

  FiniteMetricSpace space() const {
    const auto w = std::make_shared<const std::vector<std::vector<int>>>(words);
    return {words.size(), [w](std::size_t i, std::size_t j) { return word_distance((*w)[i], (*w)[j]); }};
  }

  std::vector<std::size_t> ball(int n) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < words.size(); ++i)
      if (static_cast<int>(words[i].size()) <= n) out.push_back(i);
    return out;
  }
};

}  // namespace coarsemodel::coarse
