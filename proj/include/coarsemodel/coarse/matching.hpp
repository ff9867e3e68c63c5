#pragma once

// Bounded-displacement bijections between two finite point sets: maximum
// bipartite matching (Hopcroft-Karp) on the graph of pairs within distance R.
// When no perfect matching exists a Hall-violating set is returned.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "coarsemodel/error.hpp"

namespace coarsemodel::coarse {

struct MatchingResult {
  bool perfect = false;
  std::vector<std::size_t> match_a;  // match_a[i] = partner of A_i in B, or npos
  double max_displacement = 0.0;     // over matched pairs
  std::size_t matched = 0;
  // Hall witness when not perfect: |neighbours(witness)| < |witness|.
  std::vector<std::size_t> witness;
  std::vector<std::size_t> witness_neighbours;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
};

/// adjacency[i] lists B-indices adjacent to A_i, nearest first.
inline MatchingResult hopcroft_karp(const std::vector<std::vector<std::size_t>>& adjacency, std::size_t nb) {
  const std::size_t na = adjacency.size();
  constexpr std::size_t npos = MatchingResult::npos;
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> ma(na, npos), mb(nb, npos), dist(na, inf);

  const auto bfs = [&]() {
    std::queue<std::size_t> q;
    bool found = false;
    for (std::size_t a = 0; a < na; ++a) {
      dist[a] = ma[a] == npos ? 0 : inf;
      if (ma[a] == npos) q.push(a);
    }
    while (!q.empty()) {
      const std::size_t a = q.front();
      q.pop();
      for (std::size_t b : adjacency[a]) {
        const std::size_t a2 = mb[b];
        if (a2 == npos) {
          found = true;
        } else if (dist[a2] == inf) {
          dist[a2] = dist[a] + 1;
          q.push(a2);
        }
      }
    }
    return found;
  };

  // Iterative DFS along the layered graph.
  std::vector<std::size_t> it(na, 0);
  const auto dfs = [&](std::size_t root) {
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      if (it[a] == adjacency[a].size()) {
        dist[a] = inf;
        stack.pop_back();
        continue;
      }
      const std::size_t b = adjacency[a][it[a]];
      const std::size_t a2 = mb[b];
      if (a2 == npos) {
        // Augment along the stack.
        for (std::size_t ak : stack) {
          const std::size_t bk = adjacency[ak][it[ak]];
          ma[ak] = bk;
          mb[bk] = ak;
        }
        return true;
      }
      if (dist[a2] == dist[a] + 1) {
        stack.push_back(a2);
      } else {
        ++it[a];
      }
    }
    return false;
  };

  while (bfs()) {
    std::fill(it.begin(), it.end(), 0);
    for (std::size_t a = 0; a < na; ++a)
      if (ma[a] == npos) dfs(a);
  }

  MatchingResult out;
  out.match_a = ma;
  out.matched = static_cast<std::size_t>(std::count_if(ma.begin(), ma.end(), [](std::size_t b) { return b != npos; }));
  out.perfect = out.matched == na && na == nb;
  if (!out.perfect && out.matched < na) {
    // Konig: A-vertices reachable from unmatched A by alternating paths.
    std::vector<char> seen_a(na, 0), seen_b(nb, 0);
    std::queue<std::size_t> q;
    for (std::size_t a = 0; a < na; ++a)
      if (ma[a] == npos) {
        seen_a[a] = 1;
        q.push(a);
      }
    while (!q.empty()) {
      const std::size_t a = q.front();
      q.pop();
      for (std::size_t b : adjacency[a]) {
        if (seen_b[b]) continue;
        seen_b[b] = 1;
        const std::size_t a2 = mb[b];
        if (a2 != npos && !seen_a[a2]) {
          seen_a[a2] = 1;
          q.push(a2);
        }
      }
    }
    for (std::size_t a = 0; a < na; ++a)
      if (seen_a[a]) out.witness.push_back(a);
    for (std::size_t b = 0; b < nb; ++b)
      if (seen_b[b]) out.witness_neighbours.push_back(b);
  }
  return out;
}

/// Nearest-first adjacency for a generic cross distance, O(|A| |B|).
inline std::vector<std::vector<std::size_t>> threshold_graph(std::size_t na, std::size_t nb,
                                                             const std::function<double(std::size_t, std::size_t)>& d,
                                                             double r) {
  std::vector<std::vector<std::size_t>> adj(na);
  for (std::size_t a = 0; a < na; ++a) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t b = 0; b < nb; ++b) {
      const double dab = d(a, b);
      if (dab <= r) cand.emplace_back(dab, b);
    }
    std::sort(cand.begin(), cand.end());
    for (const auto& [dab, b] : cand) adj[a].push_back(b);
  }
  return adj;
}

/// Nearest-first adjacency for Euclidean points, using a grid of cell size r.
inline std::vector<std::vector<std::size_t>> threshold_graph(const std::vector<Eigen::VectorXd>& a,
                                                             const std::vector<Eigen::VectorXd>& b, double r) {
  require(r >= 0, "matching radius must be non-negative");
  if (a.empty() || b.empty()) return std::vector<std::vector<std::size_t>>(a.size());
  const Eigen::Index dim = a.front().size();
  for (const auto& p : a) require(p.size() == dim, "points have mixed dimensions");
  for (const auto& p : b) require(p.size() == dim, "points have mixed dimensions");
  if (r == 0.0 || dim > 3) {
    return threshold_graph(a.size(), b.size(), [&](std::size_t i, std::size_t j) { return (a[i] - b[j]).norm(); }, r);
  }
  const double cell = r;
  const auto key = [&](const Eigen::VectorXd& p) {
    std::int64_t k = 0;
    for (Eigen::Index i = 0; i < dim; ++i) k = k * 2000003 + static_cast<std::int64_t>(std::floor(p(i) / cell));
    return k;
  };
  std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
  for (std::size_t j = 0; j < b.size(); ++j) grid[key(b[j])].push_back(j);
  std::vector<std::vector<std::size_t>> adj(a.size());
  const int combos = static_cast<int>(std::pow(3, dim));
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (int c = 0; c < combos; ++c) {
      Eigen::VectorXd probe = a[i];
      int rest = c;
      for (Eigen::Index k = 0; k < dim; ++k) {
        probe(k) += cell * ((rest % 3) - 1);
        rest /= 3;
      }
      const auto it = grid.find(key(probe));
      if (it == grid.end()) continue;
      for (std::size_t j : it->second) {
        const double d = (a[i] - b[j]).norm();
        if (d <= r) cand.emplace_back(d, j);
      }
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (const auto& [d, j] : cand) adj[i].push_back(j);
  }
  return adj;
}

inline MatchingResult finish_matching(MatchingResult m, const std::function<double(std::size_t, std::size_t)>& d) {
  for (std::size_t i = 0; i < m.match_a.size(); ++i)
    if (m.match_a[i] != MatchingResult::npos) m.max_displacement = std::max(m.max_displacement, d(i, m.match_a[i]));
  return m;
}

/// Perfect matching of A onto B moving each point by at most r, or a Hall
/// witness.
inline MatchingResult bounded_displacement_matching(const std::vector<Eigen::VectorXd>& a,
                                                    const std::vector<Eigen::VectorXd>& b, double r) {
  if (a.size() != b.size()) fail(ErrorKind::invalid_argument, "matching needs windows of equal size");
  return finish_matching(hopcroft_karp(threshold_graph(a, b, r), b.size()),
                         [&](std::size_t i, std::size_t j) { return (a[i] - b[j]).norm(); });
}

inline MatchingResult bounded_displacement_matching(std::size_t na, std::size_t nb,
                                                    const std::function<double(std::size_t, std::size_t)>& d,
                                                    double r) {
  if (na != nb) fail(ErrorKind::invalid_argument, "matching needs windows of equal size");
  return finish_matching(hopcroft_karp(threshold_graph(na, nb, d, r), nb), d);
}

/// Independent check: a bijection with every pair within r.
inline bool verify_matching(const MatchingResult& m, std::size_t nb,
                            const std::function<double(std::size_t, std::size_t)>& d, double r) {
  if (m.match_a.size() != nb) return false;
  std::vector<char> used(nb, 0);
  for (std::size_t i = 0; i < m.match_a.size(); ++i) {
    const std::size_t j = m.match_a[i];
    if (j == MatchingResult::npos || j >= nb || used[j]) return false;
    used[j] = 1;
    if (d(i, j) > r) return false;
  }
  return true;
}

}  // namespace coarsemodel::coarse
