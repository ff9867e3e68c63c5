#pragma once

// Brute-force oracles shared by the quotient tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "coarsemodel/quotient/quotient.hpp"

namespace coarsemodel::oracle {

using coarse::FiniteMetricSpace;
using coarse::Move;
using coarse::PointedAction;
using quotient::kInf;

// Points split into `groups` random blocks; the generator walks a path
// through each block, so there are exactly `groups` orbits.
inline PointedAction random_block_action(std::size_t n, std::size_t groups, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  PointedAction a{{"g", "G"}, {1, 0}, {std::vector<Move>(n), std::vector<Move>(n)}, n};
  for (std::size_t i = 0; i + groups < n; ++i) {
    a.moves[0][perm[i]] = perm[i + groups];
    a.moves[1][perm[i + groups]] = perm[i];
  }
  return a;
}

inline FiniteMetricSpace random_planar(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 5);
  std::vector<std::pair<double, double>> p;
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(u(rng), u(rng));
  return {n, [p](std::size_t i, std::size_t j) {
            return std::hypot(p[i].first - p[j].first, p[i].second - p[j].second);
          }};
}

// Orbits by breadth-first search, independent of the union-find.
inline std::vector<int> bfs_orbits(const PointedAction& a) {
  std::vector<int> label(a.num_points, -1);
  int next = 0;
  for (std::size_t s = 0; s < a.num_points; ++s) {
    if (label[s] >= 0) continue;
    std::vector<std::size_t> q{s};
    label[s] = next;
    while (!q.empty()) {
      const std::size_t x = q.back();
      q.pop_back();
      for (const auto& row : a.moves) {
        if (row[x] && label[*row[x]] < 0) {
          label[*row[x]] = next;
          q.push_back(*row[x]);
        }
      }
      // Inverse direction as well.
      for (const auto& row : a.moves)
        for (std::size_t y = 0; y < a.num_points; ++y)
          if (row[y] && *row[y] == x && label[y] < 0) {
            label[y] = next;
            q.push_back(y);
          }
    }
    ++next;
  }
  return label;
}

// Minimum chain cost with at most `max_steps` steps, enumerating orbit
// sequences; each step's cost is minimised independently over point pairs.
inline double chain_oracle_classes(const FiniteMetricSpace& x, const std::vector<int>& orbit, int from, int to, int max_steps) {
  const int k = *std::max_element(orbit.begin(), orbit.end()) + 1;
  std::vector<std::vector<double>> step(k, std::vector<double>(k, kInf));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) step[orbit[i]][orbit[j]] = std::min(step[orbit[i]][orbit[j]], x(i, j));
  double best = kInf;
  const std::function<void(int, int, double)> go = [&](int cur, int left, double cost) {
    if (cur == to) best = std::min(best, cost);
    if (left == 0) return;
    for (int c = 0; c < k; ++c) go(c, left - 1, cost + step[cur][c]);
  };
  go(from, max_steps, 0.0);
  return best;
}

}  // namespace coarsemodel::oracle
