#pragma once

// Partial group actions on finite windows, stored as index tables, and the
// three constructions that move translation-like actions around: transport
// along a bijection, composition through an orbit chart, and induction along
// a bijection of acting groups.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coarsemodel/coarse/metric_space.hpp"
#include "coarsemodel/error.hpp"

namespace coarsemodel::coarse {

using Move = std::optional<std::size_t>;

/// Generators come with their inverses; moves[g][x] is g.x when it stays in
/// the window.
struct PointedAction {
  std::vector<std::string> generators;
  std::vector<std::size_t> inverse_of;
  std::vector<std::vector<Move>> moves;
  std::size_t num_points = 0;

  std::size_t num_generators() const { return generators.size(); }
  Move move(std::size_t g, std::size_t x) const { return moves[g][x]; }

  /// Injective per generator, and g^{-1}.(g.x) = x wherever both are defined.
  void validate() const {
    require(inverse_of.size() == generators.size() && moves.size() == generators.size(),
            "action tables have inconsistent sizes");
    for (std::size_t g = 0; g < generators.size(); ++g) {
      require(inverse_of[g] < generators.size() && inverse_of[inverse_of[g]] == g, "inverse table is not an involution");
      require(moves[g].size() == num_points, "move table has the wrong length");
      std::vector<char> hit(num_points, 0);
      for (std::size_t x = 0; x < num_points; ++x) {
        const Move y = moves[g][x];
        if (!y) continue;
        require(*y < num_points, "move leaves the index range");
        if (hit[*y]) fail(ErrorKind::invalid_argument, "generator " + generators[g] + " is not injective");
        hit[*y] = 1;
        const Move back = moves[inverse_of[g]][*y];
        if (back && *back != x) fail(ErrorKind::invalid_argument, "generator and inverse do not compose to the identity");
      }
    }
  }

  static PointedAction trivial(std::size_t n) { return {{}, {}, {}, n}; }
};

/// Displacement sup_x d(x, g.x) per generator over defined moves.
inline std::vector<double> displacement(const PointedAction& act, const FiniteMetricSpace& x) {
  require(act.num_points == x.size(), "action and space have different sizes");
  std::vector<double> out(act.num_generators(), 0.0);
  for (std::size_t g = 0; g < act.num_generators(); ++g)
    for (std::size_t i = 0; i < act.num_points; ++i)
      if (const Move y = act.moves[g][i]) out[g] = std::max(out[g], x(i, *y));
  return out;
}

/// Number of (generator, point) pairs with g.x = x.
inline std::size_t fixed_points(const PointedAction& act) {
  std::size_t n = 0;
  for (const auto& row : act.moves)
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] && *row[i] == i) ++n;
  return n;
}

inline std::vector<std::size_t> invert_bijection(const std::vector<std::size_t>& f, std::size_t target_size) {
  require(f.size() == target_size, "map is not a bijection on the windows (size mismatch)");
  std::vector<std::size_t> inv(target_size, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] >= target_size || inv[f[i]] != std::numeric_limits<std::size_t>::max())
      fail(ErrorKind::invalid_argument, "map is not a bijection on the windows");
    inv[f[i]] = i;
  }
  return inv;
}

struct LipschitzConstants {
  double lower = 0.0;  // min d_Y(Fx, Fx') / d_X(x, x')
  double upper = 0.0;  // max of the same ratio
};

/// Exhaustive over pairs of distinct points.
inline LipschitzConstants measure_bilipschitz(const std::vector<std::size_t>& f, const FiniteMetricSpace& x,
                                              const FiniteMetricSpace& y) {
  require(f.size() == x.size(), "map must be defined on every point");
  LipschitzConstants c{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x(i, j);
      if (dx == 0.0) continue;
      const double r = y(f[i], f[j]) / dx;
      c.lower = std::min(c.lower, r);
      c.upper = std::max(c.upper, r);
    }
  if (c.upper == 0.0) c.lower = 0.0;
  return c;
}

struct TransportedAction {
  PointedAction action;
  LipschitzConstants lip;
  std::vector<double> displacement_x;
  std::vector<double> displacement_y;
  bool bound_holds = true;  // displacement_y <= lip.upper * displacement_x per generator
};

/// g.y = F(g.F^{-1}(y)).
inline PointedAction transport_action(const std::vector<std::size_t>& f, const PointedAction& act) {
  const std::vector<std::size_t> inv = invert_bijection(f, act.num_points);
  PointedAction out{act.generators, act.inverse_of, {}, act.num_points};
  out.moves.assign(act.num_generators(), std::vector<Move>(act.num_points));
  for (std::size_t g = 0; g < act.num_generators(); ++g)
    for (std::size_t y = 0; y < act.num_points; ++y)
      if (const Move m = act.moves[g][inv[y]]) out.moves[g][y] = f[*m];
  return out;
}

/// Transport with the displacement bound checked on the window. When `lip` is
/// not supplied it is measured exhaustively.
inline TransportedAction transport_action(const std::vector<std::size_t>& f, const PointedAction& act,
                                          const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                                          std::optional<LipschitzConstants> lip = std::nullopt) {
  TransportedAction out{transport_action(f, act), lip ? *lip : measure_bilipschitz(f, x, y), {}, {}, true};
  out.displacement_x = displacement(act, x);
  out.displacement_y = displacement(out.action, y);
  for (std::size_t g = 0; g < act.num_generators(); ++g)
    out.bound_holds = out.bound_holds &&
                      out.displacement_y[g] <= out.lip.upper * out.displacement_x[g] * (1.0 + 1e-12) + 1e-12;
  return out;
}

/// Orbit decomposition of a G-window: point x = rep(x) . g(x), with g(x) an
/// index into a window of G.
struct OrbitChart {
  std::vector<std::size_t> rep_of;
  std::vector<std::size_t> group_of;
  std::size_t group_size = 0;

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> index() const {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> out;
    for (std::size_t x = 0; x < rep_of.size(); ++x) {
      require(group_of[x] < group_size, "orbit chart group index out of range");
      if (!out.emplace(std::pair{rep_of[x], group_of[x]}, x).second)
        fail(ErrorKind::invalid_argument, "orbit decomposition is not unique on the window");
    }
    return out;
  }
};

/// H acts on the G-window (indices 0..group_size-1); h.(rep . g) = rep . (h.g).
/// Moves leaving either window are left undefined; `partial` counts them.
struct ComposedAction {
  PointedAction action;
  std::size_t partial = 0;
};

inline ComposedAction compose_translation_like(const PointedAction& h_on_g, const OrbitChart& chart) {
  require(h_on_g.num_points == chart.group_size, "H-action must act on the G-window of the chart");
  require(chart.rep_of.size() == chart.group_of.size(), "orbit chart tables differ in length");
  const auto idx = chart.index();
  const std::size_t n = chart.rep_of.size();
  ComposedAction out{{h_on_g.generators, h_on_g.inverse_of, {}, n}, 0};
  out.action.moves.assign(h_on_g.num_generators(), std::vector<Move>(n));
  for (std::size_t h = 0; h < h_on_g.num_generators(); ++h)
    for (std::size_t x = 0; x < n; ++x) {
      const Move g = h_on_g.moves[h][chart.group_of[x]];
      const auto it = g ? idx.find({chart.rep_of[x], *g}) : idx.end();
      if (it == idx.end()) {
        ++out.partial;
        continue;
      }
      out.action.moves[h][x] = it->second;
    }
  return out;
}

/// F: H-window -> G-window a bijection of indices, `right_mult` the right
/// multiplication of H on its own window. The induced action is
/// h.(rep . g) = rep . F(F^{-1}(g) h).
inline ComposedAction induce_action_from_group_equivalence(const std::vector<std::size_t>& f,
                                                           const PointedAction& right_mult, const OrbitChart& chart) {
  return compose_translation_like(transport_action(f, right_mult), chart);
}

}  // namespace coarsemodel::coarse
