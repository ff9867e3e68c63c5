#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "coarsemodel/coarse/action.hpp"
#include "coarsemodel/coarse/matching.hpp"
#include "coarsemodel/coarse/metric_space.hpp"

using namespace coarsemodel;
using namespace coarsemodel::coarse;

namespace {

// Integer points on a line with metric scale * |x - y|.
FiniteMetricSpace line_space(const std::vector<int>& xs, double scale = 1.0) {
  return {xs.size(), [xs, scale](std::size_t i, std::size_t j) { return scale * std::abs(xs[i] - xs[j]); }};
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int x = lo; x <= hi; ++x) v.push_back(x);
  return v;
}

// Shift by `step` on the window xs (one generator and its inverse).
PointedAction shift_action(const std::vector<int>& xs, int step) {
  PointedAction act{{"t", "T"}, {1, 0}, {}, xs.size()};
  act.moves.assign(2, std::vector<Move>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (xs[j] == xs[i] + step) act.moves[0][i] = j;
      if (xs[j] == xs[i] - step) act.moves[1][i] = j;
    }
  return act;
}

bool same_action(const PointedAction& x, const PointedAction& y) {
  return x.num_points == y.num_points && x.inverse_of == y.inverse_of && x.moves == y.moves;
}

}  // namespace

TEST(FiniteMetricSpace, Validation) {
  EXPECT_THROW(FiniteMetricSpace::from_matrix({{0, -1}, {-1, 0}}), Error);
  EXPECT_THROW(FiniteMetricSpace::from_matrix({{0, 1}, {2, 0}}), Error);
  EXPECT_THROW(FiniteMetricSpace::from_matrix({{1, 1}, {1, 0}}), Error);
  EXPECT_NO_THROW(FiniteMetricSpace::from_matrix({{0, 1}, {1, 0}}));
  // Beyond the exhaustive limit a seeded sample still catches a global defect.
  EXPECT_THROW(FiniteMetricSpace(600, [](std::size_t i, std::size_t j) { return i < j ? 1.0 : (i == j ? 0.0 : 2.0); }),
               Error);
}

TEST(RBoundary, Examples) {
  const Z2Window z2(8);
  const auto x = z2.space();
  EXPECT_TRUE(r_boundary(z2.ball(8), 1, x).empty());
  for (int n = 0; n <= 7; ++n) EXPECT_EQ(r_boundary(z2.ball(n), 1, x).size(), static_cast<std::size_t>(4 * (n + 1)));

  const FreeGroupWindow f2(6);
  const auto y = f2.space();
  EXPECT_EQ(f2.words.size(), 2u * 729u - 1u);
  for (int n = 0; n <= 5; ++n)
    EXPECT_EQ(r_boundary(f2.ball(n), 1, y).size(), static_cast<std::size_t>(4 * std::pow(3, n)));
}

TEST(RBoundary, Monotone) {
  const Z2Window z2(6);
  const auto x = z2.space();
  std::mt19937_64 rng(7);
  std::bernoulli_distribution coin(0.2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> small, big;
    for (std::size_t i = 0; i < z2.points.size(); ++i) {
      const bool in_small = coin(rng);
      if (in_small) small.push_back(i);
      if (in_small || coin(rng)) big.push_back(i);
    }
    // Monotone in r.
    const auto b1 = r_boundary(small, 1, x), b2 = r_boundary(small, 2, x);
    EXPECT_TRUE(std::includes(b2.begin(), b2.end(), b1.begin(), b1.end()));
    // F ⊆ F' gives F ∪ d_r F ⊆ F' ∪ d_r F'.
    std::set<std::size_t> hull_small(small.begin(), small.end()), hull_big(big.begin(), big.end());
    hull_small.insert(b1.begin(), b1.end());
    const auto bb = r_boundary(big, 1, x);
    hull_big.insert(bb.begin(), bb.end());
    EXPECT_TRUE(std::includes(hull_big.begin(), hull_big.end(), hull_small.begin(), hull_small.end()));
  }
}

TEST(Folner, Z2ExactCounts) {
  const Z2Window z2(51);
  const auto x = z2.space();
  std::vector<std::vector<std::size_t>> sets;
  std::vector<std::size_t> labels;
  for (int n = 1; n <= 50; ++n) {
    sets.push_back(z2.ball(n));
    labels.push_back(static_cast<std::size_t>(n));
  }
  const FolnerProfile prof = folner_profile(sets, 1, x, labels);
  for (const auto& row : prof.rows) {
    const double n = static_cast<double>(row.n);
    EXPECT_EQ(row.size, static_cast<std::size_t>(2 * n * n + 2 * n + 1));
    EXPECT_EQ(row.boundary, static_cast<std::size_t>(4 * (n + 1)));
  }
  for (std::size_t k = 2; k < prof.rows.size(); ++k) EXPECT_LT(prof.rows[k].ratio, prof.rows[k - 1].ratio);
  EXPECT_DOUBLE_EQ(prof.rows.back().ratio, 204.0 / 5101.0);
  EXPECT_NEAR(prof.rows.back().ratio, 0.039992, 1e-6);
  EXPECT_EQ(prof.verdict, "amenable-consistent");

  const FolnerProfile single = folner_profile({{0}}, 1, x);
  EXPECT_DOUBLE_EQ(single.rows.front().ratio, 4.0);
}

TEST(Folner, FreeGroupExactCounts) {
  const FreeGroupWindow f2(8);
  const auto y = f2.space();
  std::vector<std::vector<std::size_t>> sets;
  for (int n = 1; n <= 7; ++n) sets.push_back(f2.ball(n));
  const FolnerProfile prof = folner_profile(sets, 1, y);
  for (std::size_t k = 0; k < prof.rows.size(); ++k) {
    const double p = std::pow(3.0, static_cast<double>(k + 1));
    EXPECT_DOUBLE_EQ(prof.rows[k].ratio, 4 * p / (2 * p - 1));
    if (k + 1 >= 3) EXPECT_GE(prof.rows[k].ratio, 1.9);
  }
  EXPECT_EQ(prof.verdict, "nonamenable-consistent");
}

TEST(Folner, RejectsNonNested) {
  const Z2Window z2(3);
  EXPECT_THROW(folner_profile({{0, 1}, {0, 2}}, 1, z2.space()), Error);
}

TEST(Action, ValidateRejectsNonInjective) {
  PointedAction act{{"t", "T"}, {1, 0}, {{Move{1}, Move{1}}, {Move{}, Move{}}}, 2};
  EXPECT_THROW(act.validate(), Error);
  EXPECT_NO_THROW(shift_action(range(-3, 3), 1).validate());
}

TEST(Transport, IdentityAndDoubling) {
  const auto xs = range(-10, 10);
  const PointedAction shift = shift_action(xs, 1);
  std::vector<std::size_t> id(xs.size());
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;

  const auto x = line_space(xs);
  EXPECT_TRUE(same_action(transport_action(id, shift), shift));

  // Y = 2Z, F(x) = 2x keeps the indexing.
  const auto y = line_space(xs, 2.0);
  const TransportedAction t = transport_action(id, shift, x, y);
  EXPECT_DOUBLE_EQ(t.lip.lower, 2.0);
  EXPECT_DOUBLE_EQ(t.lip.upper, 2.0);
  ASSERT_EQ(t.displacement_x.size(), 2u);
  EXPECT_DOUBLE_EQ(t.displacement_x[0], 1.0);
  EXPECT_DOUBLE_EQ(t.displacement_y[0], 2.0);
  EXPECT_TRUE(t.bound_holds);
}

TEST(Transport, RoundTripAndFreeness) {
  const auto xs = range(-10, 10);
  const PointedAction shift = shift_action(xs, 3);
  std::vector<std::size_t> perm(xs.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  const auto there = transport_action(perm, shift);
  EXPECT_NO_THROW(there.validate());
  const auto back = transport_action(invert_bijection(perm, xs.size()), there);
  EXPECT_TRUE(same_action(back, shift));
  EXPECT_EQ(fixed_points(there), fixed_points(shift));
  EXPECT_EQ(fixed_points(there), 0u);

  std::vector<std::size_t> bad(xs.size(), 0);
  EXPECT_THROW(transport_action(bad, shift), Error);
}

TEST(Compose, ShiftByTwoOnZ2) {
  // G = Z acts on Z^2 = {(x, y)} by the first coordinate; H = 2Z acts on the
  // G-window by +2. Representatives are the points with x = 0.
  const auto gs = range(-5, 5);
  std::vector<std::pair<int, int>> pts;
  OrbitChart chart{{}, {}, gs.size()};
  for (int y = -3; y <= 3; ++y)
    for (std::size_t g = 0; g < gs.size(); ++g) {
      pts.emplace_back(gs[g], y);
      chart.rep_of.push_back(static_cast<std::size_t>(y + 3));
      chart.group_of.push_back(g);
    }
  const ComposedAction c = compose_translation_like(shift_action(gs, 2), chart);
  EXPECT_NO_THROW(c.action.validate());
  // Two columns fall off each side of the window per generator.
  EXPECT_EQ(c.partial, 2u * 2u * 7u);
  EXPECT_EQ(fixed_points(c.action), 0u);
  const auto x = FiniteMetricSpace(pts.size(), [&](std::size_t i, std::size_t j) {
    return static_cast<double>(std::abs(pts[i].first - pts[j].first) + std::abs(pts[i].second - pts[j].second));
  });
  const auto disp = displacement(c.action, x);
  EXPECT_DOUBLE_EQ(disp[0], 2.0);
  EXPECT_DOUBLE_EQ(disp[1], 2.0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (const Move m = c.action.moves[0][i]) {
      EXPECT_EQ(pts[*m].first, pts[i].first + 2);
      EXPECT_EQ(pts[*m].second, pts[i].second);
    }

  OrbitChart dup = chart;
  dup.group_of[1] = dup.group_of[0];
  EXPECT_THROW(compose_translation_like(shift_action(gs, 2), dup), Error);
}

TEST(Induce, IdentityAndTwoZ) {
  // X = Z x {0, 1}, 50 points; G = Z acting by shifts of the first factor.
  const auto gs = range(-12, 12);
  OrbitChart chart{{}, {}, gs.size()};
  std::vector<std::pair<int, int>> pts;
  for (int s = 0; s < 2; ++s)
    for (std::size_t g = 0; g < gs.size(); ++g) {
      pts.emplace_back(gs[g], s);
      chart.rep_of.push_back(static_cast<std::size_t>(s));
      chart.group_of.push_back(g);
    }
  ASSERT_EQ(pts.size(), 50u);
  const auto x = FiniteMetricSpace(pts.size(), [&](std::size_t i, std::size_t j) {
    return static_cast<double>(std::abs(pts[i].first - pts[j].first) + std::abs(pts[i].second - pts[j].second));
  });
  std::vector<std::size_t> id(gs.size());
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;

  const PointedAction g_on_g = shift_action(gs, 1);
  const ComposedAction original = compose_translation_like(g_on_g, chart);
  const ComposedAction same = induce_action_from_group_equivalence(id, g_on_g, chart);
  EXPECT_TRUE(same_action(same.action, original.action));

  // H = 2Z indexed by k <-> 2k, F(2k) = k. Right multiplication by the
  // generator 2 is the shift on H's window.
  std::vector<int> hs;
  for (int g : gs) hs.push_back(2 * g);
  const PointedAction h_right = shift_action(hs, 2);
  const ComposedAction induced = induce_action_from_group_equivalence(id, h_right, chart);
  EXPECT_NO_THROW(induced.action.validate());
  EXPECT_EQ(fixed_points(induced.action), 0u);
  const auto disp_h = displacement(h_right, line_space(hs));
  const auto disp_x = displacement(induced.action, x);
  EXPECT_LE(disp_x[0], 2.0 * displacement(original.action, x)[0]);
  EXPECT_LE(disp_x[0], disp_h[0]);

  // Orbit partition: classes of the induced moves are exactly the G-orbits.
  std::vector<std::size_t> parent(pts.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  const std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (const auto& row : induced.action.moves)
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i]) parent[find(i)] = find(*row[i]);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      EXPECT_EQ(find(i) == find(j), chart.rep_of[i] == chart.rep_of[j]);
}

TEST(Matching, IdentityAtZero) {
  std::vector<Eigen::VectorXd> a;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) a.push_back(Eigen::Vector2d(i, j));
  const MatchingResult m = bounded_displacement_matching(a, a, 0.0);
  ASSERT_TRUE(m.perfect);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(m.match_a[i], i);
  EXPECT_EQ(m.max_displacement, 0.0);
}

TEST(Matching, OffsetGrid) {
  std::vector<Eigen::VectorXd> a, b;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      a.push_back(Eigen::Vector2d(i, j));
      b.push_back(Eigen::Vector2d(i + 0.3, j + 0.4));
    }
  const auto t0 = std::chrono::steady_clock::now();
  const MatchingResult m = bounded_displacement_matching(a, b, 1.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
  ASSERT_TRUE(m.perfect);
  EXPECT_LE(m.max_displacement, 1.0);
  EXPECT_TRUE(verify_matching(m, b.size(), [&](std::size_t i, std::size_t j) { return (a[i] - b[j]).norm(); }, 1.0));
  // Nearest-first gives the translation itself.
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(m.match_a[i], i);
}

TEST(Matching, NeedsAugmentingPaths) {
  // A chain where the greedy nearest choice must be undone.
  std::vector<Eigen::VectorXd> a, b;
  for (int i = 0; i < 30; ++i) {
    a.push_back(Eigen::Vector2d(i, 0));
    b.push_back(Eigen::Vector2d(i + 0.6, 0));
  }
  b.back() = Eigen::Vector2d(-0.6, 0);
  const MatchingResult m = bounded_displacement_matching(a, b, 0.6);
  ASSERT_TRUE(m.perfect);
  EXPECT_TRUE(verify_matching(m, b.size(), [&](std::size_t i, std::size_t j) { return (a[i] - b[j]).norm(); }, 0.6));
}

TEST(Matching, HallWitness) {
  const std::vector<Eigen::VectorXd> a{Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 0)};
  const std::vector<Eigen::VectorXd> b{Eigen::Vector2d(0, 0.1), Eigen::Vector2d(0, -0.1)};
  const MatchingResult m = bounded_displacement_matching(a, b, 1.0);
  EXPECT_FALSE(m.perfect);
  EXPECT_EQ(m.matched, 1u);
  EXPECT_LT(m.witness_neighbours.size(), m.witness.size());
  // Every neighbour of the witness lies in the reported neighbourhood.
  for (std::size_t i : m.witness)
    for (std::size_t j = 0; j < b.size(); ++j)
      if ((a[i] - b[j]).norm() <= 1.0)
        EXPECT_TRUE(std::find(m.witness_neighbours.begin(), m.witness_neighbours.end(), j) != m.witness_neighbours.end());

  EXPECT_THROW(bounded_displacement_matching(a, {b.front()}, 1.0), Error);
}

TEST(Matching, RandomAgreesWithBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 6;
    std::vector<Eigen::VectorXd> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(Eigen::Vector2d(u(rng), u(rng)));
      b.push_back(Eigen::Vector2d(u(rng), u(rng)));
    }
    const double r = 1.5;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    bool exists = false;
    do {
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) ok = (a[i] - b[perm[i]]).norm() <= r;
      exists = exists || ok;
    } while (!exists && std::next_permutation(perm.begin(), perm.end()));
    const MatchingResult m = bounded_displacement_matching(a, b, r);
    EXPECT_EQ(m.perfect, exists);
    if (!m.perfect) EXPECT_LT(m.witness_neighbours.size(), m.witness.size());
  }
}
