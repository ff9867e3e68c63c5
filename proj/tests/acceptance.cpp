// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coarsemodel/cli/commands.hpp"
#include "coarsemodel/coarsemodel.hpp"
#include "oracles.hpp"

using namespace coarsemodel;
using carnot::CarnotPoint;
using carnot::Interval;
using symspace::HorocyclicPoint;
using symspace::Model;
using symspace::Vector;
using symspace::WarpedMetric;

namespace {

struct Check {
  bool ok = true;
  std::string first_failure;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) first_failure = what;
    ok = ok && cond;
  }
};

std::string fmt(double x) { return io::format_number(x); }

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector random_vec(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

const WarpedMetric& h3() {
  static const WarpedMetric m = WarpedMetric::model(Model::h3);
  return m;
}

const WarpedMetric& sl3() {
  static const WarpedMetric m = WarpedMetric::model(Model::sl3r);
  return m;
}

net::NetWindow h3_net(int lo, int hi, int radius, const carnot::LatticeSpec& spec = carnot::integer_lattice(2)) {
  return net::build_net(spec, h3(), net::ABox::cube(1, lo, hi), radius);
}

net::NetWindow shipped_window(Model model) {
  return cli::build_window(cli::load_experiment(cli::default_config(model)));
}

carnot::LatticeElement z2(int x, int y) { return {{}, {Vector{{double(x), double(y)}}}}; }

double max_abs(const lie::Matrix& m) { return m.cwiseAbs().maxCoeff(); }

void iwasawa(Check& c) {
  std::mt19937_64 rng(101);
  double worst_rec = 0.0, worst_orth = 0.0;
  for (lie::AlgebraTag tag : {lie::AlgebraTag::sl2r, lie::AlgebraTag::sl3r}) {
    const int n = lie::matrix_size(tag);
    const lie::Matrix id = lie::Matrix::Identity(n, n);
    for (int t = 0; t < 100; ++t) {
      const lie::GroupElement g = lie::random_special_linear(tag, rng);
      const auto f = lie::iwasawa_decompose(g);
      const lie::Matrix &k = f.k.entries(), &a = f.a.entries(), &u = f.n.entries();
      const double rec = max_abs(k * a * u - g.entries()), orth = max_abs(k.transpose() * k - id);
      worst_rec = std::max(worst_rec, rec);
      worst_orth = std::max(worst_orth, orth);
      c.expect(rec <= 1e-9, "kan reconstruction");
      c.expect(orth <= 1e-9, "k orthogonal");
      for (int i = 0; i < n; ++i) {
        c.expect(a(i, i) > 0.0, "a positive");
        c.expect(u(i, i) == 1.0, "n unipotent");
        for (int j = 0; j < n; ++j) {
          if (i != j) c.expect(a(i, j) == 0.0, "a diagonal");
          if (j < i) c.expect(u(i, j) == 0.0, "n upper triangular");
        }
      }
    }
  }
  c.detail << "200 samples, max |kan-g| " << fmt(worst_rec) << ", max |k^T k - I| " << fmt(worst_orth);
}

void killing(Check& c) {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (lie::AlgebraTag tag : {lie::AlgebraTag::sl2r, lie::AlgebraTag::sl3r}) {
    const int n = lie::matrix_size(tag);
    const auto basis = lie::standard_basis(tag);
    const auto random_element = [&] {
      lie::Matrix m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = u(rng);
      m -= (m.trace() / n) * lie::Matrix::Identity(n, n);
      return lie::AlgebraElement(tag, m);
    };
    for (int t = 0; t < 100; ++t) {
      const auto x = random_element(), y = random_element();
      // Trace-form oracle: B(X, Y) = 2n tr(XY) on sl(n).
      const double err = std::abs(lie::killing_form(x, y, basis) - 2.0 * n * (x.entries() * y.entries()).trace());
      worst = std::max(worst, err);
      c.expect(err <= 1e-9, "Killing vs trace form");
    }
  }
  lie::Matrix h(2, 2);
  h << 1, 0, 0, -1;
  const lie::AlgebraElement hh(lie::AlgebraTag::sl2r, h);
  const double bhh = lie::killing_form(hh, hh, lie::standard_basis(lie::AlgebraTag::sl2r));
  c.expect(std::abs(bhh - 8.0) <= 1e-12, "B(H,H) = 8");
  c.detail << "max |B - 2n tr| " << fmt(worst) << ", B(H,H) " << fmt(bhh);
}

void carnot_exactness(Check& c) {
  const carnot::CarnotAlgebra heis = carnot::CarnotAlgebra::heisenberg();
  const auto pt = [](double x, double y, double z) { return CarnotPoint{Vector{{x, y, z}}}; };
  // Unipotent matrix oracle exp(x E12 + y E23 + z E13).
  const auto to_matrix = [](const CarnotPoint& p) {
    lie::Matrix m = lie::Matrix::Zero(3, 3);
    m(0, 1) = p.coords(0);
    m(1, 2) = p.coords(1);
    m(0, 2) = p.coords(2);
    return lie::exp_matrix(m);
  };
  const auto from_matrix = [&](const lie::Matrix& u) {
    const lie::Matrix l = lie::log_unipotent(u);
    return pt(l(0, 1), l(1, 2), l(0, 2));
  };
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<int> q(-20, 20);
  int exact = 0;
  for (int t = 0; t < 200; ++t) {
    const CarnotPoint p = pt(q(rng), q(rng), q(rng)), s = pt(q(rng), q(rng), q(rng));
    const bool same = carnot::multiply(heis, p, s) == from_matrix(to_matrix(p) * to_matrix(s));
    exact += same ? 1 : 0;
    c.expect(same, "BCH vs matrix oracle");
  }
  std::uniform_real_distribution<double> ts(0.2, 4.0);
  double hom = 0.0, semi = 0.0, fd = 0.0;
  for (int t = 0; t < 100; ++t) {
    const CarnotPoint x{random_vec(rng, 3, 1.0)}, y{random_vec(rng, 3, 1.0)};
    const double s = ts(rng), r = ts(rng);
    const Vector lhs = carnot::dilate(heis, s, carnot::multiply(heis, x, y)).coords;
    const Vector rhs = carnot::multiply(heis, carnot::dilate(heis, s, x), carnot::dilate(heis, s, y)).coords;
    hom = std::max(hom, (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, lhs.cwiseAbs().maxCoeff()));
    const Vector sr = carnot::dilate(heis, s, carnot::dilate(heis, r, x)).coords;
    semi = std::max(semi, (sr - carnot::dilate(heis, s * r, x).coords).cwiseAbs().maxCoeff() /
                              std::max(1.0, sr.cwiseAbs().maxCoeff()));
    fd = std::max(fd, carnot::dilation_pushforward_check(heis, s, x, random_vec(rng, 3, 1.0), 1e-5));
  }
  c.expect(hom <= 1e-12, "dilation homomorphism");
  c.expect(semi <= 1e-12, "dilation semigroup");
  c.expect(fd <= 1e-4, "dilation derivative finite difference");
  c.detail << exact << "/200 exact BCH products, homomorphism " << fmt(hom) << ", semigroup " << fmt(semi)
           << ", derivative rel. error " << fmt(fd);
}

void dilation_isometry(Check& c) {
  std::mt19937_64 rng(104);
  std::uniform_int_distribution<int> q(-10, 10);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const CarnotPoint m1{Vector{{double(q(rng)), double(q(rng))}}}, m2{Vector{{double(q(rng)), double(q(rng))}}};
    const double flat = (m1.coords - m2.coords).norm();
    for (int a = -3; a <= 3; ++a) {
      const Vector av = vec({double(a)});
      const Interval d = symspace::leaf_distance_da(h3(), av, h3().F(av, m1), h3().F(av, m2));
      worst = std::max({worst, std::abs(d.upper - flat), std::abs(d.lower - flat)});
    }
  }
  c.expect(worst <= 1e-9, "H3 leaf isometry");
  double gap = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Vector a = random_vec(rng, 2, 1.5);
    const CarnotPoint x{random_vec(rng, 3, 2.0)}, y{random_vec(rng, 3, 2.0)};
    const Interval da = symspace::leaf_distance_da(sl3(), a, sl3().F(a, x), sl3().F(a, y));
    const Interval d0 = carnot::distance_d0(sl3().base_metric(), x, y);
    c.expect(da.overlaps(d0), "sl3 interval overlap");
    gap = std::max(gap, std::abs(da.upper - d0.upper) / std::max(da.upper, d0.upper));
  }
  c.expect(gap <= 0.05, "sl3 relative gap");
  c.detail << "H3 max error " << fmt(worst) << " over 700 pairs, sl3 max relative gap " << fmt(gap);
}

void flat_distances(Check& c) {
  std::mt19937_64 rng(105);
  double worst = 0.0, worst_lb = 0.0;
  for (int t = 0; t < 100; ++t) {
    const CarnotPoint n{random_vec(rng, 2, 5.0)};
    const Vector a = random_vec(rng, 1, 3.0), b = random_vec(rng, 1, 3.0);
    const double d = symspace::closed_form_distance(h3(), {a, n}, {b, n});
    worst = std::max(worst, std::abs(d - std::abs(a(0) - b(0))));
  }
  {
    const CarnotPoint n{random_vec(rng, 3, 2.0)};
    const Vector a = random_vec(rng, 2, 2.0), b = random_vec(rng, 2, 2.0);
    const Interval d = symspace::distance_GK(sl3(), {a, n}, {b, n});
    worst = std::max({worst, std::abs(d.upper - (a - b).norm()), std::abs(d.lower - (a - b).norm())});
  }
  c.expect(worst <= 1e-9, "same-n distance");
  for (Model model : {Model::h2, Model::h3, Model::sl3r}) {
    const WarpedMetric m = WarpedMetric::model(model);
    for (int t = 0; t < 200; ++t) {
      const HorocyclicPoint p{random_vec(rng, m.rank(), 3.0), {random_vec(rng, m.algebra().dim(), 10.0)}};
      const HorocyclicPoint q{random_vec(rng, m.rank(), 3.0), {random_vec(rng, m.algebra().dim(), 10.0)}};
      const double excess = (p.a - q.a).norm() - symspace::distance_GK_lower_bound(m, p, q);
      worst_lb = std::max(worst_lb, excess);
    }
  }
  c.expect(worst_lb <= 1e-9, "lower bound dominates flat distance");
  c.detail << "same-n error " << fmt(worst) << ", max (|x-y| - lower bound) " << fmt(worst_lb) << " over 600 pairs";
}

void log_distortion(Check& c) {
  double ref_c1 = 0.0, ref_c2 = 0.0, drift = 0.0, worst_ratio = 0.0;
  std::vector<symspace::DistortionProfile> profiles;
  for (int a = -3; a <= 3; ++a) {
    std::vector<symspace::LeafPair> pairs;
    for (int s : {10, 100, 1000}) {
      // Lattice points of Z^2 on leaf a; d0 between them is s.
      const auto x = net::make_net_point(h3(), {a}, z2(0, 0)), y = net::make_net_point(h3(), {a}, z2(s, 0));
      pairs.push_back({net::to_vector(x.a), x.g.point, y.g.point});
    }
    profiles.push_back(symspace::distortion_profile(pairs, h3()));
  }
  ref_c1 = profiles[3].c1;
  ref_c2 = profiles[3].c2;
  for (const auto& p : profiles) {
    for (std::size_t i = 1; i < p.rows.size(); ++i) {
      worst_ratio = std::max(worst_ratio, std::abs(p.rows[i].ratio - 2.0) / 2.0);
      // Independent oracle: arccosh(1 + s^2/2) / ln s.
      const double s = p.rows[i].d0.upper;
      c.expect(std::abs(p.rows[i].ratio - std::acosh(1.0 + 0.5 * s * s) / std::log(s)) <= 1e-9, "ratio oracle");
    }
    drift = std::max({drift, std::abs(p.c1 - ref_c1) / ref_c1, std::abs(p.c2 - ref_c2) / ref_c2});
  }
  c.expect(worst_ratio <= 0.10, "ratio near 2 for s >= 100");
  c.expect(drift <= 0.05, "envelope stable across leaves");
  c.detail << "envelope [" << fmt(ref_c1) << ", " << fmt(ref_c2) << "], leaf drift " << fmt(drift)
           << ", max |ratio/2 - 1| (s >= 100) " << fmt(worst_ratio);
}

void wobbling(Check& c) {
  const double expect = std::acosh(1.5);
  const auto prof = net::displacement_profile(h3_net(-5, 5, 3), z2(1, 0));
  c.expect(prof.leaves.size() == 11, "11 leaves");
  double worst = 0.0;
  for (const auto& leaf : prof.leaves)
    worst = std::max({worst, std::abs(leaf.displacement.upper - expect), std::abs(leaf.displacement.lower - expect)});
  c.expect(worst <= 1e-6, "generator displacement");
  const net::NetWindow w = h3_net(-2, 2, 2);
  double slack = 1e300;
  for (int s = 2; s <= 32; ++s) {
    const auto p = net::displacement_profile(w, z2(s, 0));
    slack = std::min(slack, 2.2 * std::log(double(s)) + 1.0 - p.sup_upper);
  }
  c.expect(slack >= 0.0, "sup displacement <= 2.2 ln s + 1");
  c.detail << "generator displacement " << fmt(prof.sup_upper) << " (error " << fmt(worst)
           << "), min slack of 2.2 ln s + 1 over s=2..32 " << fmt(slack);
}

void udbg(Check& c) {
  const net::NetWindow hw = shipped_window(Model::h3);
  const net::NetWindow sw = shipped_window(Model::sl3r);
  const auto h3_rescaled = carnot::rescale_lattice(carnot::integer_lattice(2), 1.5);
  const net::NetWindow hr = h3_net(-2, 2, 2, h3_rescaled.spec);
  c.expect(sw.margin().lower > 1.0, "sl3 rescaled margin > 1");
  c.expect(h3_rescaled.margin.lower > 1.0, "H3 rescaled margin > 1");
  c.expect(hw.margin().lower >= 1.0 - 1e-9, "shipped H3 margin");
  for (const net::NetWindow* w : {&hw, &sw, &hr}) {
    const auto r = net::udbg_report(*w);
    c.expect(r.min_separation && *r.min_separation >= 0.5, "min separation >= 0.5");
    c.expect(std::isfinite(r.slope), "finite slope");
    c.detail << w->metric().name() << " margin " << fmt(w->margin().lower) << " sep "
             << (r.min_separation ? fmt(*r.min_separation) : "none") << " slope " << fmt(r.slope) << "; ";
  }
}

void quotient_metric(Check& c) {
  using namespace quotient;
  std::size_t windows = 0;
  const auto axioms = [&](const QuotientWindow& q) {
    ++windows;
    c.expect(q.num_classes() <= 200, "window has <= 200 classes");
    c.expect(metric_axiom_check(q).pass(), "metric axioms");
  };
  const net::NetWindow w = h3_net(-3, 3, 3);
  const QuotientWindow qh = build_quotient(net_pair_bounds(w), net::net_action(w));
  axioms(qh);
  const net::NetWindow sw = shipped_window(Model::sl3r);
  axioms(build_quotient(net_pair_bounds(sw), net::net_action(sw)));
  std::mt19937_64 rng(109);
  for (std::size_t k : {1u, 7u, 50u, 200u}) axioms(build_quotient(oracle::random_planar(200, rng), oracle::random_block_action(200, k, rng)));

  const auto use = interior_classes(w, qh);
  double worst_excess = 0.0;
  std::size_t checked = 0;
  for (std::size_t a = 0; a < qh.num_classes(); ++a)
    for (std::size_t b = 0; b < qh.num_classes(); ++b) {
      if (a == b || !use[a] || !use[b]) continue;
      const double flat = std::abs(double(w[qh.partition().classes[a][0]].a[0] - w[qh.partition().classes[b][0]].a[0]));
      const auto d = quotient_distance(qh, a, b);
      c.expect(d.reachable, "leaves reachable");
      c.expect(d.value.lower >= flat - 1e-9 && d.value.upper <= flat + 0.5, "leaf distance in [|a-b|, |a-b|+0.5]");
      worst_excess = std::max(worst_excess, d.value.upper - flat);
      ++checked;
    }
  c.expect(checked > 0, "interior pairs");

  double chain_err = 0.0;
  for (int t = 0; t < 6; ++t) {
    const auto x = oracle::random_planar(30, rng);
    const auto act = oracle::random_block_action(30, 2 + static_cast<std::size_t>(t % 4), rng);
    const QuotientWindow q = build_quotient(x, act);
    const auto orbit = oracle::bfs_orbits(act);
    const int k = static_cast<int>(q.num_classes());
    c.expect(k <= 5, "chain oracle window small");
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        chain_err = std::max(chain_err, std::abs(quotient_distance(q, std::size_t(a), std::size_t(b)).value.upper -
                                                 oracle::chain_oracle_classes(x, orbit, a, b, k - 1)));
  }
  c.expect(chain_err <= 1e-12, "chain oracle equality");
  c.detail << windows << " windows pass axioms, " << checked << " interior leaf pairs with max excess "
           << fmt(worst_excess) << ", chain oracle error " << fmt(chain_err);
}

void folner(Check& c) {
  const coarse::Z2Window z(51);
  std::vector<std::vector<std::size_t>> sets;
  for (int n = 1; n <= 50; ++n) sets.push_back(z.ball(n));
  const auto pz = coarse::folner_profile(sets, 1, z.space());
  const auto& last = pz.rows.back();
  c.expect(last.size == 5101 && last.boundary == 204, "Z2 counts at n=50");
  c.expect(last.ratio == 204.0 / 5101.0, "Z2 ratio exact");
  const coarse::FreeGroupWindow f(8);
  sets.clear();
  for (int n = 1; n <= 7; ++n) sets.push_back(f.ball(n));
  const auto pf = coarse::folner_profile(sets, 1, f.space());
  for (std::size_t k = 0; k < pf.rows.size(); ++k) {
    const double p = std::pow(3.0, double(k + 1));
    c.expect(pf.rows[k].ratio == 4 * p / (2 * p - 1), "F2 closed form");
    if (k + 1 >= 3) c.expect(pf.rows[k].ratio >= 1.9, "F2 ratio >= 1.9");
  }
  c.detail << "Z2 n=50 ratio " << fmt(last.ratio) << " (" << last.boundary << "/" << last.size << "), F2 n=7 ratio "
           << fmt(pf.rows.back().ratio);
}

void matching(Check& c) {
  std::vector<Eigen::VectorXd> a, b;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      a.push_back(Eigen::Vector2d(i, j));
      b.push_back(Eigen::Vector2d(i + 0.3, j + 0.4));
    }
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = coarse::bounded_displacement_matching(a, b, 1.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(m.perfect, "perfect");
  c.expect(coarse::verify_matching(m, b.size(), [&](std::size_t i, std::size_t j) { return (a[i] - b[j]).norm(); }, 1.0),
           "verified bijection within R");
  c.expect(m.max_displacement <= 1.0, "max displacement <= 1");
  c.expect(secs < 10.0, "runtime < 10 s");
  c.detail << "10000 points, max displacement " << fmt(m.max_displacement) << ", " << fmt(secs) << " s";
}

void bilipschitz(Check& c) {
  using namespace quotient;
  const net::NetWindow w = h3_net(-3, 3, 3);
  const QuotientWindow q = build_quotient(net_pair_bounds(w), net::net_action(w));
  const auto use = interior_classes(w, q);
  std::vector<std::size_t> id(q.num_classes());
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;

  const auto twice = carnot::rescale_lattice(carnot::integer_lattice(2), 2.0);
  const net::NetWindow w2 = h3_net(-3, 3, 3, twice.spec);
  const QuotientWindow q2 = build_quotient(net_pair_bounds(w2), net::net_action(w2));
  const auto vs_twice = quotient_bilip_compare(q, q2, id, use);

  std::vector<std::vector<double>> line(q.num_classes(), std::vector<double>(q.num_classes()));
  for (std::size_t i = 0; i < line.size(); ++i)
    for (std::size_t j = 0; j < line.size(); ++j) line[i][j] = std::abs(double(i) - double(j));
  const QuotientWindow ql =
      build_quotient(coarse::FiniteMetricSpace::from_matrix(line), coarse::PointedAction::trivial(line.size()));
  const auto vs_line = quotient_bilip_compare(q, ql, id, use);

  for (const auto* b : {&vs_twice, &vs_line}) {
    c.expect(b->pairs > 0, "interior pairs compared");
    c.expect(b->lower >= 0.4 && b->upper <= 2.5, "constants in [0.4, 2.5]");
  }
  c.detail << "Z2 vs (2Z)^2 [" << fmt(vs_twice.lower) << ", " << fmt(vs_twice.upper) << "], net vs integer line ["
           << fmt(vs_line.lower) << ", " << fmt(vs_line.upper) << "]";
}

void determinism(Check& c) {
  std::size_t files = 0;
  for (Model model : {Model::h3, Model::sl3r}) {
    for (std::string_view verb : cli::kVerbs) {
      if (model == Model::sl3r && (verb == "udbg" || verb == "folner" || verb == "match")) continue;
      const io::Json cfg = cli::merge_config(io::Json(), std::string(symspace::to_string(model)), 7);
      const auto first = cli::run_command(verb, cfg), second = cli::run_command(verb, cfg);
      c.expect(first.files == second.files, std::string(verb) + " artefacts differ");
      for (const auto& [name, text] : first.files) files += name.ends_with(".csv") ? 1 : 0;
    }
  }
  c.detail << files << " CSV files byte-identical across two runs";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {"iwasawa-reconstruction", iwasawa},  {"killing-oracle", killing},
      {"carnot-exactness", carnot_exactness}, {"dilation-isometry", dilation_isometry},
      {"flat-distances", flat_distances},   {"log-distortion", log_distortion},
      {"wobbling", wobbling},               {"udbg", udbg},
      {"quotient-metric", quotient_metric}, {"folner-counts", folner},
      {"matching", matching},               {"bilipschitz-invariance", bilipschitz},
      {"determinism", determinism},
  };
  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += c.ok ? 0 : 1;
    std::printf("%s %2zu %s: %s%s [%.2fs]\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].name, c.detail.str().c_str(),
                c.ok ? "" : (" (first failure: " + c.first_failure + ")").c_str(), secs);
    std::fflush(stdout);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d/%zu criteria passed in %.1fs\n", static_cast<int>(criteria.size()) - failed, criteria.size(), total);
  return failed;
}
