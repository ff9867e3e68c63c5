#pragma once

// Restricted roots of the split forms sl(n, R) relative to the diagonal
// Cartan subspace a. Roots are found numerically: ad of a regular element
// of a is diagonalised (it is self-adjoint for B_theta), eigenspaces with
// non-zero eigenvalue are the root spaces, and each root is read off as its
// values on the Cartan basis.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "coarsemodel/lie/algebra.hpp"

namespace coarsemodel::lie {

struct Root {
  Vector values;         // alpha(H_k) for the Cartan basis H_k
  std::vector<Matrix> space;  // basis of g_alpha
  Vector simple_coeffs;  // expansion in simple roots (positive roots only)
  int height = 0;        // sum of simple_coeffs (0 for negative roots)
};

struct RootDatum {
  AlgebraTag tag;
  std::vector<Matrix> cartan_basis;
  std::vector<Root> roots;                 // every non-zero restricted root
  std::vector<std::size_t> positive;       // Pi^+, ordered by (height, simple coefficients descending)
  std::vector<std::size_t> simple;         // Phi, ordered as in `positive`
  std::vector<std::vector<std::size_t>> grading;  // grading[i - 1] = Pi_i, roots of height i

  std::size_t rank() const { return cartan_basis.size(); }
  std::size_t step() const { return grading.size(); }

  std::optional<std::size_t> find(const Vector& values, double tol = 1e-8) const {
    for (std::size_t r = 0; r < roots.size(); ++r)
      if ((roots[r].values - values).cwiseAbs().maxCoeff() <= tol) return r;
    return std::nullopt;
  }
};

namespace detail {

inline Matrix canonical_root_vector(Matrix m) {
  Eigen::Index i = 0, j = 0;
  m.cwiseAbs().maxCoeff(&i, &j);
  m /= m(i, j);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (std::abs(m(r, c)) < 1e-13) m(r, c) = 0.0;
  return m;
}

}  // namespace detail

inline RootDatum restricted_roots(AlgebraTag tag) {
  const int n = matrix_size(tag);
  const std::vector<AlgebraElement> basis = standard_basis(tag);
  const LinearBasis coords(basis);

  RootDatum datum{tag, {}, {}, {}, {}, {}};
  for (int k = 0; k + 1 < n; ++k) datum.cartan_basis.push_back(unit_matrix(n, k, k) - unit_matrix(n, k + 1, k + 1));

  // Regular element: strictly decreasing diagonal with incommensurate gaps,
  // so every root takes a distinct non-zero value and positivity is alpha(H0) > 0.
  Vector diag(n);
  diag(0) = 0.0;
  for (int i = 1; i < n; ++i) diag(i) = diag(i - 1) - (1.0 + 0.31 * i);
  diag.array() -= diag.mean();
  const AlgebraElement h0(tag, Matrix(diag.asDiagonal()));

  // ad_{H0} is self-adjoint for B_theta; symmetrise with the Cholesky factor of the Gram matrix.
  const Matrix gram = gram_matrix(basis);
  const Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) fail(ErrorKind::numerical, "B_theta Gram matrix is not positive definite");
  const Matrix lower = llt.matrixL();
  const Matrix ad = ad_matrix(h0, basis, coords);
  const Matrix upper_inv = lower.transpose().inverse();
  Matrix sym = lower.transpose() * ad * upper_inv;
  sym = 0.5 * (sym + sym.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector lambda = eig.eigenvalues();
  const Matrix vecs = upper_inv * eig.eigenvectors();

  const auto to_matrix = [&](const Vector& c) {
    Matrix m = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < basis.size(); ++j) m += c(static_cast<Eigen::Index>(j)) * basis[j].entries();
    return m;
  };

  const double group_tol = 1e-8;
  Eigen::Index i = 0;
  while (i < lambda.size()) {
    Eigen::Index j = i + 1;
    while (j < lambda.size() && std::abs(lambda(j) - lambda(i)) <= group_tol) ++j;
    if (std::abs(lambda(i)) > group_tol) {
      Root root;
      for (Eigen::Index c = i; c < j; ++c) {
        Matrix m = to_matrix(vecs.col(c));
        root.space.push_back(j - i == 1 ? detail::canonical_root_vector(m) : Matrix(m / m.norm()));
      }
      const Matrix& v = root.space.front();
      root.values.resize(static_cast<Eigen::Index>(datum.cartan_basis.size()));
      for (std::size_t k = 0; k < datum.cartan_basis.size(); ++k) {
        const Matrix& h = datum.cartan_basis[k];
        const Matrix adv = h * v - v * h;
        root.values(static_cast<Eigen::Index>(k)) = (adv.array() * v.array()).sum() / v.squaredNorm();
      }
      datum.roots.push_back(std::move(root));
    }
    i = j;
  }

  const auto value_at_h0 = [&](const Root& r) {
    double s = 0.0;
    // H0 = sum_k c_k H_k with c_k the partial sums of diag.
    double partial = 0.0;
    for (int k = 0; k + 1 < n; ++k) {
      partial += diag(k);
      s += partial * r.values(k);
    }
    return s;
  };

  std::vector<std::size_t> pos;
  for (std::size_t r = 0; r < datum.roots.size(); ++r)
    if (value_at_h0(datum.roots[r]) > 0) pos.push_back(r);

  // Simple roots: positive roots that are not a sum of two positive roots.
  std::vector<std::size_t> simple;
  for (std::size_t r : pos) {
    bool decomposable = false;
    for (std::size_t p : pos)
      for (std::size_t q : pos)
        if ((datum.roots[p].values + datum.roots[q].values - datum.roots[r].values).cwiseAbs().maxCoeff() < 1e-8)
          decomposable = true;
    if (!decomposable) simple.push_back(r);
  }

  Matrix simple_values(static_cast<Eigen::Index>(datum.cartan_basis.size()), static_cast<Eigen::Index>(simple.size()));
  for (std::size_t s = 0; s < simple.size(); ++s) simple_values.col(static_cast<Eigen::Index>(s)) = datum.roots[simple[s]].values;
  const auto simple_qr = simple_values.colPivHouseholderQr();
  for (std::size_t r : pos) {
    Vector c = simple_qr.solve(datum.roots[r].values);
    c = c.array().round();
    datum.roots[r].simple_coeffs = c;
    datum.roots[r].height = static_cast<int>(c.sum());
  }

  std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    const Root& ra = datum.roots[a];
    const Root& rb = datum.roots[b];
    if (ra.height != rb.height) return ra.height < rb.height;
    for (Eigen::Index k = 0; k < ra.simple_coeffs.size(); ++k)
      if (ra.simple_coeffs(k) != rb.simple_coeffs(k)) return ra.simple_coeffs(k) > rb.simple_coeffs(k);
    return a < b;
  });
  datum.positive = pos;
  for (std::size_t r : pos)
    if (datum.roots[r].height == 1) datum.simple.push_back(r);

  int max_height = 0;
  for (std::size_t r : pos) max_height = std::max(max_height, datum.roots[r].height);
  datum.grading.assign(static_cast<std::size_t>(max_height), {});
  for (std::size_t r : pos) datum.grading[static_cast<std::size_t>(datum.roots[r].height - 1)].push_back(r);
  return datum;
}

/// Largest residual |ad_H v - alpha(H) v| over root vectors and Cartan basis elements.
inline double root_space_residual(const RootDatum& d) {
  double worst = 0.0;
  for (const Root& r : d.roots)
    for (const Matrix& v : r.space)
      for (std::size_t k = 0; k < d.cartan_basis.size(); ++k) {
        const Matrix& h = d.cartan_basis[k];
        worst = std::max(worst, (h * v - v * h - r.values(static_cast<Eigen::Index>(k)) * v).cwiseAbs().maxCoeff());
      }
  return worst;
}

/// Largest distance of [g_alpha, g_beta] from g_{alpha + beta} over pairs of
/// positive roots (from zero when alpha + beta is not a root).
inline double grading_residual(const RootDatum& d) {
  double worst = 0.0;
  for (std::size_t a : d.positive)
    for (std::size_t b : d.positive) {
      const auto target = d.find(d.roots[a].values + d.roots[b].values);
      std::optional<LinearBasis> span;
      if (target) span.emplace(d.roots[*target].space);
      for (const Matrix& x : d.roots[a].space)
        for (const Matrix& y : d.roots[b].space) {
          const Matrix br = x * y - y * x;
          worst = std::max(worst, span ? span->residual(br) : br.norm());
        }
    }
  return worst;
}

/// True when iterated brackets of the simple root spaces span n = sum of positive root spaces.
inline bool simple_roots_generate(const RootDatum& d) {
  std::vector<Matrix> span;
  for (std::size_t s : d.simple)
    for (const Matrix& m : d.roots[s].space) span.push_back(m);
  std::vector<Matrix> layer = span;
  std::size_t target = 0;
  for (std::size_t p : d.positive) target += d.roots[p].space.size();
  const auto rank_of = [](const std::vector<Matrix>& ms) {
    Matrix stacked(ms.front().size(), static_cast<Eigen::Index>(ms.size()));
    for (std::size_t j = 0; j < ms.size(); ++j) stacked.col(static_cast<Eigen::Index>(j)) = ms[j].reshaped();
    auto qr = stacked.colPivHouseholderQr();
    qr.setThreshold(1e-10);
    return static_cast<std::size_t>(qr.rank());
  };
  for (std::size_t depth = 0; depth < d.step(); ++depth) {
    std::vector<Matrix> next;
    for (const Matrix& x : layer)
      for (std::size_t s : d.simple)
        for (const Matrix& y : d.roots[s].space) {
          const Matrix br = y * x - x * y;
          if (br.norm() > 1e-12) next.push_back(br);
        }
    span.insert(span.end(), next.begin(), next.end());
    layer = std::move(next);
    if (layer.empty()) break;
  }
  return rank_of(span) == target;
}

}  // namespace coarsemodel::lie
