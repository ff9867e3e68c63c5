#pragma once

// Iwasawa factorisation g = k a n of SL(n, R) and the matrix exponential /
// unipotent logarithm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "coarsemodel/lie/algebra.hpp"

namespace coarsemodel::lie {

struct IwasawaFactors {
  GroupElement k;  // SO(n)
  GroupElement a;  // positive diagonal
  GroupElement n;  // unit upper triangular
};

inline double condition_number(const Matrix& m) {
  const Eigen::JacobiSVD<Matrix> svd(m);
  const Vector s = svd.singularValues();
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

/// QR with the diagonal of R made positive; k = Q, a = diag(R), n = a^{-1} R.
inline IwasawaFactors iwasawa_decompose(const GroupElement& g, const Tolerances& tol = {}) {
  const Matrix& m = g.entries();
  if (condition_number(m) > tol.condition) fail(ErrorKind::numerical, "Iwasawa: input is numerically singular");
  const Eigen::Index dim = m.rows();
  const Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (r(i, i) < 0) {
      r.row(i) *= -1.0;
      q.col(i) *= -1.0;
    }
  }
  Matrix a = Matrix::Zero(dim, dim);
  Matrix n = Matrix::Identity(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    a(i, i) = r(i, i);
    for (Eigen::Index j = i + 1; j < dim; ++j) n(i, j) = r(i, j) / r(i, i);
  }
  // det q = det g / prod a_ii > 0, so q lies in SO(n).
  const Tolerances loose{1e-8, tol.condition};
  return {GroupElement(g.tag(), q, loose), GroupElement(g.tag(), a, loose), GroupElement(g.tag(), n, loose)};
}

inline bool is_strictly_upper(const Matrix& x, double tol = 0.0) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      if (std::abs(x(i, j)) > tol) return false;
  return true;
}

/// Matrix exponential. Nilpotent (strictly upper triangular) input uses the
/// finite series; everything else uses scaling and squaring with Taylor.
inline Matrix exp_matrix(const Matrix& x) {
  const Eigen::Index dim = x.rows();
  const Matrix id = Matrix::Identity(dim, dim);
  if (is_strictly_upper(x)) {
    Matrix sum = id, term = id;
    for (Eigen::Index k = 1; k < dim; ++k) {
      term = term * x / static_cast<double>(k);
      sum += term;
    }
    return sum;
  }
  const double norm = x.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = x / std::ldexp(1.0, squarings);
  Matrix sum = id, term = id;
  for (int k = 1; k <= 20; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

inline GroupElement exp_matrix(const AlgebraElement& x) { return {x.tag(), exp_matrix(x.entries())}; }

/// Logarithm of a unit upper triangular matrix via the terminating series
/// sum_{k >= 1} (-1)^{k+1} N^k / k with N = u - I.
inline Matrix log_unipotent(const Matrix& u, double tol = 1e-12) {
  const Eigen::Index dim = u.rows();
  const Matrix nil = u - Matrix::Identity(dim, dim);
  if (!is_strictly_upper(nil, tol)) fail(ErrorKind::invalid_argument, "log_unipotent: input is not unit upper triangular");
  Matrix strict = nil.triangularView<Eigen::StrictlyUpper>();
  Matrix sum = Matrix::Zero(dim, dim), power = strict;
  for (Eigen::Index k = 1; k < dim; ++k) {
    sum += ((k % 2 == 1) ? 1.0 : -1.0) / static_cast<double>(k) * power;
    power = power * strict;
  }
  return sum;
}

inline AlgebraElement log_unipotent(const GroupElement& u) { return {u.tag(), log_unipotent(u.entries())}; }

/// Entries uniform in [-2, 2], rescaled to determinant 1 (sign fixed by
/// flipping the first row). Near-singular draws are rejected.
inline GroupElement random_special_linear(AlgebraTag tag, std::mt19937_64& rng) {
  const int n = matrix_size(tag);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix m(n, n);
  double det = 0.0;
  do {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = u(rng);
    det = m.determinant();
  } while (std::abs(det) < 1e-3);
  if (det < 0) m.row(0) *= -1.0;
  return {tag, m / std::pow(std::abs(det), 1.0 / n)};
}

/// Worst-case defects of the factorisation over a sample.
struct IwasawaResiduals {
  std::size_t samples = 0;
  double reconstruction = 0.0;  // max |kan - g|_inf
  double orthogonality = 0.0;   // max |k^T k - I|_inf
  double min_a = std::numeric_limits<double>::infinity();
  double off_diagonal_a = 0.0;
  double n_defect = 0.0;        // max deviation of n from unit upper triangular
};

inline IwasawaResiduals iwasawa_residuals(AlgebraTag tag, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  IwasawaResiduals r;
  r.samples = samples;
  const int n = matrix_size(tag);
  for (std::size_t s = 0; s < samples; ++s) {
    const GroupElement g = random_special_linear(tag, rng);
    const IwasawaFactors f = iwasawa_decompose(g);
    const Matrix& k = f.k.entries();
    const Matrix& a = f.a.entries();
    const Matrix& u = f.n.entries();
    r.reconstruction = std::max(r.reconstruction, (k * a * u - g.entries()).cwiseAbs().maxCoeff());
    r.orthogonality = std::max(r.orthogonality, (k.transpose() * k - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
      r.min_a = std::min(r.min_a, a(i, i));
      for (int j = 0; j < n; ++j) {
        if (i != j) r.off_diagonal_a = std::max(r.off_diagonal_a, std::abs(a(i, j)));
        const double want = i == j ? 1.0 : 0.0;
        if (i >= j) r.n_defect = std::max(r.n_defect, std::abs(u(i, j) - want));
      }
    }
  }
  return r;
}

}  // namespace coarsemodel::lie
