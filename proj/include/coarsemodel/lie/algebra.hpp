#pragma once

// Matrix Lie algebra primitives for the split real forms sl(n, R).
//
// Conventions: sl(n, R) is realised as traceless n x n real matrices, the
// Cartan involution is X -> -X^T, and the standard basis is ordered
// {H_1, ..., H_{n-1}, E_ij (i < j, row-major), E_ij (i > j, row-major)} with
// H_k = E_kk - E_{k+1,k+1}.

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coarsemodel/error.hpp"

namespace coarsemodel::lie {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Tolerances {
  double entry = 1e-9;      // absolute, on matrix entries
  double condition = 1e12;  // reject inputs worse conditioned than this
};

enum class AlgebraTag { sl2r, sl3r };

inline std::string_view to_string(AlgebraTag tag) {
  switch (tag) {
    case AlgebraTag::sl2r: return "sl2r";
    case AlgebraTag::sl3r: return "sl3r";
  }
  return "?";
}

inline AlgebraTag parse_algebra_tag(std::string_view s) {
  if (s == "sl2r") return AlgebraTag::sl2r;
  if (s == "sl3r") return AlgebraTag::sl3r;
  fail(ErrorKind::invalid_argument, "unsupported algebra tag '" + std::string(s) + "' (supported: sl2r, sl3r)");
}

inline int matrix_size(AlgebraTag tag) { return tag == AlgebraTag::sl2r ? 2 : 3; }

inline Matrix unit_matrix(int n, int i, int j) {
  Matrix m = Matrix::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

/// Element of sl(n, R). Construction checks the shape and that the trace is
/// within tolerance, then removes the residual trace exactly.
class AlgebraElement {
 public:
  AlgebraElement(AlgebraTag tag, Matrix entries, const Tolerances& tol = {}) : tag_(tag), entries_(std::move(entries)) {
    const int n = matrix_size(tag_);
    require(entries_.rows() == n && entries_.cols() == n,
            "algebra element for " + std::string(to_string(tag_)) + " must be " + std::to_string(n) + "x" +
                std::to_string(n));
    const double tr = entries_.trace();
    require(std::abs(tr) <= tol.entry * std::max(1.0, entries_.cwiseAbs().maxCoeff()),
            "sl(n,R) element must be traceless");
    entries_.diagonal().array() -= tr / n;
  }

  static AlgebraElement zero(AlgebraTag tag) {
    const int n = matrix_size(tag);
    return AlgebraElement(tag, Matrix::Zero(n, n));
  }

  AlgebraTag tag() const { return tag_; }
  const Matrix& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.rows()); }

  AlgebraElement operator+(const AlgebraElement& o) const { return {tag_, entries_ + o.entries_}; }
  AlgebraElement operator-(const AlgebraElement& o) const { return {tag_, entries_ - o.entries_}; }
  AlgebraElement operator*(double s) const { return {tag_, entries_ * s}; }

 private:
  AlgebraTag tag_;
  Matrix entries_;
};

/// Element of SL(n, R); det = 1 within tolerance.
class GroupElement {
 public:
  GroupElement(AlgebraTag tag, Matrix entries, const Tolerances& tol = {}) : tag_(tag), entries_(std::move(entries)) {
    const int n = matrix_size(tag_);
    require(entries_.rows() == n && entries_.cols() == n, "group element has wrong shape");
    require(std::abs(entries_.determinant() - 1.0) <= tol.entry * std::max(1.0, std::pow(entries_.norm(), n)),
            "SL(n,R) element must have determinant 1");
  }

  static GroupElement identity(AlgebraTag tag) {
    const int n = matrix_size(tag);
    return GroupElement(tag, Matrix::Identity(n, n));
  }

  AlgebraTag tag() const { return tag_; }
  const Matrix& entries() const { return entries_; }

  GroupElement operator*(const GroupElement& o) const {
    require(tag_ == o.tag_, "group elements from different groups");
    return {tag_, entries_ * o.entries_};
  }

 private:
  AlgebraTag tag_;
  Matrix entries_;
};

inline void require_compatible(const AlgebraElement& x, const AlgebraElement& y) {
  require(x.tag() == y.tag() && x.size() == y.size(), "algebra elements of different algebras or dimensions");
}

inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
  require_compatible(x, y);
  const Matrix& a = x.entries();
  const Matrix& b = y.entries();
  return {x.tag(), a * b - b * a};
}

/// Standard basis of sl(n, R) in the order documented at the top of this file.
inline std::vector<AlgebraElement> standard_basis(AlgebraTag tag) {
  const int n = matrix_size(tag);
  std::vector<AlgebraElement> basis;
  for (int k = 0; k + 1 < n; ++k) basis.emplace_back(tag, unit_matrix(n, k, k) - unit_matrix(n, k + 1, k + 1));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) basis.emplace_back(tag, unit_matrix(n, i, j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) basis.emplace_back(tag, unit_matrix(n, i, j));
  return basis;
}

/// Coordinates of matrices against a fixed list of basis matrices.
class LinearBasis {
 public:
  explicit LinearBasis(const std::vector<Matrix>& basis, double rank_tol = 1e-10) : dim_(basis.size()) {
    require(!basis.empty(), "empty basis");
    rows_ = basis.front().rows();
    cols_ = basis.front().cols();
    Matrix stacked(rows_ * cols_, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j) {
      require(basis[j].rows() == rows_ && basis[j].cols() == cols_, "basis matrices differ in shape");
      stacked.col(static_cast<Eigen::Index>(j)) = basis[j].reshaped();
    }
    qr_ = stacked.colPivHouseholderQr();
    qr_.setThreshold(rank_tol);
    if (qr_.rank() != static_cast<Eigen::Index>(basis.size()))
      fail(ErrorKind::invalid_argument, "basis is not linearly independent (Gram rank deficiency)");
    stacked_ = std::move(stacked);
  }

  explicit LinearBasis(const std::vector<AlgebraElement>& basis, double rank_tol = 1e-10)
      : LinearBasis(entries_of(basis), rank_tol) {}

  std::size_t dim() const { return dim_; }

  Vector coordinates(const Matrix& m) const { return qr_.solve(Matrix(m.reshaped())); }

  /// Distance of m from the span, in the Frobenius norm.
  double residual(const Matrix& m) const {
    const Vector c = coordinates(m);
    return (stacked_ * c - m.reshaped()).norm();
  }

 private:
  static std::vector<Matrix> entries_of(const std::vector<AlgebraElement>& basis) {
    std::vector<Matrix> out;
    out.reserve(basis.size());
    for (const auto& b : basis) out.push_back(b.entries());
    return out;
  }

  std::size_t dim_ = 0;
  Eigen::Index rows_ = 0, cols_ = 0;
  Matrix stacked_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
};

/// Matrix of ad_X in the given basis: column j holds the coordinates of [X, b_j].
inline Matrix ad_matrix(const AlgebraElement& x, const std::vector<AlgebraElement>& basis, const LinearBasis& coords) {
  Matrix ad(basis.size(), basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j)
    ad.col(static_cast<Eigen::Index>(j)) = coords.coordinates(bracket(x, basis[j]).entries());
  return ad;
}

inline Matrix ad_matrix(const AlgebraElement& x, const std::vector<AlgebraElement>& basis) {
  return ad_matrix(x, basis, LinearBasis(basis));
}

/// Killing form Tr(ad_X o ad_Y), with the ad-matrices computed in `basis`.
inline double killing_form(const AlgebraElement& x, const AlgebraElement& y, const std::vector<AlgebraElement>& basis) {
  require_compatible(x, y);
  const LinearBasis coords(basis);
  return (ad_matrix(x, basis, coords) * ad_matrix(y, basis, coords)).trace();
}

inline AlgebraElement cartan_involution(const AlgebraElement& x) { return {x.tag(), -x.entries().transpose()}; }

/// B_theta(X, Y) = -B(X, theta Y).
inline double cartan_killing_metric(const AlgebraElement& x, const AlgebraElement& y,
                                    const std::vector<AlgebraElement>& basis) {
  return -killing_form(x, cartan_involution(y), basis);
}

inline Matrix gram_matrix(const std::vector<AlgebraElement>& basis) {
  const LinearBasis coords(basis);
  std::vector<Matrix> ads;
  ads.reserve(basis.size());
  for (const auto& b : basis) ads.push_back(ad_matrix(b, basis, coords));
  const auto d = static_cast<Eigen::Index>(basis.size());
  Matrix gram(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const Matrix ad_theta = ad_matrix(cartan_involution(basis[static_cast<std::size_t>(j)]), basis, coords);
      gram(i, j) = -(ads[static_cast<std::size_t>(i)] * ad_theta).trace();
    }
  }
  return gram;
}

struct CartanParts {
  AlgebraElement k_part;  // theta-fixed, antisymmetric
  AlgebraElement p_part;  // theta-antifixed, symmetric
};

inline CartanParts cartan_decompose(const AlgebraElement& x) {
  const Matrix& m = x.entries();
  const Matrix k = 0.5 * (m - m.transpose());
  // p = x - k keeps k + p == x bit-for-bit.
  const Matrix p = m - k;
  return {AlgebraElement(x.tag(), k), AlgebraElement(x.tag(), p)};
}

}  // namespace coarsemodel::lie
