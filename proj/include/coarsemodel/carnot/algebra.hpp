#pragma once

// Stratified nilpotent Lie algebras in a graded basis, and group arithmetic in
// exponential coordinates of the first kind: a point p is exp(sum_i p_i e_i).
//
// The Baker-Campbell-Hausdorff series is carried up to step 3, where it is
// exact:  log(e^X e^Y) = X + Y + [X,Y]/2 + ([X,[X,Y]] - [Y,[X,Y]])/12.

#include <complex>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coarsemodel/error.hpp"
#include "coarsemodel/lie/roots.hpp"

namespace coarsemodel::carnot {

using Vector = Eigen::VectorXd;
template <class S>
using VectorOf = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// [e_i, e_j] has coefficient `value` on e_k. Stored for i < j only.
struct StructureConstant {
  int i = 0;
  int j = 0;
  int k = 0;
  double value = 0.0;
};

class CarnotAlgebra {
 public:
  CarnotAlgebra(std::vector<int> strata_dims, std::vector<StructureConstant> constants, std::string name = {})
      : strata_dims_(std::move(strata_dims)), constants_(std::move(constants)), name_(std::move(name)) {
    require(!strata_dims_.empty(), "Carnot algebra needs at least one stratum");
    for (int m : strata_dims_) require(m > 0, "strata dimensions must be positive");
    int offset = 0;
    for (std::size_t s = 0; s < strata_dims_.size(); ++s) {
      offsets_.push_back(offset);
      for (int c = 0; c < strata_dims_[s]; ++c) stratum_of_.push_back(static_cast<int>(s) + 1);
      offset += strata_dims_[s];
    }
    dim_ = offset;
    validate();
  }

  static CarnotAlgebra abelian(int n) { return CarnotAlgebra({n}, {}, "R^" + std::to_string(n)); }

  /// Three-dimensional Heisenberg algebra, [e_1, e_2] = e_3.
  static CarnotAlgebra heisenberg() { return CarnotAlgebra({2, 1}, {{0, 1, 2, 1.0}}, "heisenberg"); }

  int dim() const { return dim_; }
  int step() const { return static_cast<int>(strata_dims_.size()); }
  const std::vector<int>& strata_dims() const { return strata_dims_; }
  const std::vector<StructureConstant>& constants() const { return constants_; }
  const std::string& name() const { return name_; }
  bool is_abelian() const { return constants_.empty(); }

  /// 1-based stratum index of a coordinate.
  int stratum_of(int coord) const { return stratum_of_[static_cast<std::size_t>(coord)]; }
  int stratum_offset(int stratum) const { return offsets_[static_cast<std::size_t>(stratum - 1)]; }
  int stratum_dim(int stratum) const { return strata_dims_[static_cast<std::size_t>(stratum - 1)]; }

  template <class S>
  VectorOf<S> bracket(const VectorOf<S>& u, const VectorOf<S>& v) const {
    VectorOf<S> w = VectorOf<S>::Zero(dim_);
    for (const auto& c : constants_) w(c.k) += S(c.value) * (u(c.i) * v(c.j) - u(c.j) * v(c.i));
    return w;
  }

  bool operator==(const CarnotAlgebra& o) const {
    if (strata_dims_ != o.strata_dims_ || constants_.size() != o.constants_.size()) return false;
    for (std::size_t n = 0; n < constants_.size(); ++n) {
      const auto& a = constants_[n];
      const auto& b = o.constants_[n];
      if (a.i != b.i || a.j != b.j || a.k != b.k || a.value != b.value) return false;
    }
    return true;
  }

 private:
  void validate() const {
    for (const auto& c : constants_) {
      require(c.i >= 0 && c.j < dim_ && c.k >= 0 && c.k < dim_ && c.i < c.j, "structure constant indices out of range");
      const int target = stratum_of(c.i) + stratum_of(c.j);
      require(target <= step() && stratum_of(c.k) == target,
              "bracket of strata i and j must land in stratum i + j");
    }
    // Jacobi identity on basis triples.
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b)
        for (int c = 0; c < dim_; ++c) {
          const Vector ea = Vector::Unit(dim_, a), eb = Vector::Unit(dim_, b), ec = Vector::Unit(dim_, c);
          const Vector jac = bracket<double>(ea, bracket<double>(eb, ec)) + bracket<double>(eb, bracket<double>(ec, ea)) +
                             bracket<double>(ec, bracket<double>(ea, eb));
          require(jac.cwiseAbs().maxCoeff() <= 1e-10, "structure constants violate the Jacobi identity");
        }
    // Stratum 1 generates: brackets of stratum i with stratum 1 span stratum i + 1.
    for (int s = 1; s < step(); ++s) {
      Eigen::MatrixXd span(stratum_dim(s + 1), 0);
      for (int x = stratum_offset(s); x < stratum_offset(s) + stratum_dim(s); ++x)
        for (int y = 0; y < stratum_dim(1); ++y) {
          const Vector br = bracket<double>(Vector::Unit(dim_, x), Vector::Unit(dim_, y));
          span.conservativeResize(Eigen::NoChange, span.cols() + 1);
          span.col(span.cols() - 1) = br.segment(stratum_offset(s + 1), stratum_dim(s + 1));
        }
      auto qr = span.colPivHouseholderQr();
      qr.setThreshold(1e-10);
      require(span.cols() > 0 && qr.rank() == stratum_dim(s + 1), "stratum 1 does not generate the algebra");
    }
  }

  std::vector<int> strata_dims_;
  std::vector<StructureConstant> constants_;
  std::string name_;
  std::vector<int> offsets_;
  std::vector<int> stratum_of_;
  int dim_ = 0;
};

/// A point of the simply connected group, in exponential coordinates.
struct CarnotPoint {
  Vector coords;

  static CarnotPoint identity(int dim) { return {Vector::Zero(dim)}; }
  int dim() const { return static_cast<int>(coords.size()); }
  bool operator==(const CarnotPoint& o) const { return coords == o.coords; }
};

/// Nilradical of the Iwasawa decomposition as a Carnot algebra. The graded
/// basis lists the positive root vectors by height; the map to matrices is
/// returned alongside so coordinates can be pushed back to n.
struct NilradicalChart {
  CarnotAlgebra algebra;
  std::vector<lie::Matrix> basis;        // graded basis as matrices
  std::vector<std::size_t> root_of;      // positive-root index (into datum.roots) per basis vector
};

inline NilradicalChart nilradical(const lie::RootDatum& datum) {
  std::vector<lie::Matrix> basis;
  std::vector<std::size_t> root_of;
  std::vector<int> strata;
  for (const auto& stratum : datum.grading) {
    int count = 0;
    for (std::size_t r : stratum)
      for (const auto& m : datum.roots[r].space) {
        basis.push_back(m);
        root_of.push_back(r);
        ++count;
      }
    strata.push_back(count);
  }
  const lie::LinearBasis coords(basis);
  std::vector<StructureConstant> constants;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i + 1; j < basis.size(); ++j) {
      const lie::Matrix br = basis[i] * basis[j] - basis[j] * basis[i];
      if (br.norm() < 1e-13) continue;
      if (coords.residual(br) > 1e-10) fail(ErrorKind::numerical, "nilradical is not closed under the bracket");
      const Vector c = coords.coordinates(br);
      for (Eigen::Index k = 0; k < c.size(); ++k)
        if (std::abs(c(k)) > 1e-12)
          constants.push_back({static_cast<int>(i), static_cast<int>(j), static_cast<int>(k), std::round(c(k) * 1e12) / 1e12});
    }
  return {CarnotAlgebra(strata, constants, "n(" + std::string(lie::to_string(datum.tag)) + ")"), basis, root_of};
}

template <class S>
VectorOf<S> bch(const CarnotAlgebra& g, const VectorOf<S>& x, const VectorOf<S>& y) {
  if (g.step() > 3) fail(ErrorKind::invalid_argument, "BCH product is implemented for step <= 3 only");
  VectorOf<S> z = x + y;
  if (g.is_abelian()) return z;
  const VectorOf<S> xy = g.bracket(x, y);
  z += S(0.5) * xy;
  if (g.step() >= 3) z += S(1.0 / 12.0) * (g.bracket(x, xy) - g.bracket(y, xy));
  return z;
}

inline CarnotPoint multiply(const CarnotAlgebra& g, const CarnotPoint& p, const CarnotPoint& q) {
  require(p.dim() == g.dim() && q.dim() == g.dim(), "point dimension does not match the algebra");
  return {bch<double>(g, p.coords, q.coords)};
}

inline CarnotPoint inverse(const CarnotPoint& p) { return {-p.coords}; }

template <class S>
VectorOf<S> dilate_coords(const CarnotAlgebra& g, double t, const VectorOf<S>& v) {
  VectorOf<S> out = v;
  for (int c = 0; c < g.dim(); ++c) out(c) *= S(std::pow(t, g.stratum_of(c)));
  return out;
}

inline CarnotPoint dilate(const CarnotAlgebra& g, double t, const CarnotPoint& p) {
  if (!(t > 0)) fail(ErrorKind::invalid_argument, "dilation factor must be positive");
  require(p.dim() == g.dim(), "point dimension does not match the algebra");
  return {dilate_coords<double>(g, t, p.coords)};
}

/// Dilates one coordinate block [offset, offset + len) lying in `stratum` by t,
/// i.e. scales it by t^stratum. Blockwise dilations are how the leaf maps act
/// on individual root spaces.
inline CarnotPoint dilate_block(const CarnotAlgebra& g, double t, const CarnotPoint& p, int offset, int len) {
  if (!(t > 0)) fail(ErrorKind::invalid_argument, "dilation factor must be positive");
  CarnotPoint out = p;
  for (int c = offset; c < offset + len; ++c) out.coords(c) *= std::pow(t, g.stratum_of(c));
  return out;
}

/// (dL_x)_1 V in exponential coordinates: d/ds log(e^x e^{sV}) at s = 0,
/// which is V + [x,V]/2 + [x,[x,V]]/12 up to step 3.
template <class S>
VectorOf<S> left_translation_differential(const CarnotAlgebra& g, const VectorOf<S>& x, const VectorOf<S>& v) {
  VectorOf<S> out = v;
  if (g.is_abelian()) return out;
  const VectorOf<S> xv = g.bracket(x, v);
  out += S(0.5) * xv;
  if (g.step() >= 3) out += S(1.0 / 12.0) * g.bracket(x, xv);
  return out;
}

/// Inverse of the above: the velocity pulled back to the identity,
/// V = c' - [c,c']/2 + [c,[c,c']]/6 up to step 3.
template <class S>
VectorOf<S> pullback_velocity(const CarnotAlgebra& g, const VectorOf<S>& c, const VectorOf<S>& cdot) {
  VectorOf<S> out = cdot;
  if (g.is_abelian()) return out;
  const VectorOf<S> ccd = g.bracket(c, cdot);
  out -= S(0.5) * ccd;
  if (g.step() >= 3) out += S(1.0 / 6.0) * g.bracket(c, ccd);
  return out;
}

enum class DifferenceScheme {
  central,       // (f(h) - f(-h)) / 2h
  complex_step,  // Im f(ih) / h, free of subtractive cancellation
};

/// Finite-difference check of d(delta_t)_x (dL_x X) = (dL_{delta_t x})(d delta_t X).
/// The left side differentiates s -> delta_t(x exp(sX)) numerically; the right
/// side is evaluated in closed form. Returns the relative error.
inline double dilation_pushforward_check(const CarnotAlgebra& g, double t, const CarnotPoint& x, const Vector& tangent,
                                         double h = 1e-5, DifferenceScheme scheme = DifferenceScheme::central) {
  if (!(t > 0)) fail(ErrorKind::invalid_argument, "dilation factor must be positive");
  if (tangent.norm() == 0.0) fail(ErrorKind::invalid_argument, "tangent vector must be non-zero");
  require(h > 0, "step must be positive");

  Vector numeric;
  if (scheme == DifferenceScheme::central) {
    const auto curve = [&](double s) { return dilate_coords<double>(g, t, bch<double>(g, x.coords, Vector(s * tangent))); };
    numeric = (curve(h) - curve(-h)) / (2.0 * h);
  } else {
    using C = std::complex<double>;
    const VectorOf<C> xc = x.coords.cast<C>();
    const VectorOf<C> step = (C(0.0, h) * tangent.cast<C>()).eval();
    numeric = dilate_coords<C>(g, t, bch<C>(g, xc, step)).imag() / h;
  }
  const Vector dx = dilate_coords<double>(g, t, x.coords);
  const Vector expected = left_translation_differential<double>(g, dx, dilate_coords<double>(g, t, tangent));
  return (numeric - expected).norm() / expected.norm();
}

}  // namespace coarsemodel::carnot
