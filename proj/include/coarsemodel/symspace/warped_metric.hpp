#pragma once

// The model G/K = R^rank x N with the warped metric
//   |da|^2 + sum_beta beta(a) g_beta(V_beta),
// V the leafwise velocity pulled back to the identity and V_beta its part in
// the root block of beta. Characters are beta(a) = exp(<beta, a>).
//
// Coordinates on a are orthonormal for <X, Y> = tr(XY) / 2 on the diagonal
// Cartan subspace, which makes the sl(2) model the hyperbolic plane
// da^2 + e^{2a} dn^2 (z = e^{-a} in the upper half plane).

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "coarsemodel/carnot/algebra.hpp"
#include "coarsemodel/carnot/metric.hpp"
#include "coarsemodel/error.hpp"
#include "coarsemodel/lie/roots.hpp"

namespace coarsemodel::symspace {

using carnot::CarnotAlgebra;
using carnot::CarnotPoint;
using carnot::Interval;
using carnot::LeftInvariantMetric;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Model { sl2r, sl3r, h2, h3 };

inline std::string_view to_string(Model m) {
  switch (m) {
    case Model::sl2r: return "sl2r";
    case Model::sl3r: return "sl3r";
    case Model::h2: return "h2";
    case Model::h3: return "h3";
  }
  return "?";
}

inline constexpr std::string_view kRegisteredModels = "sl2r, sl3r, h2, h3";

inline Model parse_model(std::string_view s) {
  for (Model m : {Model::sl2r, Model::sl3r, Model::h2, Model::h3})
    if (s == to_string(m)) return m;
  fail(ErrorKind::invalid_argument,
       "unknown model '" + std::string(s) + "' (registered: " + std::string(kRegisteredModels) + ")");
}

/// One root beta: a coordinate block of N inside stratum i with base form
/// weight * Euclidean.
struct RootBlock {
  std::string label;
  Vector functional;  // <beta, .> in orthonormal a-coordinates
  int stratum = 1;
  int offset = 0;
  int len = 1;
  double weight = 1.0;
};

struct HorocyclicPoint {
  Vector a;
  CarnotPoint n;

  bool operator==(const HorocyclicPoint& o) const { return a == o.a && n == o.n; }
};

inline double char_eval(const Vector& beta, const Vector& a) {
  require(beta.size() == a.size(), "character and flat coordinate have different rank");
  return std::exp(beta.dot(a));
}

class WarpedMetric {
 public:
  WarpedMetric(std::string name, CarnotAlgebra algebra, std::vector<RootBlock> blocks, int rank)
      : name_(std::move(name)), algebra_(std::move(algebra)), blocks_(validated(algebra_, std::move(blocks), rank)),
        rank_(rank), base_(leaf_metric_impl(Vector::Zero(rank))) {
    bracket_bound_ = carnot::bracket_norm_bound(base_);
    for (const auto& blk : blocks_) max_char_norm_ = std::max(max_char_norm_, blk.functional.norm());
  }

  static WarpedMetric model(Model m);

  const std::string& name() const { return name_; }
  int rank() const { return rank_; }
  const CarnotAlgebra& algebra() const { return algebra_; }
  const std::vector<RootBlock>& blocks() const { return blocks_; }
  int dim() const { return rank_ + algebra_.dim(); }

  double char_eval(std::size_t block, const Vector& a) const { return symspace::char_eval(blocks_.at(block).functional, a); }

  /// Leaf {a} x N with the left-invariant metric sum_beta beta(a) g_beta.
  LeftInvariantMetric leaf_metric(const Vector& a) const { return leaf_metric_impl(a); }
  const LeftInvariantMetric& base_metric() const { return base_; }
  double bracket_bound() const { return bracket_bound_; }
  /// max |beta| over the roots: beta(a) >= exp(-max_char_norm |a|).
  double max_char_norm() const { return max_char_norm_; }

  /// Rank one, abelian N, a single root: a rescaled real hyperbolic space.
  bool has_closed_form() const { return rank_ == 1 && algebra_.is_abelian() && blocks_.size() == 1; }

  /// F_a: each block of stratum i is dilated by beta(a)^{-1/(2i)}, i.e. its
  /// coordinates are scaled by beta(a)^{-1/2}.
  CarnotPoint F(const Vector& a, const CarnotPoint& n) const {
    require(a.size() == rank_ && n.dim() == algebra_.dim(), "F_a: dimension mismatch");
    CarnotPoint out = n;
    for (const auto& blk : blocks_) {
      const double t = std::pow(symspace::char_eval(blk.functional, a), -1.0 / (2.0 * blk.stratum));
      out = carnot::dilate_block(algebra_, t, out, blk.offset, blk.len);
    }
    return out;
  }

  HorocyclicPoint embed(const Vector& a, const CarnotPoint& g) const { return {a, F(a, g)}; }

 private:
  static std::vector<RootBlock> validated(const CarnotAlgebra& g, std::vector<RootBlock> blocks, int rank) {
    require(rank >= 1, "rank must be positive");
    std::vector<int> owner(static_cast<std::size_t>(g.dim()), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const RootBlock& blk = blocks[b];
      require(blk.functional.size() == rank, "root functional has the wrong rank");
      require(blk.weight > 0, "root block weight must be positive");
      require(blk.functional.norm() > 0, "root functional must be non-zero");
      require(blk.stratum >= 1 && blk.stratum <= g.step(), "root block stratum out of range");
      for (int c = blk.offset; c < blk.offset + blk.len; ++c) {
        require(c >= 0 && c < g.dim(), "root block exceeds the algebra");
        require(g.stratum_of(c) == blk.stratum, "root block crosses a stratum");
        require(owner[static_cast<std::size_t>(c)] < 0, "root blocks overlap");
        owner[static_cast<std::size_t>(c)] = static_cast<int>(b);
      }
    }
    for (int o : owner) require(o >= 0, "root blocks do not cover N");
    return blocks;
  }

  LeftInvariantMetric leaf_metric_impl(const Vector& a) const {
    std::vector<Matrix> forms;
    for (int s = 1; s <= algebra_.step(); ++s)
      forms.push_back(Matrix::Zero(algebra_.stratum_dim(s), algebra_.stratum_dim(s)));
    for (const auto& blk : blocks_) {
      const double scale = symspace::char_eval(blk.functional, a) * blk.weight;
      const int local = blk.offset - algebra_.stratum_offset(blk.stratum);
      for (int c = 0; c < blk.len; ++c) forms[static_cast<std::size_t>(blk.stratum - 1)](local + c, local + c) = scale;
    }
    return {algebra_, forms};
  }

  std::string name_;
  CarnotAlgebra algebra_;
  std::vector<RootBlock> blocks_;
  int rank_;
  LeftInvariantMetric base_;
  double bracket_bound_ = 0.0;
  double max_char_norm_ = 0.0;
};

/// Gram-Schmidt on the Cartan basis for tr(XY) / 2. Row j of the result holds
/// the coefficients of the j-th orthonormal vector in the Cartan basis.
inline Matrix orthonormal_cartan_coefficients(const std::vector<Matrix>& cartan) {
  const auto ip = [](const Matrix& x, const Matrix& y) { return 0.5 * (x * y).trace(); };
  const std::size_t r = cartan.size();
  std::vector<Matrix> ortho;
  Matrix coeff = Matrix::Zero(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (std::size_t k = 0; k < r; ++k) {
    Matrix v = cartan[k];
    Vector c = Vector::Unit(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < ortho.size(); ++j) {
      const double p = ip(v, ortho[j]);
      v -= p * ortho[j];
      c -= p * coeff.row(static_cast<Eigen::Index>(j)).transpose();
    }
    const double nrm = std::sqrt(ip(v, v));
    ortho.push_back(v / nrm);
    coeff.row(static_cast<Eigen::Index>(k)) = c.transpose() / nrm;
  }
  return coeff;
}

/// Split real forms: the root blocks follow the graded basis of the nilradical.
inline WarpedMetric warped_metric_from_roots(const lie::RootDatum& datum, std::string name) {
  const carnot::NilradicalChart chart = carnot::nilradical(datum);
  const Matrix coeff = orthonormal_cartan_coefficients(datum.cartan_basis);
  std::vector<RootBlock> blocks;
  std::size_t c = 0;
  while (c < chart.root_of.size()) {
    const std::size_t root = chart.root_of[c];
    std::size_t end = c;
    while (end < chart.root_of.size() && chart.root_of[end] == root) ++end;
    const lie::Root& r = datum.roots[root];
    RootBlock blk;
    blk.functional = coeff * r.values;
    blk.offset = static_cast<int>(c);
    blk.len = static_cast<int>(end - c);
    blk.stratum = chart.algebra.stratum_of(blk.offset);
    blk.weight = 1.0;
    blk.label = "root" + std::to_string(root);
    blocks.push_back(std::move(blk));
    c = end;
  }
  return {std::move(name), chart.algebra, std::move(blocks), static_cast<int>(datum.rank())};
}

inline WarpedMetric WarpedMetric::model(Model m) {
  switch (m) {
    case Model::sl2r: return warped_metric_from_roots(lie::restricted_roots(lie::AlgebraTag::sl2r), "sl2r");
    case Model::sl3r: return warped_metric_from_roots(lie::restricted_roots(lie::AlgebraTag::sl3r), "sl3r");
    case Model::h2: return {"h2", CarnotAlgebra::abelian(1), {{"alpha", Vector::Constant(1, 2.0), 1, 0, 1, 1.0}}, 1};
    case Model::h3: return {"h3", CarnotAlgebra::abelian(2), {{"alpha", Vector::Constant(1, 2.0), 1, 0, 2, 1.0}}, 1};
  }
  fail(ErrorKind::invalid_argument, "unknown model");
}

}  // namespace coarsemodel::symspace
