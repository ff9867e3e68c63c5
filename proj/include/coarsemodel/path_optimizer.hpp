#pragma once

// Polyline shortening by interior-node coordinate descent with dyadic
// refinement. Used for the upper bounds on Riemannian distances, where no
// closed-form geodesics are available.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace coarsemodel {

struct PathOptimizerOptions {
  int max_levels = 10;    // dyadic refinement levels; at most 2^max_levels segments
  int min_levels = 3;     // never stop before this level
  double rel_tol = 1e-4;  // stop when a level improves the length by less than this
  int max_sweeps = 4;     // sweeps per step size before halving
  double min_step = 1e-5; // relative to the endpoint separation
};

struct OptimizedPath {
  std::vector<Eigen::VectorXd> nodes;
  double length = 0.0;
  int levels = 0;
  bool converged = false;
};

/// `segment(a, b)` returns the length of the coordinate-straight segment a -> b.
/// `initial` holds the starting nodes, endpoints included; they stay fixed.
template <class SegmentLength>
OptimizedPath optimize_polyline(std::vector<Eigen::VectorXd> initial, SegmentLength&& segment,
                                const PathOptimizerOptions& opt = {}) {
  OptimizedPath out;
  out.nodes = std::move(initial);
  std::vector<Eigen::VectorXd>& nodes = out.nodes;
  const Eigen::VectorXd& start = nodes.front();
  const Eigen::VectorXd& end = nodes.back();
  std::vector<double> seg(nodes.size() - 1, 0.0);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) seg[k] = segment(nodes[k], nodes[k + 1]);
  for (double s : seg) out.length += s;
  if ((end - start).norm() == 0.0 && nodes.size() == 2) {
    out.converged = true;
    return out;
  }
  double scale = 1e-12;
  for (const auto& v : nodes) scale = std::max(scale, (v - start).cwiseAbs().maxCoeff());

  double previous = out.length;
  const Eigen::Index dim = start.size();
  const std::size_t max_segments = std::size_t{1} << opt.max_levels;

  for (int level = 1; level <= opt.max_levels && 2 * seg.size() <= max_segments; ++level) {
    std::vector<Eigen::VectorXd> refined;
    refined.reserve(2 * nodes.size() - 1);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      refined.push_back(nodes[k]);
      refined.push_back(0.5 * (nodes[k] + nodes[k + 1]));
    }
    refined.push_back(nodes.back());
    nodes = std::move(refined);
    seg.assign(nodes.size() - 1, 0.0);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) seg[k] = segment(nodes[k], nodes[k + 1]);

    double step = 0.5 * scale / std::ldexp(1.0, level - 1);
    const double floor = opt.min_step * scale;
    while (step >= floor) {
      for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        bool improved = false;
        for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
          for (Eigen::Index c = 0; c < dim; ++c) {
            const double local = seg[k - 1] + seg[k];
            for (double sign : {1.0, -1.0}) {
              Eigen::VectorXd trial = nodes[k];
              trial(c) += sign * step;
              const double left = segment(nodes[k - 1], trial);
              const double right = segment(trial, nodes[k + 1]);
              if (left + right < local * (1.0 - 1e-14)) {
                nodes[k] = std::move(trial);
                seg[k - 1] = left;
                seg[k] = right;
                improved = true;
                break;
              }
            }
          }
        }
        if (!improved) break;
      }
      step *= 0.5;
    }

    double total = 0.0;
    for (double s : seg) total += s;
    out.length = total;
    out.levels = level;
    if (level >= opt.min_levels && previous - total <= opt.rel_tol * previous) {
      out.converged = true;
      break;
    }
    previous = total;
  }
  return out;
}

template <class SegmentLength>
OptimizedPath optimize_polyline(const Eigen::VectorXd& start, const Eigen::VectorXd& end, SegmentLength&& segment,
                                const PathOptimizerOptions& opt = {}) {
  return optimize_polyline(std::vector<Eigen::VectorXd>{start, end}, std::forward<SegmentLength>(segment), opt);
}

/// Composite Simpson rule on [0, 1] with `panels` (even) sub-intervals.
template <class F>
double simpson(F&& f, int panels) {
  if (panels % 2 != 0) ++panels;
  const double h = 1.0 / panels;
  double sum = f(0.0) + f(1.0);
  for (int i = 1; i < panels; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * f(i * h);
  return sum * h / 3.0;
}

}  // namespace coarsemodel
