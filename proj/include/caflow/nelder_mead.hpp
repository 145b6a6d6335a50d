#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "caflow/config.hpp"

namespace caflow {

struct NelderMeadOptions {
  real f_tol = 1e-16;  ///< spread of simplex values, relative to 1 + |f_best|
  real x_tol = 1e-11;  ///< simplex diameter (max-norm)
  int max_iter = 5000;
};

struct NelderMeadResult {
  std::vector<real> x;
  real f = 0;
  int iterations = 0;
  bool converged = false;
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2)
/// started from x0 with an axis-aligned simplex of the given per-axis steps.
/// Terminates when both the value spread and the simplex diameter are below
/// tolerance.
inline NelderMeadResult nelder_mead(const std::function<real(const std::vector<real>&)>& f, std::vector<real> x0,
                                    const std::vector<real>& steps, const NelderMeadOptions& opt = {}) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<real>> pts(dim + 1, x0);
  for (std::size_t i = 0; i < dim; ++i) pts[i + 1][i] += steps[i];
  std::vector<real> vals(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) vals[i] = f(pts[i]);

  auto affine = [&](const std::vector<real>& a, const std::vector<real>& b, real t) {
    std::vector<real> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
  };

  NelderMeadResult res;
  std::vector<std::size_t> order(dim + 1);
  for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    // Ties resolve by vertex index so the result is deterministic.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[dim - 1];

    real diameter = 0;
    for (std::size_t i = 0; i <= dim; ++i)
      for (std::size_t k = 0; k < dim; ++k) diameter = std::max(diameter, std::abs(pts[i][k] - pts[best][k]));
    if (vals[worst] - vals[best] <= opt.f_tol * (1 + std::abs(vals[best])) && diameter <= opt.x_tol) {
      res.converged = true;
      break;
    }

    std::vector<real> centroid(dim, 0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[i][k] / static_cast<real>(dim);
    }

    const std::vector<real> reflected = affine(centroid, pts[worst], -1);
    const real f_ref = f(reflected);
    if (f_ref < vals[best]) {
      const std::vector<real> expanded = affine(centroid, pts[worst], -2);
      const real f_exp = f(expanded);
      if (f_exp < f_ref) {
        pts[worst] = expanded;
        vals[worst] = f_exp;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_ref;
      }
      continue;
    }
    if (f_ref < vals[second]) {
      pts[worst] = reflected;
      vals[worst] = f_ref;
      continue;
    }
    const bool outside = f_ref < vals[worst];
    const std::vector<real> contracted = affine(centroid, outside ? reflected : pts[worst], real{0.5});
    const real f_con = f(contracted);
    if (f_con < (outside ? f_ref : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_con;
      continue;
    }
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      pts[i] = affine(pts[best], pts[i], real{0.5});
      vals[i] = f(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.f = *it;
  return res;
}

}  // namespace caflow
