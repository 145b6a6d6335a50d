#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "caflow/affine.hpp"
#include "caflow/nelder_mead.hpp"

/// \file sl2.hpp
/// Unimodular linear maps acting on support functions, and the
/// Euclidean-length-minimizing normalization of a convex curve.

namespace caflow {

/// Matrix [[a, b], [c, d]] with ad - bc = 1.
class SL2Transform {
public:
  static constexpr real det_tol = 1e-12;

  SL2Transform() = default;
  SL2Transform(real a, real b, real c, real d) : a_(a), b_(b), c_(c), d_(d) {
    if (std::abs(a * d - b * c - 1) > det_tol) {
      throw InvalidArgument("SL(2) transform must have determinant 1, got " +
                            std::to_string(static_cast<double>(a * d - b * c)));
    }
  }

  static SL2Transform identity() { return {}; }
  static SL2Transform rotation(real phi) {
    const real c = std::cos(phi);
    const real s = std::sin(phi);
    return {c, -s, s, c};
  }
  /// diag(lambda, 1/lambda).
  static SL2Transform diagonal(real lambda) {
    if (!(lambda > 0)) throw InvalidArgument("diagonal scale must be positive");
    return {lambda, 0, 0, 1 / lambda};
  }
  static SL2Transform shear(real s) { return {1, s, 0, 1}; }
  /// R(phi) diag(e^m, e^{-m}) R(-phi): the symmetric positive-definite factor.
  static SL2Transform stretch(real m, real phi) {
    const real c2 = std::cos(2 * phi);
    const real s2 = std::sin(2 * phi);
    const real ch = std::cosh(m);
    const real sh = std::sinh(m);
    return {ch + sh * c2, sh * s2, sh * s2, ch - sh * c2};
  }

  real a() const noexcept { return a_; }
  real b() const noexcept { return b_; }
  real c() const noexcept { return c_; }
  real d() const noexcept { return d_; }
  bool is_identity() const noexcept { return a_ == 1 && b_ == 0 && c_ == 0 && d_ == 1; }

  SL2Transform transpose() const { return {a_, c_, b_, d_}; }
  SL2Transform inverse() const { return {d_, -b_, -c_, a_}; }

  friend SL2Transform operator*(const SL2Transform& x, const SL2Transform& y) {
    SL2Transform out;
    out.a_ = x.a_ * y.a_ + x.b_ * y.c_;
    out.b_ = x.a_ * y.b_ + x.b_ * y.d_;
    out.c_ = x.c_ * y.a_ + x.d_ * y.c_;
    out.d_ = x.c_ * y.b_ + x.d_ * y.d_;
    return out;
  }

  Point2 operator()(Point2 p) const { return {a_ * p.x + b_ * p.y, c_ * p.x + d_ * p.y}; }

private:
  real a_ = 1;
  real b_ = 0;
  real c_ = 0;
  real d_ = 1;
};

/// Support function of T(curve): h_T(u) = |T^t u| h(T^t u / |T^t u|), with h
/// evaluated off-grid by trigonometric interpolation. Throws ConvexityError
/// if the resampled curve is not strictly convex at the grid resolution.
inline SupportCurve apply(const SL2Transform& t, const SupportCurve& curve) {
  if (t.is_identity()) return curve;
  const TrigInterpolant h(curve.h());
  const SL2Transform tt = t.transpose();
  const AngularGrid grid = curve.grid();
  PeriodicField out(grid);
  for (int j = 0; j < grid.size(); ++j) {
    const Point2 v = tt({std::cos(grid.theta(j)), std::sin(grid.theta(j))});
    out[j] = std::hypot(v.x, v.y) * h(std::atan2(v.y, v.x));
  }
  return SupportCurve(std::move(out));
}

/// Euclidean perimeter via Cauchy's formula: \oint h dtheta.
inline real euclidean_length(const SupportCurve& curve) { return integrate_theta(curve.h()); }

namespace detail {

inline std::vector<Point2> unit_tangents(const AngularGrid& grid) {
  std::vector<Point2> tau(grid.size());
  for (int j = 0; j < grid.size(); ++j) tau[j] = {-std::sin(grid.theta(j)), std::cos(grid.theta(j))};
  return tau;
}

inline real transformed_length(const SL2Transform& t, const SupportCurve& curve, const std::vector<Point2>& tau) {
  real sum = 0;
  for (int j = 0; j < curve.size(); ++j) {
    const Point2 v = t(tau[j]);
    sum += curve.r()[j] * std::hypot(v.x, v.y);
  }
  return sum * curve.grid().spacing();
}

}  // namespace detail

/// Perimeter of T(curve) computed as \oint r |T tau| dtheta with the unit
/// tangent tau = (-sin, cos); needs no resampling.
inline real transformed_length(const SL2Transform& t, const SupportCurve& curve) {
  return detail::transformed_length(t, curve, detail::unit_tangents(curve.grid()));
}

struct NormalizationResult {
  SL2Transform transform;
  SupportCurve normalized;
  real m = 0;
  real phi = 0;
  real euclidean_length = 0;
  real input_length = 0;
  /// (max h - min h) / mean h of the normalized curve.
  real roundness = 0;
};

struct NormalizeOptions {
  real m_max = 3;
  int scan_m = 32;
  int scan_phi = 32;
  NelderMeadOptions refine{};
  /// Relative length gain below which the identity is kept.
  real tie_tol = 1e-14;
};

/// Finds the stretch R(phi) diag(e^m, e^{-m}) R(-phi), m in [0, m_max],
/// phi in [0, pi), minimizing the Euclidean length of the transformed curve.
/// Rotations leave the length unchanged and are not searched. A coarse grid
/// scan seeds a Nelder-Mead refinement in the coordinates
/// (m cos 2phi, m sin 2phi), which are smooth through m = 0. At m = 0 the
/// angle is reported as 0, and the input is returned unchanged.
inline NormalizationResult normalize(const SupportCurve& curve, const NormalizeOptions& opt = {}) {
  auto from_coords = [](real p, real q) {
    const real m = std::hypot(p, q);
    real phi = m > 0 ? std::atan2(q, p) / 2 : real{0};
    if (phi < 0) phi += pi;
    if (phi >= pi) phi -= pi;
    return std::pair{m, phi};
  };
  const std::vector<Point2> tau = detail::unit_tangents(curve.grid());
  auto objective = [&](real m, real phi) {
    return detail::transformed_length(SL2Transform::stretch(m, phi), curve, tau);
  };

  real best_m = 0;
  real best_phi = 0;
  const real identity_f = objective(0, 0);
  real best_f = identity_f;
  for (int i = 1; i < opt.scan_m; ++i) {
    const real m = opt.m_max * static_cast<real>(i) / static_cast<real>(opt.scan_m - 1);
    for (int j = 0; j < opt.scan_phi; ++j) {
      const real phi = pi * static_cast<real>(j) / static_cast<real>(opt.scan_phi);
      const real f = objective(m, phi);
      if (f < best_f) {
        best_f = f;
        best_m = m;
        best_phi = phi;
      }
    }
  }

  const real step = opt.m_max / static_cast<real>(opt.scan_m - 1);
  const NelderMeadResult nm = nelder_mead(
      [&](const std::vector<real>& x) {
        const auto [m, phi] = from_coords(x[0], x[1]);
        return objective(m, phi);
      },
      {best_m * std::cos(2 * best_phi), best_m * std::sin(2 * best_phi)}, {step, step}, opt.refine);

  auto [m, phi] = from_coords(nm.x[0], nm.x[1]);
  // Gains at rounding level are ties, resolved in favour of the identity.
  if (!(nm.f < identity_f * (1 - opt.tie_tol))) {
    m = 0;
    phi = 0;
  }
  if (m > opt.m_max) {
    throw ConvexityError("length-minimizing stretch exceeds m_max = " + std::to_string(static_cast<double>(opt.m_max)));
  }
  const real input_length = euclidean_length(curve);
  const SL2Transform transform = m > 0 ? SL2Transform::stretch(m, phi) : SL2Transform::identity();
  SupportCurve normalized = apply(transform, curve);
  const real length = euclidean_length(normalized);
  const PeriodicField& h = normalized.h();
  const real roundness = (h.max() - h.min()) / h.mean();
  return {transform, std::move(normalized), m, phi, length, input_length, roundness};
}

}  // namespace caflow
