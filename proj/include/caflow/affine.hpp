#pragma once

#include <algorithm>
#include <cmath>

#include "caflow/curve.hpp"

/// \file affine.hpp
/// Centro-equiaffine invariants of a convex curve, computed from its support
/// function, and the identities and inequalities they satisfy.
///
/// With r = h'' + h the Euclidean radius of curvature:
///   ds    = r^{2/3} dtheta                      (equi-affine arclength)
///   sigma = h r^{1/3}                           (affine support function)
///   K     = r^{-1} ((r^{-1/3})'' + r^{-1/3})    (equi-affine curvature)
/// and sigma_ss + sigma K = 1 holds identically.

namespace caflow {

/// Per-node fields derived from a support function.
struct AffineState {
  PeriodicField h;
  PeriodicField r;
  PeriodicField sigma;
  PeriodicField kappa;      ///< equi-affine curvature K
  PeriodicField ds_weight;  ///< r^{2/3}
  PeriodicField sigma_s;
  PeriodicField sigma_ss;
  PeriodicField sigma_sss;

  /// Integral over the curve with respect to equi-affine arclength.
  real integrate_ds(const PeriodicField& f) const { return integrate_theta(f * ds_weight); }
  /// Arclength derivative of an arbitrary field on this curve.
  PeriodicField d_s(const PeriodicField& f, int order = 1) const { return deriv_s(f, r, order); }
};

struct ScalarInvariants {
  real area = 0;            ///< A = 1/2 \oint h r dtheta
  real affine_length = 0;   ///< \oint ds
  real energy = 0;          ///< E = \oint sigma_s^2 ds
  real energy_n2 = 0;       ///< \oint sigma_ss^2 ds
  real energy_n3 = 0;       ///< \oint sigma_sss^2 ds
  real santalo = 0;         ///< \oint sigma^{-2} ds
  real total_curv = 0;      ///< \oint K ds
  real inv_sigma = 0;       ///< \oint sigma^{-1} ds
  real log_oscillation = 0; ///< \oint sigma_s^2 / sigma^2 ds
  real script_L = 0;        ///< 1 - A^{1/3} \oint K ds / (2 pi^{4/3})
  real script_M = 0;        ///< 1 - A \oint sigma^{-2} ds / (2 pi^2)
  real minkowski_residual = 0;
  real min_sigma = 0;
  real max_sigma = 0;
  real min_r = 0;
  real mean_r = 0;
};

struct AffineAnalysis {
  AffineState state;
  ScalarInvariants invariants;
};

inline AffineState affine_state(const SupportCurve& curve) {
  const PeriodicField& h = curve.h();
  const PeriodicField& r = curve.r();
  const PeriodicField r13 = r.map([](real v) { return std::cbrt(v); });
  const PeriodicField r_m13 = r13.map([](real v) { return 1 / v; });
  PeriodicField sigma = h * r13;
  PeriodicField kappa = (deriv_theta(r_m13, 2) + r_m13) / r;
  PeriodicField ds_weight = r13 * r13;
  // d/ds = r^{-2/3} d/dtheta, as in deriv_s but with the factor computed once.
  const PeriodicField to_s = r_m13 * r_m13;
  PeriodicField sigma_s = to_s * deriv_theta(sigma, 1);
  PeriodicField sigma_ss = to_s * deriv_theta(sigma_s, 1);
  PeriodicField sigma_sss = to_s * deriv_theta(sigma_ss, 1);
  return AffineState{h,
                     r,
                     std::move(sigma),
                     std::move(kappa),
                     std::move(ds_weight),
                     std::move(sigma_s),
                     std::move(sigma_ss),
                     std::move(sigma_sss)};
}

/// \oint (1 - sigma K) ds / \oint ds. Vanishes for every closed convex curve
/// (affine Minkowski formula); the magnitude measures discretization error.
inline real minkowski_residual(const AffineState& s) {
  return s.integrate_ds(1 - s.sigma * s.kappa) / s.integrate_ds(PeriodicField::constant(s.sigma.grid(), 1));
}

/// Normal speed of the flow, 1 - sigma K = sigma_ss.
inline PeriodicField flow_speed(const AffineState& s) { return 1 - s.sigma * s.kappa; }

/// sup |sigma_ss + sigma K - 1|.
inline real structure_residual(const AffineState& s) {
  return (s.sigma_ss + s.sigma * s.kappa - 1).sup_norm();
}

/// Area as 1/2 \oint sigma ds; the integrand equals h r node by node.
inline real area_via_sigma(const AffineState& s) { return s.integrate_ds(s.sigma) / 2; }

inline ScalarInvariants scalar_invariants(const AffineState& s) {
  ScalarInvariants inv;
  inv.area = integrate_theta(s.h * s.r) / 2;
  inv.affine_length = integrate_theta(s.ds_weight);
  inv.energy = s.integrate_ds(s.sigma_s * s.sigma_s);
  inv.energy_n2 = s.integrate_ds(s.sigma_ss * s.sigma_ss);
  inv.energy_n3 = s.integrate_ds(s.sigma_sss * s.sigma_sss);
  inv.santalo = s.integrate_ds(s.sigma.pow(-2));
  inv.total_curv = s.integrate_ds(s.kappa);
  inv.inv_sigma = s.integrate_ds(s.sigma.pow(-1));
  inv.log_oscillation = s.integrate_ds((s.sigma_s / s.sigma).pow(2));
  inv.script_L = 1 - std::cbrt(inv.area) * inv.total_curv / (2 * std::pow(pi, real{4} / 3));
  inv.script_M = 1 - inv.area * inv.santalo / (2 * pi * pi);
  inv.minkowski_residual = minkowski_residual(s);
  inv.min_sigma = s.sigma.min();
  inv.max_sigma = s.sigma.max();
  inv.min_r = s.r.min();
  inv.mean_r = s.r.mean();
  return inv;
}

inline AffineAnalysis analyze(const SupportCurve& curve) {
  AffineState state = affine_state(curve);
  ScalarInvariants inv = scalar_invariants(state);
  return {std::move(state), inv};
}

// ---------------------------------------------------------------------------
// Inequalities. Each slack is RHS - LHS and is nonnegative, with equality
// exactly for origin-centred ellipses.

struct InequalitySlacks {
  real isoperimetric = 0;        ///< 2 pi^{2/3} A^{1/3} - L_aff
  real blaschke_santalo = 0;     ///< 2 pi^2 - A \oint sigma^{-2} ds
  real aleksandrov_fenchel = 0;  ///< L_aff^2 / 2 - A \oint K ds

  real min() const { return std::min({isoperimetric, blaschke_santalo, aleksandrov_fenchel}); }
  bool hold(real tol) const { return min() >= -tol; }
  bool equality(real tol) const {
    return std::abs(isoperimetric) <= tol && std::abs(blaschke_santalo) <= tol &&
           std::abs(aleksandrov_fenchel) <= tol;
  }
};

inline InequalitySlacks check_inequalities(const ScalarInvariants& inv) {
  InequalitySlacks s;
  s.isoperimetric = 2 * std::pow(pi, real{2} / 3) * std::cbrt(inv.area) - inv.affine_length;
  s.blaschke_santalo = 2 * pi * pi - inv.area * inv.santalo;
  s.aleksandrov_fenchel = inv.affine_length * inv.affine_length / 2 - inv.area * inv.total_curv;
  return s;
}

/// sigma attains pi^{-2/3} A^{2/3} somewhere on the curve, so that value lies
/// between min sigma and max sigma.
struct InfSupCheck {
  real target = 0;
  real lower_margin = 0;  ///< target - min sigma
  real upper_margin = 0;  ///< max sigma - target
  bool holds(real tol) const { return lower_margin >= -tol && upper_margin >= -tol; }
};

inline real sigma_limit_value(real area) { return std::pow(area / pi, real{2} / 3); }

inline InfSupCheck check_infsup(const ScalarInvariants& inv, const AffineState& s) {
  InfSupCheck c;
  c.target = sigma_limit_value(inv.area);
  c.lower_margin = c.target - s.sigma.min();
  c.upper_margin = s.sigma.max() - c.target;
  return c;
}

/// Relative residual of \oint sigma_s^2/sigma^2 ds = \oint 1/sigma ds - \oint K ds.
inline real check_totalcur_identity(const AffineState& s) {
  const real lhs = s.integrate_ds((s.sigma_s / s.sigma).pow(2));
  const real inv_sigma = s.integrate_ds(s.sigma.pow(-1));
  const real total_curv = s.integrate_ds(s.kappa);
  return std::abs(lhs - (inv_sigma - total_curv)) / std::max(std::abs(inv_sigma), std::abs(total_curv));
}

/// Two-sided pointwise bound on sigma in terms of I = \oint sigma_s^2/sigma^2 ds
/// and the enclosed area A:
///   1 / (pi A^{-1/2} sqrt(I/2) + pi^{2/3} A^{-2/3}) <= sigma
///                           <= (A^{1/2} sqrt(I/8) + pi^{-1/3} A^{1/3})^2.
struct OscillationBounds {
  real lower_bound = 0;
  real upper_bound = 0;
  real lower_margin = 0;  ///< min sigma - lower_bound
  real upper_margin = 0;  ///< upper_bound - max sigma
  bool holds(real tol) const { return lower_margin >= -tol && upper_margin >= -tol; }
};

inline OscillationBounds oscillation_bounds(real area, real log_oscillation) {
  OscillationBounds b;
  const real root = std::sqrt(std::max(log_oscillation, real{0}));
  const real sqrt2 = std::sqrt(real{2});
  b.lower_bound = 1 / (sqrt2 / 2 * pi / std::sqrt(area) * root + std::pow(pi, real{2} / 3) / std::pow(area, real{2} / 3));
  const real upper_root = sqrt2 / 4 * std::sqrt(area) * root + std::cbrt(area) / std::cbrt(pi);
  b.upper_bound = upper_root * upper_root;
  return b;
}

inline OscillationBounds check_oscillation_bounds(const ScalarInvariants& inv, const AffineState& s) {
  OscillationBounds b = oscillation_bounds(inv.area, inv.log_oscillation);
  b.lower_margin = s.sigma.min() - b.lower_bound;
  b.upper_margin = b.upper_bound - s.sigma.max();
  return b;
}

// ---------------------------------------------------------------------------
// Script quantities and the a-priori constant B

struct ScriptQuantities {
  real L = 0;
  real M = 0;
  real Q = 0;  ///< L + B M
  real B = 0;
};

/// The constant B(L0) that makes the Q-functional non-increasing while
/// L <= L0 + 12 B / 11. The denominator 484/49 - pi^2 is about 7.95e-3.
inline real b_constant(real script_L0) {
  const real c = real{484} / 49;
  const real gap = c - pi * pi;
  const real root = std::sqrt(4 * pi * pi + (4 + c * script_L0) * gap);
  const real q = (2 * pi + root) / gap;
  return real{11} / 12 * (q * q - script_L0);
}

inline ScriptQuantities script_quantities(const ScalarInvariants& inv, real script_L0) {
  ScriptQuantities q;
  q.L = inv.script_L;
  q.M = inv.script_M;
  q.B = b_constant(script_L0);
  q.Q = q.L + q.B * q.M;
  return q;
}

/// Uniform bounds on sigma along a flow started from a curve with area A0 and
/// script-L value L0, obtained by inserting L <= L0 + 12 B / 11 into
///   1 / (pi^{5/3} A0^{-2/3} L^{1/2} + pi^{2/3} A0^{-2/3}) <= sigma
///                 <= (A0^{1/3} pi^{2/3} L^{1/2} / 2 + pi^{-1/3} A0^{1/3})^2.
struct SigmaBounds {
  real lower = 0;
  real upper = 0;
};

inline SigmaBounds sigma_bounds_for_L(real area0, real script_L) {
  const real root = std::sqrt(std::max(script_L, real{0}));
  const real a23 = std::pow(area0, real{2} / 3);
  SigmaBounds b;
  b.lower = 1 / (std::pow(pi, real{5} / 3) / a23 * root + std::pow(pi, real{2} / 3) / a23);
  const real u = std::cbrt(area0) * std::pow(pi, real{2} / 3) * root / 2 + std::cbrt(area0) / std::cbrt(pi);
  b.upper = u * u;
  return b;
}

inline SigmaBounds sigma_bounds_from_initial(real area0, real script_L0) {
  return sigma_bounds_for_L(area0, script_L0 + real{12} / 11 * b_constant(script_L0));
}

}  // namespace caflow
