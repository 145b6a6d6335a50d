#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caflow/affine.hpp"

/// \file flow.hpp
/// Time integration of the support-function form of the area-preserving
/// centro-equiaffine flow
///
///   h_t = -(h h'''' + h h'') / (3 r^{7/3}) + 4 h (h''' + h')^2 / (9 r^{10/3})
///         + h / r^{4/3} - 1 / r^{1/3},          r = h'' + h,
///
/// which is the same field as h_t = -r^{-1/3} sigma_ss = -h sigma^{-1} sigma_ss.

namespace caflow {

// ---------------------------------------------------------------------------
// Right-hand side

/// Expanded right-hand side. With `dealias` the nonlinear combination is
/// evaluated on a 2x zero-padded grid and truncated back.
inline PeriodicField rhs(const SupportCurve& curve, bool dealias = true) {
  const std::vector<PeriodicField> d = deriv_theta_stack(curve.h(), 4);
  auto evaluate = [](const PeriodicField& h, const PeriodicField& h1, const PeriodicField& h2,
                     const PeriodicField& h3, const PeriodicField& h4) {
    PeriodicField out(h.grid());
    for (int j = 0; j < h.size(); ++j) {
      const real r = h2[j] + h[j];
      const real r13 = std::cbrt(r);
      const real r43 = r * r13;
      const real r73 = r43 * r;
      const real r103 = r73 * r;
      const real odd = h3[j] + h1[j];
      out[j] = -(h[j] * h4[j] + h[j] * h2[j]) / (3 * r73) + 4 * h[j] * odd * odd / (9 * r103) + h[j] / r43 -
               1 / r13;
    }
    return out;
  };
  if (!dealias) return evaluate(d[0], d[1], d[2], d[3], d[4]);
  const int n = curve.size();
  const int m = 2 * n;
  const PeriodicField fine =
      evaluate(upsample(d[0], m), upsample(d[1], m), upsample(d[2], m), upsample(d[3], m), upsample(d[4], m));
  return downsample(fine, n);
}

/// Compact form -r^{-1/3} sigma_ss.
inline PeriodicField rhs_compact(const AffineState& s) { return -(s.r.pow(real{-1} / 3) * s.sigma_ss); }

inline PeriodicField rhs_compact(const SupportCurve& curve) { return rhs_compact(affine_state(curve)); }

// ---------------------------------------------------------------------------
// Time stepping

struct FlowParams {
  real t_end = 20;
  real dt_init = 1e-5;
  real dt_min = 1e-12;
  real dt_max = 0.5;
  real safety = 0.9;
  /// Abort when min r falls below r_floor * mean r.
  real r_floor = 0.1;
  /// Stop early once E < stop_energy and sup|h_t| < stop_energy.
  real stop_energy = 1e-10;
  /// Sup-norm bound on the step-doubling error estimate.
  real step_tol = 1e-7;
  /// The estimate must also stay below step_rel_tol * sup|h_new - h|, so the
  /// relative accuracy of the increments does not degrade as the flow slows
  /// down; estimates under step_err_floor (rounding level) always pass.
  real step_rel_tol = 3e-3;
  real step_err_floor = 1e-12;
  /// Number of step-halving levels in the extrapolation table; the accepted
  /// solution is accurate to this order in dt.
  int richardson_levels = 3;
  bool dealias = true;
  long max_steps = 10'000'000;

  void check() const {
    if (!(t_end > 0)) throw InvalidArgument("t_end must be positive");
    if (!(dt_min > 0 && dt_min <= dt_init && dt_init <= dt_max)) {
      throw InvalidArgument("time steps must satisfy 0 < dt_min <= dt_init <= dt_max");
    }
    if (!(safety > 0 && safety <= 1)) throw InvalidArgument("safety must lie in (0, 1]");
    if (!(r_floor > 0 && r_floor < 0.5)) throw InvalidArgument("r_floor must lie in (0, 0.5)");
    if (!(stop_energy >= 0)) throw InvalidArgument("stop_energy must be nonnegative");
    if (!(step_tol > 0)) throw InvalidArgument("step_tol must be positive");
    if (richardson_levels < 2 || richardson_levels > 5) {
      throw InvalidArgument("richardson_levels must lie in 2..5");
    }
    if (!(step_rel_tol > 0) || !(step_err_floor >= 0)) {
      throw InvalidArgument("step_rel_tol must be positive and step_err_floor nonnegative");
    }
  }
};

/// Coefficient of -h'''' in the principal part, majorized over the grid.
inline real stabilization_constant(const SupportCurve& curve) {
  real c = 0;
  for (int j = 0; j < curve.size(); ++j) {
    c = std::max(c, curve.h()[j] / (3 * std::pow(curve.r()[j], real{7} / 3)));
  }
  return c;
}

/// One stabilized semi-implicit Euler step:
///   (1 + dt c k^4) h^{new}_k = (h + dt (F(h) + c h''''))_k
/// with c frozen from the current state. Throws ConvexityError when the
/// result is not a strictly convex, origin-enclosing curve.
inline SupportCurve step(const SupportCurve& curve, real dt, bool dealias = true) {
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  const real c = stabilization_constant(curve);
  PeriodicField explicit_part = curve.h() + dt * (rhs(curve, dealias) + c * deriv_theta(curve.h(), 4));
  return SupportCurve(solve_biharmonic_shift(explicit_part, dt * c));
}

struct RichardsonStep {
  PeriodicField extrapolated;
  /// Difference between the two best extrapolants one order below the result.
  real error_estimate = 0;
  /// sup|h(t + dt) - h(t)| from the finest row.
  real increment = 0;
};

/// Takes dt with 1, 2, ..., 2^{levels-1} substeps and eliminates the leading
/// error terms (powers of dt) by a Neville table. Throws ConvexityError if any
/// substep is not strictly convex; the extrapolant is left for the caller to
/// validate.
inline RichardsonStep richardson_step(const SupportCurve& curve, real dt, int levels, bool dealias = true) {
  std::vector<std::vector<PeriodicField>> table(levels);
  for (int i = 0; i < levels; ++i) {
    const int substeps = 1 << i;
    SupportCurve c = curve;
    for (int k = 0; k < substeps; ++k) c = step(c, dt / substeps, dealias);
    table[i].push_back(c.h());
    for (int j = 1; j <= i; ++j) {
      const real factor = static_cast<real>((1 << j) - 1);
      table[i].push_back(table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / factor);
    }
  }
  RichardsonStep out{table[levels - 1][levels - 1], 0, 0};
  out.error_estimate = radius_of_curvature(table[levels - 1][levels - 2] - table[levels - 2][levels - 2]).sup_norm();
  out.increment = radius_of_curvature(table[levels - 1][0] - curve.h()).sup_norm();
  return out;
}

// ---------------------------------------------------------------------------
// Monitoring

/// Quadratures of the right-hand sides of the scalar evolution equations at
/// one state (normal speed sigma_ss), with the L1 norm of each integrand.
struct EvolutionRates {
  real affine_length = 0;  ///< -2/3 \oint sigma_ss K ds
  real area = 0;           ///< -\oint sigma_ss ds
  real santalo = 0;        ///< 6 \oint sigma^{-4} sigma_s^2 ds
  real total_curv = 0;     ///< 2/3 \oint sigma_ss (K_ss + K^2) ds
  real affine_length_scale = 0;
  real area_scale = 0;
  real santalo_scale = 0;
  real total_curv_scale = 0;
  /// 2 \oint sigma_ss sigma^{-3} ds, equal to `santalo` after integrating by parts.
  real santalo_by_parts = 0;
};

inline EvolutionRates evolution_rates(const AffineState& s) {
  auto abs_field = [](const PeriodicField& f) { return f.map([](real v) { return std::abs(v); }); };
  EvolutionRates e;
  const PeriodicField length_integrand = s.sigma_ss * s.kappa * (real{-2} / 3);
  const PeriodicField area_integrand = -s.sigma_ss;
  const PeriodicField santalo_integrand = 6 * s.sigma.pow(-4) * s.sigma_s * s.sigma_s;
  const PeriodicField kappa_ss = s.d_s(s.kappa, 2);
  const PeriodicField curv_integrand = (real{2} / 3) * s.sigma_ss * (kappa_ss + s.kappa * s.kappa);
  e.affine_length = s.integrate_ds(length_integrand);
  e.area = s.integrate_ds(area_integrand);
  e.santalo = s.integrate_ds(santalo_integrand);
  e.total_curv = s.integrate_ds(curv_integrand);
  e.affine_length_scale = s.integrate_ds(abs_field(length_integrand));
  e.area_scale = s.integrate_ds(abs_field(area_integrand));
  e.santalo_scale = e.santalo;
  e.total_curv_scale = s.integrate_ds(abs_field(curv_integrand));
  e.santalo_by_parts = 2 * s.integrate_ds(s.sigma_ss * s.sigma.pow(-3));
  return e;
}

/// |2 \oint sigma_ss sigma^{-3} ds - 6 \oint sigma^{-4} sigma_s^2 ds|, relative
/// to the L1 norm of the first integrand (absolute when both vanish).
inline real santalo_identity_residual(const AffineState& s) {
  const real by_parts = 2 * s.integrate_ds(s.sigma_ss * s.sigma.pow(-3));
  const real direct = 6 * s.integrate_ds(s.sigma.pow(-4) * s.sigma_s * s.sigma_s);
  const real scale = 2 * s.integrate_ds((s.sigma_ss * s.sigma.pow(-3)).map([](real v) { return std::abs(v); }));
  return std::abs(by_parts - direct) / std::max(scale, real{1});
}

struct MonitorRecord {
  real t = 0;
  real dt = 0;
  long step = 0;
  ScalarInvariants invariants;
  real area_drift_rel = 0;
  ScriptQuantities script;
  real sup_ht = 0;
  real symmetry_defect = 0;
  real santalo_identity_residual = 0;
  EvolutionRates rates;
};

enum class Termination { reached_t_end, converged, convexity_lost, dt_underflow };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::reached_t_end: return "reached_t_end";
    case Termination::converged: return "converged";
    case Termination::convexity_lost: return "convexity_lost";
    case Termination::dt_underflow: return "dt_underflow";
  }
  return "unknown";
}

struct FlowTrajectory {
  std::vector<real> times;
  std::vector<SupportCurve> snapshots;
  std::vector<MonitorRecord> records;
  Termination termination = Termination::reached_t_end;
  long steps = 0;
  long rejected_steps = 0;
  real area0 = 0;
  real script_L0 = 0;

  const SupportCurve& final_curve() const { return snapshots.back(); }
  const MonitorRecord& final_record() const { return records.back(); }
};

/// Builds the monitor row for a state. `area0` and `script_L0` refer to the
/// initial curve of the run.
inline MonitorRecord monitor(const SupportCurve& curve, real t, real dt, long step_index, real area0, real script_L0,
                             bool dealias = true) {
  const AffineAnalysis a = analyze(curve);
  MonitorRecord rec;
  rec.t = t;
  rec.dt = dt;
  rec.step = step_index;
  rec.invariants = a.invariants;
  rec.area_drift_rel = std::abs(a.invariants.area - area0) / area0;
  rec.script = script_quantities(a.invariants, script_L0);
  rec.sup_ht = rhs(curve, dealias).sup_norm();
  rec.symmetry_defect = validate(curve).symmetry_defect;
  rec.santalo_identity_residual = santalo_identity_residual(a.state);
  rec.rates = evolution_rates(a.state);
  return rec;
}

/// Integrates from curve0 to params.t_end with an adaptive step.
///
/// Every step is a Richardson extrapolation over successively halved substeps
/// (see richardson_step). Steps are rejected and halved on convexity loss or when the
/// estimate exceeds the tolerance; dt grows by at most 1.5x per accepted step.
/// A record (and snapshot) is taken at t = 0, every `monitor_every` accepted
/// steps, and at termination. A run whose initial state already meets the
/// stopping test is integrated to t_end rather than reported as converged.
inline FlowTrajectory run(const SupportCurve& curve0, const FlowParams& params, int monitor_every) {
  params.check();
  if (monitor_every < 1) throw InvalidArgument("monitor_every must be >= 1");

  FlowTrajectory traj;
  const ScalarInvariants inv0 = analyze(curve0).invariants;
  traj.area0 = inv0.area;
  traj.script_L0 = inv0.script_L;

  auto record = [&](const SupportCurve& c, real t, real dt, long k) {
    traj.times.push_back(t);
    traj.snapshots.push_back(c);
    traj.records.push_back(monitor(c, t, dt, k, traj.area0, traj.script_L0, params.dealias));
  };

  SupportCurve current = curve0;
  real t = 0;
  real dt = params.dt_init;
  record(current, t, 0, 0);
  auto stationary = [&](const MonitorRecord& rec) {
    return rec.invariants.energy < params.stop_energy && rec.sup_ht < params.stop_energy;
  };
  const bool stationary_start = stationary(traj.records.front());

  const real t_tol = params.t_end * 1e-14L;
  while (true) {
    if (t >= params.t_end - t_tol) {
      traj.termination = Termination::reached_t_end;
      break;
    }
    if (traj.steps >= params.max_steps) {
      traj.termination = Termination::dt_underflow;
      break;
    }
    const real trial = std::min({dt, params.dt_max, params.t_end - t});
    std::optional<SupportCurve> accepted;
    real err = 0;
    real tol = params.step_tol;
    try {
      const RichardsonStep rs = richardson_step(current, trial, params.richardson_levels, params.dealias);
      err = rs.error_estimate;
      tol = std::min(params.step_tol, std::max(params.step_rel_tol * rs.increment, params.step_err_floor));
      if (err <= tol) accepted.emplace(rs.extrapolated);
    } catch (const ConvexityError&) {
      accepted.reset();
    }
    if (!accepted) {
      ++traj.rejected_steps;
      dt = trial / 2;
      if (dt < params.dt_min) {
        traj.termination = Termination::dt_underflow;
        break;
      }
      continue;
    }

    current = std::move(*accepted);
    t += trial;
    ++traj.steps;
    const real grow = err > 0 ? params.safety * std::pow(tol / err, real{1} / params.richardson_levels) : real{1.5};
    dt = std::max(trial * std::min(real{1.5}, std::max(real{0.5}, grow)), params.dt_min);

    if (current.r().min() < params.r_floor * current.r().mean()) {
      record(current, t, trial, traj.steps);
      traj.termination = Termination::convexity_lost;
      break;
    }
    const bool due = traj.steps % monitor_every == 0;
    if (due) record(current, t, trial, traj.steps);
    if (due && !stationary_start && stationary(traj.records.back())) {
      traj.termination = Termination::converged;
      return traj;
    }
  }
  if (traj.times.back() != t) record(current, t, 0, traj.steps);
  return traj;
}

// ---------------------------------------------------------------------------
// Cross-checks

/// Relative residuals of the evolution equations for the affine length, area,
/// Santalo integral and total affine curvature: a nonuniform central
/// difference of the recorded scalars at the middle record, compared with the
/// quadrature of the corresponding right-hand side. Each residual is
/// |fd - quad| / (L1 norm of the integrand); `active` is false when that norm
/// is below `activity_floor`, i.e. the state is numerically stationary.
struct EvolutionResiduals {
  real affine_length = 0;
  real area = 0;
  real santalo = 0;
  real total_curv = 0;
  bool active = true;

  real max() const { return std::max({affine_length, area, santalo, total_curv}); }
};

inline EvolutionResiduals evolution_crosscheck(std::span<const MonitorRecord> window, real activity_floor = 1e-6) {
  if (window.size() != 3) throw InvalidArgument("evolution cross-check needs exactly three records");
  const MonitorRecord& a = window[0];
  const MonitorRecord& b = window[1];
  const MonitorRecord& c = window[2];
  const real h1 = b.t - a.t;
  const real h2 = c.t - b.t;
  if (!(h1 > 0 && h2 > 0)) throw InvalidArgument("records must have strictly increasing times");
  auto central = [&](real fa, real fb, real fc) {
    return -h2 / (h1 * (h1 + h2)) * fa + (h2 - h1) / (h1 * h2) * fb + h1 / (h2 * (h1 + h2)) * fc;
  };
  auto residual = [&](real fd, real quad, real scale) {
    return std::abs(fd - quad) / std::max(scale, activity_floor);
  };
  const ScalarInvariants& ia = a.invariants;
  const ScalarInvariants& ib = b.invariants;
  const ScalarInvariants& ic = c.invariants;
  const EvolutionRates& q = b.rates;
  EvolutionResiduals r;
  r.affine_length = residual(central(ia.affine_length, ib.affine_length, ic.affine_length), q.affine_length,
                             q.affine_length_scale);
  r.area = residual(central(ia.area, ib.area, ic.area), q.area, q.area_scale);
  r.santalo = residual(central(ia.santalo, ib.santalo, ic.santalo), q.santalo, q.santalo_scale);
  r.total_curv =
      residual(central(ia.total_curv, ib.total_curv, ic.total_curv), q.total_curv, q.total_curv_scale);
  r.active = std::min({q.affine_length_scale, q.area_scale, q.santalo_scale, q.total_curv_scale}) >= activity_floor;
  return r;
}

/// Radius evolution check: r_t / r obtained by differentiating the flow
/// right-hand side, (d^2/dtheta^2 + 1) h_t / r, against the closed form
/// -sigma_ssss + sigma^{-1} sigma_ss^2 - sigma^{-1} sigma_ss.
struct LogRCheck {
  real lhs_sup = 0;
  real rhs_sup = 0;
  real abs_residual = 0;
  real rel_residual = 0;  ///< abs_residual / max(lhs_sup, rhs_sup)
};

inline LogRCheck logr_crosscheck(const SupportCurve& curve, bool dealias = true) {
  const AffineState s = affine_state(curve);
  const PeriodicField ht = rhs(curve, dealias);
  const PeriodicField lhs = (deriv_theta(ht, 2) + ht) / s.r;
  const PeriodicField sigma_ssss = s.d_s(s.sigma_sss, 1);
  const PeriodicField closed = -sigma_ssss + (s.sigma_ss * s.sigma_ss - s.sigma_ss) / s.sigma;
  LogRCheck out;
  out.lhs_sup = lhs.sup_norm();
  out.rhs_sup = closed.sup_norm();
  out.abs_residual = (lhs - closed).sup_norm();
  const real scale = std::max(out.lhs_sup, out.rhs_sup);
  out.rel_residual = scale > 0 ? out.abs_residual / scale : 0;
  return out;
}

}  // namespace caflow
