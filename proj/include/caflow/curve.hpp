#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "caflow/diffops.hpp"

/// \file curve.hpp
/// Strictly convex, origin-enclosing closed curves represented by samples of
/// their Euclidean support function h on a uniform angular grid.

namespace caflow {

/// Radius of curvature r = h'' + h.
inline PeriodicField radius_of_curvature(const PeriodicField& h) { return deriv_theta(h, 2) + h; }

/// Pure report on a candidate support function; never throws.
struct CurveDiagnostics {
  real min_h = 0;
  real min_r = 0;
  real mean_r = 0;
  /// max_j |h_j - h_{j+n/2}|; zero for origin-symmetric curves.
  real symmetry_defect = 0;

  bool encloses_origin() const noexcept { return min_h > 0; }
  bool strictly_convex() const noexcept { return min_r > 0; }
  bool valid() const noexcept { return encloses_origin() && strictly_convex(); }
  bool origin_symmetric(real tol = 1e-10) const noexcept { return symmetry_defect <= tol; }
};

inline CurveDiagnostics validate(const PeriodicField& h) {
  const PeriodicField r = radius_of_curvature(h);
  CurveDiagnostics d;
  d.min_h = h.min();
  d.min_r = r.min();
  d.mean_r = r.mean();
  const int n = h.size();
  for (int j = 0; j < n / 2; ++j) d.symmetry_defect = std::max(d.symmetry_defect, std::abs(h[j] - h[j + n / 2]));
  return d;
}

/// A support function satisfying h > 0 and h'' + h > 0 at every node.
/// Immutable once constructed; the radius of curvature is cached.
class SupportCurve {
public:
  explicit SupportCurve(PeriodicField h) : h_(std::move(h)), r_(radius_of_curvature(h_)) {
    if (!(h_.min() > 0)) {
      throw ConvexityError("support function must be positive (curve must enclose the origin); min h = " +
                           std::to_string(static_cast<double>(h_.min())));
    }
    if (!(r_.min() > 0)) {
      throw ConvexityError("radius of curvature must be positive; min r = " +
                           std::to_string(static_cast<double>(r_.min())));
    }
  }

  const PeriodicField& h() const noexcept { return h_; }
  const PeriodicField& r() const noexcept { return r_; }
  const AngularGrid& grid() const noexcept { return h_.grid(); }
  int size() const noexcept { return h_.size(); }

private:
  PeriodicField h_;
  PeriodicField r_;
};

inline CurveDiagnostics validate(const SupportCurve& c) { return validate(c.h()); }

// ---------------------------------------------------------------------------
// Specifications and constructors

struct CircleSpec {
  real radius = 1;
};

struct EllipseSpec {
  real a = 1;  ///< semi-axis along x
  real b = 1;  ///< semi-axis along y
};

/// Coefficients of cos(2k theta) and sin(2k theta) for k = index + 1.
/// Only even harmonics appear, so the curve is origin-symmetric.
struct Harmonic {
  real cos_coeff = 0;
  real sin_coeff = 0;
};

/// h = base * (1 + s * sum_k (a_k cos 2k theta + b_k sin 2k theta)), with the
/// single damping factor s in (0, 1] chosen so that min r >= 0.1 mean r.
struct FourierSpec {
  real base = 1;
  std::vector<Harmonic> harmonics;
};

using CurveSpec = std::variant<CircleSpec, EllipseSpec, FourierSpec>;

inline SupportCurve make_circle(real radius, int n) {
  if (!(radius > 0)) throw InvalidArgument("circle radius must be positive");
  return SupportCurve(PeriodicField::constant(AngularGrid(n), radius));
}

inline SupportCurve make_ellipse(real a, real b, int n) {
  if (!(a > 0) || !(b > 0)) throw InvalidArgument("ellipse semi-axes must be positive");
  const AngularGrid grid(n);
  if (a == b) return make_circle(a, n);
  PeriodicField h(grid);
  for (int j = 0; j < n; ++j) {
    // Reducing the node index mod n/2 makes h_j and h_{j+n/2} bitwise equal.
    const real t = grid.theta(j % (n / 2));
    const real c = std::cos(t);
    const real s = std::sin(t);
    h[j] = std::sqrt(a * a * c * c + b * b * s * s);
  }
  return SupportCurve(std::move(h));
}

namespace detail {

/// base * (1 + scale * sum_k ...), with trigonometric arguments reduced to an
/// integer phase index so symmetric nodes share one arithmetic path.
inline PeriodicField fourier_samples(const FourierSpec& spec, real scale, AngularGrid grid) {
  const int n = grid.size();
  PeriodicField h(grid);
  for (int j = 0; j < n; ++j) {
    real sum = 0;
    for (std::size_t i = 0; i < spec.harmonics.size(); ++i) {
      const long long freq = 2 * static_cast<long long>(i + 1);
      const real t = grid.theta(static_cast<int>((freq * j) % n));
      sum += spec.harmonics[i].cos_coeff * std::cos(t) + spec.harmonics[i].sin_coeff * std::sin(t);
    }
    h[j] = spec.base * (1 + scale * sum);
  }
  return h;
}

}  // namespace detail

inline SupportCurve make_fourier(const FourierSpec& spec, int n) {
  const AngularGrid grid(n);
  if (!(spec.base > 0)) throw InvalidArgument("fourier base radius must be positive");
  if (2 * static_cast<int>(spec.harmonics.size()) >= n / 2) {
    throw InvalidArgument("fourier harmonics exceed grid resolution");
  }
  constexpr real floor_fraction = 0.1;
  auto convex_enough = [&](real scale) {
    const PeriodicField h = detail::fourier_samples(spec, scale, grid);
    const PeriodicField r = radius_of_curvature(h);
    return h.min() > 0 && r.min() >= floor_fraction * r.mean();
  };
  real scale = 1;
  if (!convex_enough(scale)) {
    real lo = 0;
    real hi = 1;
    for (int iter = 0; iter < 64; ++iter) {
      const real mid = (lo + hi) / 2;
      (convex_enough(mid) ? lo : hi) = mid;
    }
    scale = lo;
  }
  return SupportCurve(detail::fourier_samples(spec, scale, grid));
}

inline SupportCurve make_curve(const CurveSpec& spec, int n) {
  return std::visit(
      [n](const auto& s) -> SupportCurve {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CircleSpec>) {
          return make_circle(s.radius, n);
        } else if constexpr (std::is_same_v<T, EllipseSpec>) {
          return make_ellipse(s.a, s.b, n);
        } else {
          return make_fourier(s, n);
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Embedding

struct Point2 {
  real x = 0;
  real y = 0;
};

/// gamma(theta) = h z + h_theta z_theta with z = (cos theta, sin theta).
inline std::vector<Point2> embed(const SupportCurve& curve) {
  const PeriodicField dh = deriv_theta(curve.h(), 1);
  const AngularGrid& grid = curve.grid();
  std::vector<Point2> pts(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    const real c = std::cos(grid.theta(j));
    const real s = std::sin(grid.theta(j));
    const real h = curve.h()[j];
    pts[j] = {h * c - dh[j] * s, h * s + dh[j] * c};
  }
  return pts;
}

/// Signed shoelace area of a closed polygon (positive when counter-clockwise).
inline real polygon_area(const std::vector<Point2>& pts) {
  real twice = 0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& p = pts[i];
    const Point2& q = pts[(i + 1) % n];
    twice += p.x * q.y - q.x * p.y;
  }
  return twice / 2;
}

}  // namespace caflow
