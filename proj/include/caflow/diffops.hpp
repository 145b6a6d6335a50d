#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "caflow/field.hpp"

/// \file diffops.hpp
/// Trigonometric (spectral) calculus on the uniform angular grid: derivatives
/// in theta and in equi-affine arclength, trapezoidal quadrature, zero-padded
/// resampling for anti-aliased products, and off-grid interpolation.

namespace caflow {

using complex = std::complex<real>;

/// Unnormalized half-spectrum of a real field, as produced by a real-to-complex
/// FFT: n/2 + 1 coefficients c_k with f_j = (1/n) sum_k c_k e^{i k theta_j}.
using Spectrum = std::vector<complex>;

namespace detail {

template <class R>
struct FftwApi;

template <>
struct FftwApi<double> {
  using plan = fftw_plan;
  using cpx = fftw_complex;
  static plan r2c(int n, double* in, cpx* out, unsigned f) { return fftw_plan_dft_r2c_1d(n, in, out, f); }
  static plan c2r(int n, cpx* in, double* out, unsigned f) { return fftw_plan_dft_c2r_1d(n, in, out, f); }
  static void exec_r2c(plan p, double* in, cpx* out) { fftw_execute_dft_r2c(p, in, out); }
  static void exec_c2r(plan p, cpx* in, double* out) { fftw_execute_dft_c2r(p, in, out); }
  static void destroy(plan p) { fftw_destroy_plan(p); }
};

template <>
struct FftwApi<long double> {
  using plan = fftwl_plan;
  using cpx = fftwl_complex;
  static plan r2c(int n, long double* in, cpx* out, unsigned f) { return fftwl_plan_dft_r2c_1d(n, in, out, f); }
  static plan c2r(int n, cpx* in, long double* out, unsigned f) { return fftwl_plan_dft_c2r_1d(n, in, out, f); }
  static void exec_r2c(plan p, long double* in, cpx* out) { fftwl_execute_dft_r2c(p, in, out); }
  static void exec_c2r(plan p, cpx* in, long double* out) { fftwl_execute_dft_c2r(p, in, out); }
  static void destroy(plan p) { fftwl_destroy_plan(p); }
};

/// Forward/backward plans for one transform length. Executing a plan on new
/// arrays is thread-safe in FFTW; creating one is not, so creation happens
/// under the cache mutex.
class FftPlans {
  using Api = FftwApi<real>;

public:
  explicit FftPlans(int n) : n_(n) {
    std::vector<real> re(n);
    std::vector<complex> co(n / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = Api::r2c(n, re.data(), reinterpret_cast<Api::cpx*>(co.data()), flags);
    backward_ = Api::c2r(n, reinterpret_cast<Api::cpx*>(co.data()), re.data(), flags);
  }
  ~FftPlans() {
    Api::destroy(forward_);
    Api::destroy(backward_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  Spectrum forward(std::span<const real> values) const {
    std::vector<real> in(values.begin(), values.end());
    Spectrum out(n_ / 2 + 1);
    Api::exec_r2c(forward_, in.data(), reinterpret_cast<Api::cpx*>(out.data()));
    return out;
  }

  /// Inverse transform including the 1/n normalization.
  std::vector<real> backward(Spectrum coeffs) const {
    std::vector<real> out(n_);
    Api::exec_c2r(backward_, reinterpret_cast<Api::cpx*>(coeffs.data()), out.data());
    const real scale = real{1} / static_cast<real>(n_);
    for (real& v : out) v *= scale;
    return out;
  }

private:
  int n_;
  typename Api::plan forward_;
  typename Api::plan backward_;
};

inline const FftPlans& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<FftPlans>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlans>(n);
  return *slot;
}

/// (i k)^order for an integer wavenumber.
inline complex ik_power(int k, int order) {
  static const complex unit_powers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return unit_powers[order % 4] * std::pow(static_cast<real>(k), order);
}

}  // namespace detail

inline Spectrum forward_transform(const PeriodicField& f) {
  return detail::plans_for(f.size()).forward(f.values());
}

inline PeriodicField inverse_transform(const Spectrum& coeffs, AngularGrid grid) {
  if (static_cast<int>(coeffs.size()) != grid.size() / 2 + 1) {
    throw InvalidArgument("spectrum length does not match grid");
  }
  return PeriodicField(grid, detail::plans_for(grid.size()).backward(coeffs));
}

/// Spectral derivative of the given order (1..6). Exact for trigonometric
/// polynomials of degree < n/2; the Nyquist mode of an odd-order derivative is
/// zeroed since its derivative is not representable on the grid.
inline PeriodicField deriv_theta(const PeriodicField& f, int order) {
  if (order < 1 || order > 6) {
    throw InvalidArgument("derivative order must be in 1..6, got " + std::to_string(order));
  }
  Spectrum c = forward_transform(f);
  const int nyquist = f.size() / 2;
  for (int k = 0; k <= nyquist; ++k) c[k] *= detail::ik_power(k, order);
  if (order % 2 == 1) c[nyquist] = 0;
  return inverse_transform(c, f.grid());
}

/// All derivatives 0..max_order from a single forward transform; element k of
/// the result is the k-th derivative.
inline std::vector<PeriodicField> deriv_theta_stack(const PeriodicField& f, int max_order) {
  if (max_order < 0 || max_order > 6) {
    throw InvalidArgument("derivative order must be in 0..6, got " + std::to_string(max_order));
  }
  const Spectrum c = forward_transform(f);
  const int nyquist = f.size() / 2;
  std::vector<PeriodicField> out;
  out.reserve(max_order + 1);
  out.push_back(f);
  for (int order = 1; order <= max_order; ++order) {
    Spectrum d = c;
    for (int k = 0; k <= nyquist; ++k) d[k] *= detail::ik_power(k, order);
    if (order % 2 == 1) d[nyquist] = 0;
    out.push_back(inverse_transform(d, f.grid()));
  }
  return out;
}

/// Trapezoidal rule on the periodic grid: (2 pi / n) * sum_j f_j.
inline real integrate_theta(const PeriodicField& f) {
  real sum = 0;
  for (real v : f) sum += v;
  return sum * f.grid().spacing();
}

/// Applies (r^{-2/3} d/dtheta) `order` times, i.e. the derivative with respect
/// to equi-affine arclength s, using ds = r^{2/3} dtheta.
inline PeriodicField deriv_s(const PeriodicField& f, const PeriodicField& r, int order) {
  if (order < 1 || order > 4) {
    throw InvalidArgument("arclength derivative order must be in 1..4, got " + std::to_string(order));
  }
  if (!(r.grid() == f.grid())) throw InvalidArgument("field grids differ");
  if (!(r.min() > 0)) throw InvalidArgument("deriv_s requires r > 0 pointwise");
  const PeriodicField factor = r.pow(real{-2} / 3);
  PeriodicField out = f;
  for (int level = 0; level < order; ++level) out = factor * deriv_theta(out, 1);
  return out;
}

/// Band-limited interpolation of f onto a finer grid of size m (zero padding).
inline PeriodicField upsample(const PeriodicField& f, int m) {
  const int n = f.size();
  AngularGrid fine(m);
  if (m < n) throw InvalidArgument("upsample target smaller than source");
  const Spectrum c = forward_transform(f);
  Spectrum padded(m / 2 + 1, complex{0});
  const real scale = static_cast<real>(m) / static_cast<real>(n);
  for (int k = 0; k < n / 2; ++k) padded[k] = c[k] * scale;
  // The source Nyquist term is a pure cosine; on a finer grid it splits evenly
  // between the +k and -k modes.
  padded[n / 2] = (m == n ? c[n / 2] : complex{c[n / 2].real() / 2, 0}) * scale;
  return inverse_transform(padded, fine);
}

/// Spectral truncation of f onto a coarser grid of size n.
inline PeriodicField downsample(const PeriodicField& f, int n) {
  const int m = f.size();
  AngularGrid coarse(n);
  if (n > m) throw InvalidArgument("downsample target larger than source");
  const Spectrum c = forward_transform(f);
  Spectrum kept(n / 2 + 1);
  const real scale = static_cast<real>(n) / static_cast<real>(m);
  for (int k = 0; k < n / 2; ++k) kept[k] = c[k] * scale;
  kept[n / 2] = (m == n ? c[n / 2] : complex{2 * c[n / 2].real(), 0}) * scale;
  return inverse_transform(kept, coarse);
}

/// Evaluates the trigonometric interpolant of the sampled field at an
/// arbitrary angle.
class TrigInterpolant {
public:
  explicit TrigInterpolant(const PeriodicField& f) : n_(f.size()), coeffs_(forward_transform(f)) {
    const real inv_n = real{1} / static_cast<real>(n_);
    for (auto& c : coeffs_) c *= inv_n;
  }

  real operator()(real angle) const {
    const int nyquist = n_ / 2;
    const complex step(std::cos(angle), std::sin(angle));
    complex rot(1, 0);
    real sum = coeffs_[0].real();
    for (int k = 1; k < nyquist; ++k) {
      // Re-seed periodically to keep the rotation recurrence accurate.
      rot = (k % 32 == 0) ? complex(std::cos(k * angle), std::sin(k * angle)) : rot * step;
      sum += 2 * (coeffs_[k] * rot).real();
    }
    sum += coeffs_[nyquist].real() * std::cos(nyquist * angle);
    return sum;
  }

private:
  int n_;
  Spectrum coeffs_;
};

/// Solves (1 + a k^4) u_k = f_k mode by mode: the implicit half of a stabilized
/// step for u_t = -a u_{thetatheta thetatheta} + N.
inline PeriodicField solve_biharmonic_shift(const PeriodicField& f, real a) {
  Spectrum c = forward_transform(f);
  for (int k = 0; k < static_cast<int>(c.size()); ++k) {
    const real k2 = static_cast<real>(k) * static_cast<real>(k);
    c[k] /= (1 + a * k2 * k2);
  }
  return inverse_transform(c, f.grid());
}

}  // namespace caflow
