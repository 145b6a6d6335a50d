#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

/// \file config.hpp
/// Scalar type and error types shared by every caflow header.
///
/// The library computes in `long double` by default. The flow right-hand side
/// differentiates the support function four times and the radius evolution
/// check six times; at n = 256 the k^4..k^6 amplification of double-precision
/// rounding noise alone exceeds 1e-8. Define CAFLOW_REAL before including any
/// caflow header to override.

#ifndef CAFLOW_REAL
#define CAFLOW_REAL long double
#endif

namespace caflow {

using real = CAFLOW_REAL;

inline constexpr real pi = std::numbers::pi_v<real>;
inline constexpr real two_pi = 2 * pi;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad grid size, non-positive axis...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A curve failed the strict-convexity / origin-enclosing invariant.
class ConvexityError : public Error {
public:
  using Error::Error;
};

}  // namespace caflow
