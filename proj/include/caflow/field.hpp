#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "caflow/config.hpp"

namespace caflow {

/// Uniform grid on the circle: nodes theta_j = 2*pi*j/n, j = 0..n-1.
class AngularGrid {
public:
  static constexpr int min_size = 16;

  explicit AngularGrid(int n) : n_(n) {
    if (n < min_size || n % 2 != 0) {
      throw InvalidArgument("grid size must be even and >= 16, got " + std::to_string(n));
    }
  }

  int size() const noexcept { return n_; }
  real spacing() const noexcept { return two_pi / static_cast<real>(n_); }
  real theta(int j) const noexcept { return two_pi * static_cast<real>(j) / static_cast<real>(n_); }

  friend bool operator==(const AngularGrid&, const AngularGrid&) = default;

private:
  int n_;
};

/// Samples of a function on S^1 at the nodes of an AngularGrid.
class PeriodicField {
public:
  explicit PeriodicField(AngularGrid grid) : grid_(grid), values_(grid.size(), real{0}) {}

  PeriodicField(AngularGrid grid, std::vector<real> values) : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.size()) {
      throw InvalidArgument("field length " + std::to_string(values_.size()) +
                            " does not match grid size " + std::to_string(grid_.size()));
    }
  }

  /// Samples fn(theta_j) at every node.
  template <class Fn>
  static PeriodicField sample(AngularGrid grid, Fn&& fn) {
    PeriodicField out(grid);
    for (int j = 0; j < grid.size(); ++j) out.values_[j] = fn(grid.theta(j));
    return out;
  }

  static PeriodicField constant(AngularGrid grid, real c) {
    return PeriodicField(grid, std::vector<real>(grid.size(), c));
  }

  const AngularGrid& grid() const noexcept { return grid_; }
  int size() const noexcept { return grid_.size(); }

  real operator[](int j) const { return values_[j]; }
  real& operator[](int j) { return values_[j]; }

  std::span<const real> values() const noexcept { return values_; }
  std::span<real> values() noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  real min() const { return *std::min_element(values_.begin(), values_.end()); }
  real max() const { return *std::max_element(values_.begin(), values_.end()); }
  real sup_norm() const {
    real m = 0;
    for (real v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  real mean() const {
    real s = 0;
    for (real v : values_) s += v;
    return s / static_cast<real>(values_.size());
  }

  /// Pointwise fn(v).
  template <class Fn>
  PeriodicField map(Fn&& fn) const {
    PeriodicField out(grid_);
    for (int j = 0; j < size(); ++j) out.values_[j] = fn(values_[j]);
    return out;
  }

  PeriodicField pow(real p) const {
    return map([p](real v) { return std::pow(v, p); });
  }

  PeriodicField& operator+=(const PeriodicField& o) { return combine(o, std::plus<>{}); }
  PeriodicField& operator-=(const PeriodicField& o) { return combine(o, std::minus<>{}); }
  PeriodicField& operator*=(const PeriodicField& o) { return combine(o, std::multiplies<>{}); }
  PeriodicField& operator/=(const PeriodicField& o) { return combine(o, std::divides<>{}); }
  PeriodicField& operator*=(real c) {
    for (real& v : values_) v *= c;
    return *this;
  }
  PeriodicField& operator/=(real c) {
    for (real& v : values_) v /= c;
    return *this;
  }
  PeriodicField& operator+=(real c) {
    for (real& v : values_) v += c;
    return *this;
  }

  friend PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
  friend PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
  friend PeriodicField operator*(PeriodicField a, const PeriodicField& b) { return a *= b; }
  friend PeriodicField operator/(PeriodicField a, const PeriodicField& b) { return a /= b; }
  friend PeriodicField operator*(PeriodicField a, real c) { return a *= c; }
  friend PeriodicField operator*(real c, PeriodicField a) { return a *= c; }
  friend PeriodicField operator/(PeriodicField a, real c) { return a /= c; }
  friend PeriodicField operator+(PeriodicField a, real c) { return a += c; }
  friend PeriodicField operator+(real c, PeriodicField a) { return a += c; }
  friend PeriodicField operator-(PeriodicField a, real c) { return a += -c; }
  friend PeriodicField operator-(real c, PeriodicField a) {
    for (real& v : a.values_) v = c - v;
    return a;
  }
  friend PeriodicField operator-(PeriodicField a) {
    for (real& v : a.values_) v = -v;
    return a;
  }

private:
  template <class Op>
  PeriodicField& combine(const PeriodicField& o, Op op) {
    if (!(o.grid_ == grid_)) throw InvalidArgument("field grids differ");
    for (int j = 0; j < size(); ++j) values_[j] = op(values_[j], o.values_[j]);
    return *this;
  }

  AngularGrid grid_;
  std::vector<real> values_;
};

}  // namespace caflow
