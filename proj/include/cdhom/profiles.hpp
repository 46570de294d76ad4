#ifndef CDHOM_PROFILES_HPP
#define CDHOM_PROFILES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cdhom/core.hpp"

// Unit-periodic coefficient and kernel profiles. Layered profiles carry
// exact breakpoint quadrature for their means; everything else goes through
// midpoint quadrature.

namespace cdhom {

using Mat3C = Eigen::Matrix3cd;

inline double frac_unit(double t) {
  double f = t - std::floor(t);
  return f < 1.0 ? f : 0.0;
}

// Piecewise-constant profile on [0,1), periodic in x1, right-continuous on
// each interval [breakpoint_i, breakpoint_{i+1}).
class LayeredProfile {
 public:
  LayeredProfile(std::vector<double> breakpoints, std::vector<cplx> values)
      : bp_(std::move(breakpoints)), values_(std::move(values)) {
    validate();
  }
  static LayeredProfile two_phase(cplx v0, cplx v1, double split = 0.5) {
    return LayeredProfile({0.0, split}, {v0, v1});
  }
  static LayeredProfile constant(cplx v) { return LayeredProfile({0.0}, {v}); }

  cplx eval(double x1) const {
    const double t = frac_unit(x1);
    std::size_t i = bp_.size() - 1;
    while (i > 0 && t < bp_[i]) --i;
    return values_[i];
  }

  // Exact breakpoint-weighted integral of f over one period.
  template <typename F>
  auto integrate(F&& f) const {
    auto acc = decltype(f(values_[0])){};
    for (std::size_t i = 0; i < bp_.size(); ++i) {
      const double hi = (i + 1 < bp_.size()) ? bp_[i + 1] : 1.0;
      acc += (hi - bp_[i]) * f(values_[i]);
    }
    return acc;
  }
  cplx mean() const {
    return integrate([](cplx v) { return v; });
  }
  cplx mean_reciprocal() const {
    return integrate([](cplx v) {
      if (std::abs(v) == 0.0)
        throw std::invalid_argument("LayeredProfile: reciprocal of zero value");
      return 1.0 / v;
    });
  }
  LayeredProfile reciprocal() const {
    std::vector<cplx> inv;
    inv.reserve(values_.size());
    for (cplx v : values_) {
      if (std::abs(v) == 0.0)
        throw std::invalid_argument("LayeredProfile: reciprocal of zero value");
      inv.push_back(1.0 / v);
    }
    return LayeredProfile(bp_, inv);
  }
  LayeredProfile swapped_phases() const {
    std::vector<cplx> v(values_.rbegin(), values_.rend());
    return LayeredProfile(bp_, v);
  }

  const std::vector<double>& breakpoints() const { return bp_; }
  const std::vector<cplx>& values() const { return values_; }

 private:
  void validate() const {
    if (bp_.empty() || bp_.size() != values_.size())
      throw std::invalid_argument("LayeredProfile: breakpoints/values mismatch");
    if (bp_.front() != 0.0)
      throw std::invalid_argument("LayeredProfile: breakpoints must start at 0");
    for (std::size_t i = 1; i < bp_.size(); ++i)
      if (!(bp_[i] > bp_[i - 1] && bp_[i] < 1.0))
        throw std::invalid_argument(
            "LayeredProfile: breakpoints must be strictly increasing in [0,1)");
  }

  std::vector<double> bp_;
  std::vector<cplx> values_;
};

// Matrix-valued layered profile a : x -> a~(x1).
class LayeredMatrixProfile {
 public:
  LayeredMatrixProfile(std::vector<double> breakpoints, std::vector<Mat3C> values)
      : bp_(std::move(breakpoints)), values_(std::move(values)) {
    if (bp_.empty() || bp_.size() != values_.size())
      throw std::invalid_argument("LayeredMatrixProfile: breakpoints/values mismatch");
    if (bp_.front() != 0.0)
      throw std::invalid_argument("LayeredMatrixProfile: breakpoints must start at 0");
    for (std::size_t i = 1; i < bp_.size(); ++i)
      if (!(bp_[i] > bp_[i - 1] && bp_[i] < 1.0))
        throw std::invalid_argument(
            "LayeredMatrixProfile: breakpoints must be strictly increasing in [0,1)");
  }
  static LayeredMatrixProfile isotropic(const LayeredProfile& d) {
    std::vector<Mat3C> vals;
    for (cplx v : d.values()) vals.push_back(v * Mat3C::Identity());
    return LayeredMatrixProfile(d.breakpoints(), std::move(vals));
  }

  Mat3C eval(double x1) const {
    const double t = frac_unit(x1);
    std::size_t i = bp_.size() - 1;
    while (i > 0 && t < bp_[i]) --i;
    return values_[i];
  }

  // Exact mean of g(interval value) over one period, for scalar- or
  // matrix-valued g.
  template <typename F>
  auto mean_of(F&& g) const {
    auto acc = [&] {
      auto z = g(values_[0]);
      z = decltype(z)(0.0 * z);
      return z;
    }();
    for (std::size_t i = 0; i < bp_.size(); ++i) {
      const double hi = (i + 1 < bp_.size()) ? bp_[i + 1] : 1.0;
      acc += (hi - bp_[i]) * g(values_[i]);
    }
    return acc;
  }

  const std::vector<double>& breakpoints() const { return bp_; }
  const std::vector<Mat3C>& values() const { return values_; }

 private:
  std::vector<double> bp_;
  std::vector<Mat3C> values_;
};

using PeriodicFunction = std::function<cplx(double, double, double)>;

// m(k) by midpoint quadrature at resolution M^3 over the unit cell. Layered
// profiles should use LayeredProfile::mean() instead (exact).
inline cplx mean_value(const PeriodicFunction& k, int resolution = 256) {
  if (resolution < 1) throw std::invalid_argument("mean_value: resolution >= 1");
  const double h = 1.0 / resolution;
  cplx acc = 0.0;
  for (int kz = 0; kz < resolution; ++kz)
    for (int ky = 0; ky < resolution; ++ky)
      for (int kx = 0; kx < resolution; ++kx)
        acc += k((kx + 0.5) * h, (ky + 0.5) * h, (kz + 0.5) * h);
  return acc * (h * h * h);
}

}  // namespace cdhom

#endif  // CDHOM_PROFILES_HPP
