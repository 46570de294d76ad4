#ifndef CDHOM_PROBES_HPP
#define CDHOM_PROBES_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cdhom/core.hpp"

// Finite surrogate for the weak operator topology: fixed families of unit
// vectors, and the max pairing deviation over them.

namespace cdhom {

namespace detail {

// Box-Muller on top of mt19937_64 so probe vectors are identical across
// platforms and standard library implementations.
class DeterministicGaussian {
 public:
  explicit DeterministicGaussian(std::uint64_t seed) : eng_(seed) {}
  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }
  cplx complex_normal() { return cplx((*this)(), (*this)()); }

 private:
  double uniform01() {
    return (eng_() >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
  }
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace detail

struct ProbePair {
  VecC x;  // paired on the right of the operator
  VecC y;  // paired against the image
  std::string label;
};

class ProbeSet {
 public:
  ProbeSet(SpacePtr domain, SpacePtr codomain, std::uint64_t seed)
      : dom_(std::move(domain)), cod_(std::move(codomain)), seed_(seed) {}

  static ProbeSet seeded_random(const SpacePtr& domain, const SpacePtr& codomain,
                                std::uint64_t seed, int count, bool complex_valued = false) {
    ProbeSet p(domain, codomain, seed);
    detail::DeterministicGaussian g(seed);
    for (int i = 0; i < count; ++i) {
      VecC x(domain->dim()), y(codomain->dim());
      for (Eigen::Index k = 0; k < x.size(); ++k)
        x(k) = complex_valued ? g.complex_normal() : cplx(g(), 0.0);
      for (Eigen::Index k = 0; k < y.size(); ++k)
        y(k) = complex_valued ? g.complex_normal() : cplx(g(), 0.0);
      p.add(x, y, "random-" + std::to_string(i));
    }
    return p;
  }

  void add(VecC x, VecC y, std::string label = {}) {
    dom_->check(x);
    cod_->check(y);
    const double nx = dom_->norm(x);
    const double ny = cod_->norm(y);
    if (nx <= 0.0 || ny <= 0.0)
      throw std::invalid_argument("ProbeSet: zero probe vector");
    pairs_.push_back({x / nx, y / ny, std::move(label)});
  }

  const std::vector<ProbePair>& pairs() const { return pairs_; }
  bool empty() const { return pairs_.empty(); }
  std::size_t size() const { return pairs_.size(); }
  std::uint64_t seed() const { return seed_; }
  const SpacePtr& domain() const { return dom_; }
  const SpacePtr& codomain() const { return cod_; }

 private:
  SpacePtr dom_;
  SpacePtr cod_;
  std::uint64_t seed_ = 0;
  std::vector<ProbePair> pairs_;
};

// max over probe pairs of |<(T - Tref) x, y>| in the codomain inner product.
inline double wot_distance(const MatC& T, const MatC& Tref, const ProbeSet& probes) {
  if (T.rows() != Tref.rows() || T.cols() != Tref.cols())
    throw DimensionError("wot_distance: operator shapes differ");
  if (probes.empty()) throw std::invalid_argument("wot_distance: empty probe set");
  double worst = 0.0;
  for (const auto& p : probes.pairs()) {
    VecC d = T * p.x - Tref * p.x;
    worst = std::max(worst, std::abs(probes.codomain()->inner(d, p.y)));
  }
  return worst;
}

inline double wot_distance(const LinearOp& T, const LinearOp& Tref,
                           const ProbeSet& probes) {
  return wot_distance(T.dense(), Tref.dense(), probes);
}

}  // namespace cdhom

#endif  // CDHOM_PROBES_HPP
