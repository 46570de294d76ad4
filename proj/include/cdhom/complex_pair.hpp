#ifndef CDHOM_COMPLEX_PAIR_HPP
#define CDHOM_COMPLEX_PAIR_HPP

#include <memory>
#include <utility>

#include "cdhom/core.hpp"

// A pair (A0, A1) with A1 A0 = 0 and rge(A0) = kar(A1), plus the cached
// orthogonal decomposition of the middle space used by all block algebra.

namespace cdhom {

struct ExactnessReport {
  double composition_norm = 0.0;  // max |entry| of A1*A0
  Eigen::Index rank_A0 = 0;
  Eigen::Index nullity_A1 = 0;
  bool exact = false;
};

inline ExactnessReport verify_exactness(const LinearOp& A0, const LinearOp& A1) {
  if (A0.codomain()->dim() != A1.domain()->dim())
    throw DimensionError("verify_exactness: codomain(A0) != domain(A1)");
  SpMatC comp = A1.matrix() * A0.matrix();
  ExactnessReport rep;
  rep.composition_norm = 0.0;
  for (int k = 0; k < comp.outerSize(); ++k)
    for (SpMatC::InnerIterator it(comp, k); it; ++it)
      rep.composition_norm = std::max(rep.composition_norm, std::abs(it.value()));
  ReducedOp r0(A0);
  ReducedOp r1(A1);
  rep.rank_A0 = r0.rank();
  rep.nullity_A1 = r1.nullity();
  rep.exact = (rep.rank_A0 == rep.nullity_A1);
  return rep;
}

class ComplexPair {
 public:
  ComplexPair(LinearOp A0, LinearOp A1)
      : A0_(std::move(A0)),
        A1_(std::move(A1)),
        red_A0_(A0_),
        red_A1_(A1_),
        red_A1_adj_(adjoint(A1_)) {
    if (A0_.codomain()->dim() != A1_.domain()->dim())
      throw DimensionError("ComplexPair: codomain(A0) != domain(A1)");
    report_ = verify_exactness(A0_, A1_);
  }

  const LinearOp& A0() const { return A0_; }
  const LinearOp& A1() const { return A1_; }
  const SpacePtr& middle_space() const { return A0_.codomain(); }
  const ExactnessReport& exactness() const { return report_; }

  const ReducedOp& reduced_A0() const { return red_A0_; }
  const ReducedOp& reduced_A1() const { return red_A1_; }
  const ReducedOp& reduced_A1_adjoint() const { return red_A1_adj_; }

  // Orthonormal basis of rge(A0) in the middle space.
  const MatC& range_A0_basis() const { return red_A0_.range_basis(); }
  // Orthonormal basis of rge(A1*) = kar(A1)^bot in the middle space.
  const MatC& range_A1_adj_basis() const { return red_A1_.ker_perp_basis(); }

  Eigen::Index harmonic_dim() const {
    return middle_space()->dim() - red_A0_.rank() - red_A1_.rank();
  }

  VecC project_range_A0(const VecC& x) const { return red_A0_.project_range(x); }
  VecC project_range_A1_adj(const VecC& x) const {
    return red_A1_.project_ker_perp(x);
  }

 private:
  LinearOp A0_;
  LinearOp A1_;
  ReducedOp red_A0_;
  ReducedOp red_A1_;
  ReducedOp red_A1_adj_;
  ExactnessReport report_;
};

}  // namespace cdhom

#endif  // CDHOM_COMPLEX_PAIR_HPP
