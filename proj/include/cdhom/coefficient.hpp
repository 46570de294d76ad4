#ifndef CDHOM_COEFFICIENT_HPP
#define CDHOM_COEFFICIENT_HPP

#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "cdhom/core.hpp"

// Coefficients are bounded operators on a single space of a complex. Local
// multiplication fields, dense operators and nonlocal resolvents all go
// through this interface; solvers only need apply() plus a few traits.

namespace cdhom {

class Coefficient {
 public:
  virtual ~Coefficient() = default;

  virtual const SpacePtr& space() const = 0;
  virtual VecC apply(const VecC& x) const = 0;

  // True when the operator is self-adjoint in the weighted inner product;
  // the iterative solver path requires it.
  virtual bool is_hermitian() const { return false; }

  // Dense materialisation; available at desk scale only.
  virtual MatC dense() const {
    const Eigen::Index n = space()->dim();
    MatC m(n, n);
    VecC e = VecC::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      e(j) = 1.0;
      m.col(j) = apply(e);
      e(j) = 0.0;
    }
    return m;
  }

  // Pointwise multiplier values when the operator is a diagonal
  // multiplication field; used for sparse assembly and preconditioning.
  virtual std::optional<VecC> diagonal() const { return std::nullopt; }
};

using CoefficientPtr = std::shared_ptr<const Coefficient>;

// Multiplication by a per-location value (scalar fields and diagonal matrix
// fields sampled on staggered components both end up here).
class DiagonalCoefficient final : public Coefficient {
 public:
  DiagonalCoefficient(SpacePtr space, VecC values)
      : space_(std::move(space)), values_(std::move(values)) {
    space_->check(values_);
    hermitian_ = (values_.imag().array().abs() < 1e-14 * (1.0 + values_.real().array().abs())).all();
  }

  const SpacePtr& space() const override { return space_; }
  VecC apply(const VecC& x) const override {
    space_->check(x);
    return values_.cwiseProduct(x);
  }
  bool is_hermitian() const override { return hermitian_; }
  MatC dense() const override { return values_.asDiagonal(); }
  std::optional<VecC> diagonal() const override { return values_; }

  const VecC& values() const { return values_; }

 private:
  SpacePtr space_;
  VecC values_;
  bool hermitian_ = false;
};

// Arbitrary dense operator (desk scale).
class DenseCoefficient final : public Coefficient {
 public:
  DenseCoefficient(SpacePtr space, MatC matrix)
      : space_(std::move(space)), mat_(std::move(matrix)) {
    if (mat_.rows() != space_->dim() || mat_.cols() != space_->dim())
      throw DimensionError("DenseCoefficient: shape mismatch");
  }

  const SpacePtr& space() const override { return space_; }
  VecC apply(const VecC& x) const override {
    space_->check(x);
    return mat_ * x;
  }
  bool is_hermitian() const override {
    // Self-adjointness in the weighted inner product: W a = a^H W.
    const VecR& w = space_->weights();
    MatC lhs = w.asDiagonal() * mat_;
    return (lhs - lhs.adjoint()).cwiseAbs().maxCoeff() <=
           1e-12 * (1.0 + lhs.cwiseAbs().maxCoeff());
  }
  MatC dense() const override { return mat_; }

 private:
  SpacePtr space_;
  MatC mat_;
};

// Sparse operator on a space (full-matrix staggered fields with neighbour
// averaging assemble into this).
class SparseCoefficient final : public Coefficient {
 public:
  SparseCoefficient(SpacePtr space, SpMatC matrix, bool hermitian)
      : space_(std::move(space)), mat_(std::move(matrix)), hermitian_(hermitian) {
    if (mat_.rows() != space_->dim() || mat_.cols() != space_->dim())
      throw DimensionError("SparseCoefficient: shape mismatch");
    mat_.makeCompressed();
  }

  const SpacePtr& space() const override { return space_; }
  VecC apply(const VecC& x) const override {
    space_->check(x);
    return mat_ * x;
  }
  bool is_hermitian() const override { return hermitian_; }
  MatC dense() const override { return MatC(mat_); }
  const SpMatC& matrix() const { return mat_; }

 private:
  SpacePtr space_;
  SpMatC mat_;
  bool hermitian_;
};

inline CoefficientPtr identity_coefficient(const SpacePtr& space) {
  return std::make_shared<DiagonalCoefficient>(space, VecC::Ones(space->dim()));
}

inline CoefficientPtr scalar_coefficient(const SpacePtr& space, cplx value) {
  return std::make_shared<DiagonalCoefficient>(space,
                                               VecC::Constant(space->dim(), value));
}

}  // namespace cdhom

#endif  // CDHOM_COEFFICIENT_HPP
