#ifndef CDHOM_CORE_HPP
#define CDHOM_CORE_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Finite-dimensional Hilbert-space algebra: weighted inner products,
// adjoints, reduced (restricted/corestricted) operators.
//
// Convention fixed project-wide: <x,y> = sum_i w_i x_i conj(y_i),
// i.e. conjugate-linear in the second slot.

namespace cdhom {

using cplx = std::complex<double>;
using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using SpMatC = Eigen::SparseMatrix<cplx>;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularOperatorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Relative singular-value threshold used for all rank decisions.
inline constexpr double kRankRelTol = 1e-10;

class HilbertSpace {
 public:
  HilbertSpace() = default;
  explicit HilbertSpace(VecR weights, std::string name = {})
      : weights_(std::move(weights)), name_(std::move(name)) {
    if ((weights_.array() <= 0.0).any())
      throw std::invalid_argument("HilbertSpace: weights must be positive");
  }
  static HilbertSpace unit(Eigen::Index dim, std::string name = {}) {
    return HilbertSpace(VecR::Ones(dim), std::move(name));
  }

  Eigen::Index dim() const { return weights_.size(); }
  const VecR& weights() const { return weights_; }
  const std::string& name() const { return name_; }

  cplx inner(const VecC& x, const VecC& y) const {
    check(x);
    check(y);
    return (x.array() * y.array().conjugate() * weights_.array()).sum();
  }
  double norm(const VecC& x) const { return std::sqrt(std::abs(inner(x, x))); }

  void check(const VecC& x) const {
    if (x.size() != dim())
      throw DimensionError("HilbertSpace: vector size " +
                           std::to_string(x.size()) + " != dim " +
                           std::to_string(dim()));
  }

 private:
  VecR weights_;
  std::string name_;
};

using SpacePtr = std::shared_ptr<const HilbertSpace>;

inline SpacePtr make_space(VecR weights, std::string name = {}) {
  return std::make_shared<HilbertSpace>(std::move(weights), std::move(name));
}
inline SpacePtr make_unit_space(Eigen::Index dim, std::string name = {}) {
  return std::make_shared<HilbertSpace>(HilbertSpace::unit(dim, std::move(name)));
}

// A linear map between two weighted spaces. The matrix is stored sparse;
// dense views are materialised on demand for block algebra.
class LinearOp {
 public:
  LinearOp() = default;
  LinearOp(SpacePtr domain, SpacePtr codomain, SpMatC matrix)
      : dom_(std::move(domain)), cod_(std::move(codomain)), mat_(std::move(matrix)) {
    if (mat_.rows() != cod_->dim() || mat_.cols() != dom_->dim())
      throw DimensionError("LinearOp: matrix shape (" + std::to_string(mat_.rows()) +
                           "," + std::to_string(mat_.cols()) +
                           ") does not match spaces (" + std::to_string(cod_->dim()) +
                           "," + std::to_string(dom_->dim()) + ")");
    mat_.makeCompressed();
  }
  LinearOp(SpacePtr domain, SpacePtr codomain, const MatC& matrix)
      : LinearOp(std::move(domain), std::move(codomain), SpMatC(matrix.sparseView())) {}

  static LinearOp identity(const SpacePtr& space) {
    SpMatC id(space->dim(), space->dim());
    id.setIdentity();
    return LinearOp(space, space, std::move(id));
  }

  const SpacePtr& domain() const { return dom_; }
  const SpacePtr& codomain() const { return cod_; }
  const SpMatC& matrix() const { return mat_; }
  MatC dense() const { return MatC(mat_); }
  Eigen::Index rows() const { return mat_.rows(); }
  Eigen::Index cols() const { return mat_.cols(); }

  VecC apply(const VecC& x) const {
    dom_->check(x);
    return mat_ * x;
  }
  VecC operator()(const VecC& x) const { return apply(x); }

 private:
  SpacePtr dom_;
  SpacePtr cod_;
  SpMatC mat_;
};

inline LinearOp make_zero_op(SpacePtr domain, SpacePtr codomain) {
  SpMatC z(codomain->dim(), domain->dim());
  return LinearOp(std::move(domain), std::move(codomain), std::move(z));
}

// Weighted adjoint: M* = W_dom^{-1} M^H W_cod, so that
// <M x, y>_cod = <x, M* y>_dom.
inline LinearOp adjoint(const LinearOp& op) {
  const VecR& wd = op.domain()->weights();
  const VecR& wc = op.codomain()->weights();
  // Scale rows by 1/w_dom and columns by w_cod.
  SpMatC scaled = op.matrix().adjoint();
  for (int k = 0; k < scaled.outerSize(); ++k)
    for (SpMatC::InnerIterator it(scaled, k); it; ++it)
      it.valueRef() *= wc(it.col()) / wd(it.row());
  return LinearOp(op.codomain(), op.domain(), std::move(scaled));
}

// Composition g after f.
inline LinearOp compose(const LinearOp& g, const LinearOp& f) {
  if (g.domain()->dim() != f.codomain()->dim())
    throw DimensionError("compose: inner dimensions do not match");
  SpMatC m = g.matrix() * f.matrix();
  return LinearOp(f.domain(), g.codomain(), std::move(m));
}

namespace detail {

inline VecR sqrt_weights(const HilbertSpace& s) {
  return s.weights().array().sqrt().matrix();
}

// Thin SVD with a workaround for the Eigen 3.4.0 BDCSVD defect that yields
// NaN singular vectors on complex matrices with clustered singular values:
// real-valued inputs take the (sound) real BDCSVD, and any NaN from the
// complex divide-and-conquer path falls back to Jacobi.
struct ThinSvd {
  VecR s;
  MatC U;
  MatC V;
};

inline ThinSvd thin_svd(const MatC& m) {
  ThinSvd out;
  const double scale = m.cwiseAbs().maxCoeff();
  if (m.imag().cwiseAbs().maxCoeff() <= 1e-15 * (scale + 1e-300)) {
    Eigen::MatrixXd re = m.real();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(re,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!svd.matrixU().hasNaN() && !svd.matrixV().hasNaN()) {
      out.s = svd.singularValues();
      out.U = svd.matrixU().cast<cplx>();
      out.V = svd.matrixV().cast<cplx>();
      return out;
    }
  } else {
    Eigen::BDCSVD<MatC> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (!svd.matrixU().hasNaN() && !svd.matrixV().hasNaN()) {
      out.s = svd.singularValues();
      out.U = svd.matrixU();
      out.V = svd.matrixV();
      return out;
    }
  }
  Eigen::JacobiSVD<MatC> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.s = svd.singularValues();
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  return out;
}

}  // namespace detail

// Reduced operator: the bijection ker(op)^bot -> rge(op), realised through a
// weighted SVD. Columns of ker_perp_basis()/range_basis() are orthonormal in
// the weighted inner products of the domain/codomain.
class ReducedOp {
 public:
  explicit ReducedOp(const LinearOp& op, double rel_tol = kRankRelTol)
      : dom_(op.domain()), cod_(op.codomain()) {
    const VecR sd = detail::sqrt_weights(*dom_);
    const VecR sc = detail::sqrt_weights(*cod_);
    MatC scaled = sc.asDiagonal() * op.dense() * sd.cwiseInverse().asDiagonal();
    detail::ThinSvd svd = detail::thin_svd(scaled);
    const VecR& sv = svd.s;
    const double cutoff = sv.size() > 0 ? rel_tol * sv(0) : 0.0;
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > cutoff && sv(r) > 0.0) ++r;
    rank_ = r;
    singular_values_ = sv.head(r);
    ker_perp_basis_ = sd.cwiseInverse().asDiagonal() * svd.V.leftCols(r);
    range_basis_ = sc.cwiseInverse().asDiagonal() * svd.U.leftCols(r);
  }

  const SpacePtr& domain() const { return dom_; }
  const SpacePtr& codomain() const { return cod_; }
  Eigen::Index rank() const { return rank_; }
  Eigen::Index nullity() const { return dom_->dim() - rank_; }
  const VecR& singular_values() const { return singular_values_; }

  // Orthonormal basis (weighted) of ker(op)^bot, as columns.
  const MatC& ker_perp_basis() const { return ker_perp_basis_; }
  // Orthonormal basis (weighted) of rge(op), as columns.
  const MatC& range_basis() const { return range_basis_; }

  // Smallest nonzero singular value; the norm of the reduced inverse is its
  // reciprocal.
  double smallest_singular_value() const {
    if (rank_ == 0) return 0.0;
    return singular_values_(rank_ - 1);
  }

  // Coordinates of x in the ker-perp basis (weighted projection).
  VecC domain_coords(const VecC& x) const {
    return ker_perp_basis_.adjoint() * dom_->weights().asDiagonal() * x;
  }
  VecC range_coords(const VecC& y) const {
    return range_basis_.adjoint() * cod_->weights().asDiagonal() * y;
  }
  VecC project_range(const VecC& y) const { return range_basis_ * range_coords(y); }
  VecC project_ker_perp(const VecC& x) const {
    return ker_perp_basis_ * domain_coords(x);
  }

  // Solves op x = r for the unique x in ker(op)^bot; r must lie in rge(op).
  VecC solve(const VecC& r) const {
    VecC c = range_coords(r);
    c.array() /= singular_values_.array();
    return ker_perp_basis_ * c;
  }

  // Forward application restricted to the stored bases: coordinates in the
  // ker-perp basis map to range-basis coordinates scaled by the singular
  // values.
  VecC apply_from_domain_coords(const VecC& c) const {
    return range_basis_ * (singular_values_.array() * c.array()).matrix();
  }

  // Dual map of the restriction: r |-> (v |-> <r, op v>), represented in the
  // ker-perp basis of the domain. Its inverse recovers the range element
  // pairing to a given functional; this is the discrete counterpart of
  // inverting the diamond map.
  VecC dual_pairing(const VecC& r) const {
    // <r, op v> with v = ker_perp_basis * c equals (S^H B^H W r)^H c, so the
    // representing vector in coordinates is S * range_coords(r).
    return (singular_values_.array() * range_coords(r).array()).matrix();
  }
  // Given the coordinate representation F_c of a functional on ker(op)^bot
  // (F(v) = <F_c, coords(v)> euclidean), returns q in rge(op) with
  // <q, op v> = F(v) for all such v.
  VecC dual_solve_coords(const VecC& F_c) const {
    return range_basis_ * (F_c.array() / singular_values_.array()).matrix();
  }

 private:
  SpacePtr dom_;
  SpacePtr cod_;
  Eigen::Index rank_ = 0;
  VecR singular_values_;
  MatC ker_perp_basis_;
  MatC range_basis_;
};

// Smallest eigenvalue of the Hermitian part of a dense operator in the
// weighted inner product of `space`:  min spec( (W^{1/2}(A + A*)W^{-1/2})/2 )
// where A* is the weighted adjoint.
inline double hermitian_part_floor(const MatC& a, const HilbertSpace& space) {
  if (a.rows() != a.cols() || a.rows() != space.dim())
    throw DimensionError("hermitian_part_floor: shape mismatch");
  const VecR s = detail::sqrt_weights(space);
  MatC scaled = s.asDiagonal() * a * s.cwiseInverse().asDiagonal();
  MatC herm = 0.5 * (scaled + scaled.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Same, for an operator already expressed in an orthonormal basis (euclidean).
inline double hermitian_part_floor(const MatC& a) {
  MatC herm = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<MatC> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace cdhom

#endif  // CDHOM_CORE_HPP
