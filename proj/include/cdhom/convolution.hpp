#ifndef CDHOM_CONVOLUTION_HPP
#define CDHOM_CONVOLUTION_HPP

#include <optional>
#include <utility>
#include <vector>

#include "cdhom/coefficient.hpp"
#include "cdhom/grid_complex.hpp"
#include "cdhom/profiles.hpp"

// Nonlocal convolution operators K f(x_i) = sum_j w_j k(n (x_i - x_j)) f(x_j)
// on staggered spaces, their operator-norm certificates, the constant-mean
// limit operator, and the resolvent coefficients (1 - K)^{-1}.
//
// Kernels depending on x1 only get a structured fast path: K factors through
// the transverse weighted sums per x1-slab, so assembly, application, norm
// and resolvent all reduce to dense linear algebra of size N1.

namespace cdhom {

struct SmallnessError : std::runtime_error {
  SmallnessError(const std::string& msg, double norm)
      : std::runtime_error(msg), measured_norm(norm) {}
  double measured_norm = 0.0;
};

struct Kernel {
  PeriodicFunction fn;
  bool x1_only = false;
  std::optional<cplx> exact_mean;

  static Kernel constant(cplx c) {
    return Kernel{[c](double, double, double) { return c; }, true, c};
  }
  static Kernel layered(const LayeredProfile& p) {
    return Kernel{[p](double x, double, double) { return p.eval(x); }, true,
                  p.mean()};
  }
  static Kernel general(PeriodicFunction f, bool depends_on_x1_only = false) {
    return Kernel{std::move(f), depends_on_x1_only, std::nullopt};
  }

  cplx mean(int resolution = 64) const {
    if (exact_mean) return *exact_mean;
    if (x1_only) {
      // 1-d midpoint quadrature suffices.
      cplx acc = 0.0;
      const int m = resolution * resolution;
      for (int i = 0; i < m; ++i) acc += fn((i + 0.5) / m, 0.0, 0.0);
      return acc / static_cast<double>(m);
    }
    return mean_value(fn, resolution);
  }
};

class ConvolutionOperator {
 public:
  // Per-component structured data: 1-d kernel matrix Mhat(i1,j1) =
  // k(n(x_i1 - x_j1)) w1(j1), the transverse weight vectors, and V_t.
  struct StructuredComp {
    MatC Mhat;
    VecR w1;
    VecR w23;    // flattened transverse weights, size ext1*ext2... (n2*n3)
    double Vt = 0.0;
    std::array<int, 3> ext{};
  };

  static ConvolutionOperator assemble(const Kernel& k, int n,
                                      const DiscreteComplex& dc, SpaceTag tag,
                                      bool enforce_smallness = true) {
    if (n < 1) throw std::invalid_argument("ConvolutionOperator: n >= 1");
    ConvolutionOperator op;
    op.space_ = dc.space(tag);
    op.n_ = n;
    const SpaceLayout& layout = dc.layout(tag);
    if (k.x1_only) {
      op.structured_ = true;
      for (std::size_t c = 0; c < layout.comps.size(); ++c)
        op.comps_.push_back(build_structured(k, n, layout.comps[c]));
    } else {
      op.structured_ = false;
      for (std::size_t c = 0; c < layout.comps.size(); ++c)
        op.dense_.push_back(build_dense(k, n, layout.comps[c]));
    }
    op.offsets_.assign(layout.offsets.begin(), layout.offsets.end());
    op.compute_norm();
    op.detect_hermitian();
    if (enforce_smallness && !(op.norm_ < 1.0))
      throw SmallnessError(
          "ConvolutionOperator: measured norm " + std::to_string(op.norm_) +
              " >= 1, resolvent theory unavailable",
          op.norm_);
    return op;
  }

  // The weak limit of the oscillating family: f |-> m(k) * integral of f,
  // per component. Realized as the structured operator with constant 1-d
  // kernel m(k).
  static ConvolutionOperator limit(const Kernel& k, const DiscreteComplex& dc,
                                   SpaceTag tag, bool enforce_smallness = true) {
    Kernel mean_kernel = Kernel::constant(k.mean());
    return assemble(mean_kernel, 1, dc, tag, enforce_smallness);
  }

  VecC apply(const VecC& x) const {
    space_->check(x);
    VecC y(x.size());
    for (std::size_t c = 0; c < offsets_.size(); ++c) {
      const Eigen::Index off = offsets_[c];
      if (structured_) {
        const StructuredComp& s = comps_[c];
        const Eigen::Index n1 = s.Mhat.rows();
        const Eigen::Index nt = s.w23.size();
        VecC slab(n1);
        for (Eigen::Index i1 = 0; i1 < n1; ++i1) {
          cplx acc = 0.0;
          for (Eigen::Index t = 0; t < nt; ++t)
            acc += s.w23(t) * x(off + i1 + n1 * t);
          slab(i1) = acc;
        }
        VecC out = s.Mhat * slab;
        for (Eigen::Index i1 = 0; i1 < n1; ++i1)
          for (Eigen::Index t = 0; t < nt; ++t) y(off + i1 + n1 * t) = out(i1);
      } else {
        const MatC& K = dense_[c];
        y.segment(off, K.rows()) = K * x.segment(off, K.rows());
      }
    }
    return y;
  }

  double norm() const { return norm_; }
  bool hermitian() const { return hermitian_; }
  bool structured() const { return structured_; }
  const SpacePtr& space() const { return space_; }
  int oscillation() const { return n_; }
  const std::vector<StructuredComp>& structured_comps() const { return comps_; }
  const std::vector<MatC>& dense_blocks() const { return dense_; }

  MatC dense_block(std::size_t c) const {
    if (!structured_) return dense_[c];
    const StructuredComp& s = comps_[c];
    const Eigen::Index n1 = s.Mhat.rows();
    const Eigen::Index nt = s.w23.size();
    MatC K(n1 * nt, n1 * nt);
    for (Eigen::Index j1 = 0; j1 < n1; ++j1)
      for (Eigen::Index jt = 0; jt < nt; ++jt)
        for (Eigen::Index i1 = 0; i1 < n1; ++i1)
          for (Eigen::Index it = 0; it < nt; ++it)
            K(i1 + n1 * it, j1 + n1 * jt) = s.Mhat(i1, j1) * s.w23(jt);
    return K;
  }

 private:
  static StructuredComp build_structured(const Kernel& k, int n,
                                          const CompGrid& cg) {
    StructuredComp s;
    s.ext = cg.ext;
    const int n1 = cg.ext[0];
    s.Mhat.resize(n1, n1);
    s.w1.resize(n1);
    for (int i = 0; i < n1; ++i) s.w1(i) = cg.axis_weight(0, i);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n1; ++j) {
        const double dx = cg.coord(0, i) - cg.coord(0, j);
        s.Mhat(i, j) = k.fn(frac_unit(n * dx), 0.0, 0.0) * s.w1(j);
      }
    const Eigen::Index nt =
        static_cast<Eigen::Index>(cg.ext[1]) * cg.ext[2];
    s.w23.resize(nt);
    for (int kz = 0; kz < cg.ext[2]; ++kz)
      for (int jy = 0; jy < cg.ext[1]; ++jy)
        s.w23(jy + static_cast<Eigen::Index>(cg.ext[1]) * kz) =
            cg.axis_weight(1, jy) * cg.axis_weight(2, kz);
    s.Vt = s.w23.sum();
    return s;
  }

  static MatC build_dense(const Kernel& k, int n, const CompGrid& cg) {
    const Eigen::Index sz = cg.size();
    MatC K(sz, sz);
    std::vector<std::array<double, 3>> pts(sz);
    std::vector<double> w(sz);
    for (int kz = 0; kz < cg.ext[2]; ++kz)
      for (int jy = 0; jy < cg.ext[1]; ++jy)
        for (int ix = 0; ix < cg.ext[0]; ++ix) {
          const Eigen::Index id = cg.index(ix, jy, kz);
          pts[id] = cg.point(ix, jy, kz);
          w[id] = cg.weight(ix, jy, kz);
        }
    for (Eigen::Index i = 0; i < sz; ++i)
      for (Eigen::Index j = 0; j < sz; ++j)
        K(i, j) = k.fn(frac_unit(n * (pts[i][0] - pts[j][0])),
                       frac_unit(n * (pts[i][1] - pts[j][1])),
                       frac_unit(n * (pts[i][2] - pts[j][2]))) *
                  w[j];
    return K;
  }

  void compute_norm() {
    norm_ = 0.0;
    for (std::size_t c = 0; c < offsets_.size(); ++c) {
      if (structured_) {
        // On slab-constant inputs K acts as c -> Vt * Mhat * c on the
        // w1-weighted space and vanishes on the complement, so the norm is
        // exactly that of the similarity-scaled small matrix.
        const StructuredComp& s = comps_[c];
        VecR sq = s.w1.array().sqrt().matrix();
        MatC scaled = sq.asDiagonal() * (s.Vt * s.Mhat) *
                      sq.cwiseInverse().asDiagonal();
        Eigen::BDCSVD<MatC> svd(scaled);
        if (svd.singularValues().size() > 0)
          norm_ = std::max(norm_, svd.singularValues()(0));
      } else {
        const MatC& K = dense_[c];
        // Weighted 2-norm via similarity with the full component weights.
        VecR wfull(K.rows());
        wfull = space_->weights().segment(offsets_[c], K.rows());
        VecR sq = wfull.array().sqrt().matrix();
        MatC scaled = sq.asDiagonal() * K * sq.cwiseInverse().asDiagonal();
        Eigen::BDCSVD<MatC> svd(scaled);
        if (svd.singularValues().size() > 0)
          norm_ = std::max(norm_, svd.singularValues()(0));
      }
    }
  }

  void detect_hermitian() {
    hermitian_ = true;
    for (std::size_t c = 0; c < offsets_.size() && hermitian_; ++c) {
      if (structured_) {
        const StructuredComp& s = comps_[c];
        // Weighted self-adjointness on slab functions: W1 (Vt Mhat) must be
        // Hermitian (the transverse part is a weighted mean, self-adjoint).
        MatC lhs = s.w1.asDiagonal() * (s.Vt * s.Mhat);
        hermitian_ = (lhs - lhs.adjoint()).cwiseAbs().maxCoeff() <=
                     1e-12 * (1.0 + lhs.cwiseAbs().maxCoeff());
      } else {
        const MatC& K = dense_[c];
        VecR wfull = space_->weights().segment(offsets_[c], K.rows());
        MatC lhs = wfull.asDiagonal() * K;
        hermitian_ = (lhs - lhs.adjoint()).cwiseAbs().maxCoeff() <=
                     1e-12 * (1.0 + lhs.cwiseAbs().maxCoeff());
      }
    }
  }

  SpacePtr space_;
  int n_ = 1;
  bool structured_ = false;
  bool hermitian_ = false;
  double norm_ = 0.0;
  std::vector<StructuredComp> comps_;
  std::vector<MatC> dense_;
  std::vector<Eigen::Index> offsets_;
};

inline ConvolutionOperator assemble_convolution(const Kernel& k, int n,
                                                const DiscreteComplex& dc,
                                                SpaceTag tag) {
  return ConvolutionOperator::assemble(k, n, dc, tag);
}

inline ConvolutionOperator limit_convolution(const Kernel& k,
                                             const DiscreteComplex& dc,
                                             SpaceTag tag) {
  return ConvolutionOperator::limit(k, dc, tag);
}

enum class ResolventMode { direct, neumann };

// (1 - K)^{-1} as a Coefficient. Direct mode uses a factorization (Woodbury
// through the slab reduction in the structured case); Neumann mode sums the
// series until the increment drops below 1e-12 relative.
class ResolventCoefficient final : public Coefficient {
 public:
  ResolventCoefficient(ConvolutionOperator K,
                       ResolventMode mode = ResolventMode::direct)
      : K_(std::move(K)), mode_(mode) {
    if (!(K_.norm() < 1.0))
      throw SmallnessError("ResolventCoefficient: |K| = " +
                               std::to_string(K_.norm()) + " >= 1",
                           K_.norm());
    if (mode_ == ResolventMode::direct) prepare_direct();
  }

  const SpacePtr& space() const override { return K_.space(); }
  bool is_hermitian() const override { return K_.hermitian(); }
  const ConvolutionOperator& inner() const { return K_; }
  ResolventMode mode() const { return mode_; }

  VecC apply(const VecC& x) const override {
    space()->check(x);
    if (mode_ == ResolventMode::neumann) return apply_neumann(x);
    return apply_direct(x);
  }

 private:
  void prepare_direct() {
    if (K_.structured()) {
      for (const auto& s : K_.structured_comps())
        lus_.emplace_back(MatC::Identity(s.Mhat.rows(), s.Mhat.rows()) -
                          s.Vt * s.Mhat);
    } else {
      for (const auto& Kb : K_.dense_blocks())
        lus_.emplace_back(MatC::Identity(Kb.rows(), Kb.cols()) - Kb);
    }
  }

  VecC apply_direct(const VecC& x) const {
    VecC y(x.size());
    Eigen::Index off = 0;
    if (K_.structured()) {
      // Woodbury: (1 - K)^{-1} f = f + broadcast(Mhat (1 - Vt Mhat)^{-1} s)
      // with s the transverse weighted sums of f.
      for (std::size_t c = 0; c < K_.structured_comps().size(); ++c) {
        const auto& s = K_.structured_comps()[c];
        const Eigen::Index n1 = s.Mhat.rows();
        const Eigen::Index nt = s.w23.size();
        VecC slab = VecC::Zero(n1);
        for (Eigen::Index i1 = 0; i1 < n1; ++i1)
          for (Eigen::Index t = 0; t < nt; ++t)
            slab(i1) += s.w23(t) * x(off + i1 + n1 * t);
        VecC corr = s.Mhat * lus_[c].solve(slab);
        for (Eigen::Index i1 = 0; i1 < n1; ++i1)
          for (Eigen::Index t = 0; t < nt; ++t)
            y(off + i1 + n1 * t) = x(off + i1 + n1 * t) + corr(i1);
        off += n1 * nt;
      }
    } else {
      for (std::size_t c = 0; c < K_.dense_blocks().size(); ++c) {
        const Eigen::Index sz = K_.dense_blocks()[c].rows();
        y.segment(off, sz) = lus_[c].solve(x.segment(off, sz));
        off += sz;
      }
    }
    return y;
  }

  VecC apply_neumann(const VecC& x) const {
    VecC y = x;
    VecC term = x;
    const double base = space()->norm(x);
    if (base == 0.0) return y;
    for (int it = 0; it < 10000; ++it) {
      term = K_.apply(term);
      y += term;
      if (space()->norm(term) <= 1e-12 * base) return y;
    }
    throw std::runtime_error(
        "ResolventCoefficient: Neumann series failed to converge (internal "
        "error, |K| < 1 was certified)");
  }

  ConvolutionOperator K_;
  ResolventMode mode_;
  std::vector<Eigen::PartialPivLU<MatC>> lus_;
};

inline std::shared_ptr<ResolventCoefficient> resolvent_coefficient(
    ConvolutionOperator K, ResolventMode mode = ResolventMode::direct) {
  return std::make_shared<ResolventCoefficient>(std::move(K), mode);
}

}  // namespace cdhom

#endif  // CDHOM_CONVOLUTION_HPP
