#ifndef CDHOM_ITERATIVE_HPP
#define CDHOM_ITERATIVE_HPP

#include <functional>

#include "cdhom/solver.hpp"

// Iterative fallback for grids too large for dense reduced factorizations.
// Both sub-problems of the split become consistent singular systems on the
// face space:
//   C a C* u1 = C f     with u1 in rge(C),
//   D* b D u2 = D* g    with u2 in rge(D*).
// Each operator preserves its range, the right-hand side lies in it, and the
// operator is self-adjoint positive there (Hermitian coercive coefficients
// required), so preconditioned CG started at zero stays in the right subspace.

namespace cdhom {

struct PcgResult {
  VecC x;
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// CG in the weighted inner product of `space`, with a positive diagonal
// (Jacobi) preconditioner.
inline PcgResult weighted_pcg(const std::function<VecC(const VecC&)>& apply,
                              const HilbertSpace& space, const VecC& rhs,
                              const VecR& jacobi, double tol = 1e-12,
                              int max_iter = 20000) {
  PcgResult res;
  res.x = VecC::Zero(rhs.size());
  VecC r = rhs;
  VecC z = (r.array() / jacobi.array().cast<cplx>()).matrix();
  VecC p = z;
  const double rhs_norm = space.norm(rhs);
  if (rhs_norm == 0.0) {
    res.converged = true;
    return res;
  }
  cplx rz = space.inner(z, r);
  for (int it = 0; it < max_iter; ++it) {
    VecC Ap = apply(p);
    cplx pAp = space.inner(Ap, p);
    if (std::abs(pAp) == 0.0) break;
    cplx alpha = rz / pAp;
    res.x += alpha * p;
    r -= alpha * Ap;
    res.iterations = it + 1;
    res.rel_residual = space.norm(r) / rhs_norm;
    if (res.rel_residual <= tol) {
      res.converged = true;
      break;
    }
    z = (r.array() / jacobi.array().cast<cplx>()).matrix();
    cplx rz_new = space.inner(z, r);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return res;
}

// Diagonal of C a C* (resp. D* b D) when a (resp. b) is diagonal; positive
// for positive coefficients, used as the Jacobi preconditioner. For nonlocal
// coefficients the local identity part dominates, so the same diagonal with
// a == 1 is used.
inline VecR normal_operator_diagonal(const LinearOp& A_star,
                                     const std::optional<VecC>& coef_diag,
                                     const HilbertSpace& mid) {
  // Rows of A_star index the flux space; diag_i = sum_k w_flux(k)/w_mid(i)
  // * coef(k) * |A_star(k,i)|^2 would be the weighted normal diagonal; using
  // the unweighted-adjoint structure directly: (A* c A)_ii with A = A_star.
  const SpMatC& m = A_star.matrix();
  const VecR& w_dom = A_star.domain()->weights();
  const VecR& w_cod = A_star.codomain()->weights();
  VecR diag = VecR::Zero(m.cols());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMatC::InnerIterator it(m, k); it; ++it) {
      const double c =
          coef_diag ? std::max((*coef_diag)(it.row()).real(), 1e-30) : 1.0;
      diag(it.col()) += c * w_cod(it.row()) * std::norm(it.value());
    }
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    diag(i) = std::max(diag(i) / w_dom(i), 1e-30);
  (void)mid;
  return diag;
}

struct IterativeSolveStats {
  PcgResult curl_part;
  PcgResult div_part;
};

// Same contract as solve_curldiv, without the dense factorizations and
// without the dual-norm/estimate fields (left zero). Coefficients must be
// Hermitian with positive floors; admissibility is the caller's
// responsibility (diagonal_bounds or trust).
inline Solution solve_curldiv_iterative(const DiscreteComplex& dc,
                                        const Coefficient& a,
                                        const Coefficient& b,
                                        const VecC& f_edges,
                                        const VecC& g_cells,
                                        double tol = 1e-12,
                                        IterativeSolveStats* stats = nullptr) {
  if (!a.is_hermitian() || !b.is_hermitian())
    throw std::invalid_argument(
        "solve_curldiv_iterative: requires Hermitian coefficients");
  LinearOp Cstar = adjoint(dc.C);
  LinearOp Dstar = adjoint(dc.D);

  auto apply_curl = [&](const VecC& x) {
    return dc.C.apply(a.apply(Cstar.apply(x)));
  };
  auto apply_div = [&](const VecC& x) {
    return Dstar.apply(b.apply(dc.D.apply(x)));
  };
  VecR jac_curl = normal_operator_diagonal(Cstar, a.diagonal(), *dc.faces);
  VecR jac_div = normal_operator_diagonal(dc.D, b.diagonal(), *dc.faces);

  PcgResult r1 = weighted_pcg(apply_curl, *dc.faces, dc.C.apply(f_edges),
                              jac_curl, tol);
  PcgResult r2 = weighted_pcg(apply_div, *dc.faces, Dstar.apply(g_cells),
                              jac_div, tol);
  if (stats) {
    stats->curl_part = r1;
    stats->div_part = r2;
  }

  Solution sol;
  sol.u1 = std::move(r1.x);
  sol.u2 = std::move(r2.x);
  sol.u = StaggeredField{SpaceTag::face, sol.u1 + sol.u2};
  VecC curl_u = Cstar.apply(sol.u.values);
  VecC div_u = dc.D.apply(sol.u.values);
  sol.flux_curl = a.apply(curl_u);
  sol.flux_div = b.apply(div_u);
  sol.residual_f = dc.faces->norm(dc.C.apply(sol.flux_curl - f_edges)) /
                   (1.0 + dc.edges->norm(f_edges));
  sol.residual_g = dc.faces->norm(Dstar.apply(sol.flux_div - g_cells)) /
                   (1.0 + dc.cells->norm(g_cells));
  sol.norm_u = dc.faces->norm(sol.u.values);
  sol.norm_curl = dc.edges->norm(curl_u);
  sol.norm_div = dc.cells->norm(div_u);
  return sol;
}

}  // namespace cdhom

#endif  // CDHOM_ITERATIVE_HPP
