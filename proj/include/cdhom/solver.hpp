#ifndef CDHOM_SOLVER_HPP
#define CDHOM_SOLVER_HPP

#include <optional>
#include <utility>

#include "cdhom/block.hpp"
#include "cdhom/coefficient.hpp"
#include "cdhom/grid_complex.hpp"

// Variational solver for the curl-div system
//   <a curl u, curl phi> + <b div u, div phi> = f(phi) + g(phi)
// on the face space, via the constructive split u = u1 + u2 with
// u1 in rge(C) and u2 in rge(D*), plus a monolithic oracle and the
// continuity-estimate verifier.

namespace cdhom {

struct CoercivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdmissibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Compression B^H W a(B) of a coefficient to the (weighted-orthonormal)
// column span of B.
inline MatC compress_coefficient(const Coefficient& a, const MatC& basis,
                                 const VecR& weights) {
  MatC img(basis.rows(), basis.cols());
  for (Eigen::Index j = 0; j < basis.cols(); ++j)
    img.col(j) = a.apply(basis.col(j));
  return basis.adjoint() * weights.asDiagonal() * img;
}

// Dual norm of the antilinear functional F(y) = <riesz, A y> over the graph
// norm sqrt(|y|^2 + |A y|^2), computed through the reduced factorization of
// A: with r = range coordinates of riesz and s the singular values,
// sup |F| = sqrt(sum s_i^2 |r_i|^2 / (1 + s_i^2)).
inline double dual_norm(const ReducedOp& red, const VecC& riesz) {
  VecC r = red.range_coords(riesz);
  const VecR& s = red.singular_values();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double si2 = s(i) * s(i);
    acc += si2 * std::norm(r(i)) / (1.0 + si2);
  }
  return std::sqrt(acc);
}

// Core three-factor solve in reduced coordinates: given F_c with
// F(v_i) = F_c(i) for the ker-perp basis vectors v_i of A, returns the unique
// x perpendicular to ker(A) with <a A x, A v> = F(v) for all v.
//   Step 1 inverts the dual map (divide by singular values),
//   Step 2 inverts the compressed coefficient on rge(A),
//   Step 3 inverts the reduced operator itself.
inline VecC lax_milgram_coords(const ReducedOp& red, const Coefficient& a,
                               const VecC& F_c, double min_floor = 1e-12) {
  if (F_c.size() != red.rank())
    throw DimensionError("lax_milgram_coords: coordinate size != rank");
  const VecR& s = red.singular_values();
  VecC q = (F_c.array() / s.array().cast<cplx>()).matrix();
  MatC a_c = compress_coefficient(a, red.range_basis(),
                                  red.codomain()->weights());
  const double floor = hermitian_part_floor(a_c);
  if (floor < min_floor)
    throw CoercivityError("lax_milgram: compressed coefficient floor " +
                          std::to_string(floor) + " below tolerance");
  Eigen::PartialPivLU<MatC> lu(a_c);
  VecC w = lu.solve(q);
  return red.ker_perp_basis() * (w.array() / s.array().cast<cplx>()).matrix();
}

// F given as a Riesz vector on the domain of A: F(y) = <riesz, y>.
inline VecC solve_lax_milgram(const ReducedOp& red, const Coefficient& a,
                              const VecC& riesz_F, double min_floor = 1e-12) {
  return lax_milgram_coords(red, a, red.domain_coords(riesz_F), min_floor);
}

inline VecC solve_lax_milgram(const LinearOp& A, const Coefficient& a,
                              const VecC& riesz_F, double min_floor = 1e-12) {
  return solve_lax_milgram(ReducedOp(A), a, riesz_F, min_floor);
}

// F in flux form: F(y) = <h, A y> with h in the codomain of A.
inline VecC solve_lax_milgram_flux(const ReducedOp& red, const Coefficient& a,
                                   const VecC& h, double min_floor = 1e-12) {
  VecC F_c = (red.singular_values().array().cast<cplx>() *
              red.range_coords(h).array())
                 .matrix();
  return lax_milgram_coords(red, a, F_c, min_floor);
}

// Right-hand side of the curl-div problem:
//   f(phi) = <f, curl phi>  with f on the edge space,
//   g(phi) = <g, div phi>   with g on the cell space.
// Dual norms are over the respective graph norms.
struct RightHandSide {
  VecC f;  // edges
  VecC g;  // cells
  double norm_f = 0.0;
  double norm_g = 0.0;
};

struct Solution {
  StaggeredField u;        // face field, u = u1 + u2
  VecC u1;                 // in rge(C)
  VecC u2;                 // in rge(D*)
  VecC flux_curl;          // a curl u (edges)
  VecC flux_div;           // b div u (cells)
  double residual_f = 0.0;  // |C(a curl u - f)| / (1 + |f|)
  double residual_g = 0.0;  // |D*(b div u - g)| / (1 + |g|)
  double norm_u = 0.0;
  double norm_curl = 0.0;  // |curl u|
  double norm_div = 0.0;   // |div u|
  double bound = 0.0;      // (1/alpha + beta) * c * (|f|_* + |g|_*)
};

// Cached reduced factorizations of the two sub-problems. Construction cost is
// two dense SVDs; desk scale only. The large-grid series path bypasses this
// through the iterative solver.
class CurlDivSystem {
 public:
  explicit CurlDivSystem(const DiscreteComplex& dc)
      : dc_(&dc),
        Cstar_(adjoint(dc.C)),
        Dstar_(adjoint(dc.D)),
        red_Cstar_(Cstar_),
        red_D_(dc.D) {}

  const DiscreteComplex& complex() const { return *dc_; }
  const LinearOp& Cstar() const { return Cstar_; }
  const LinearOp& Dstar() const { return Dstar_; }
  const ReducedOp& reduced_Cstar() const { return red_Cstar_; }
  const ReducedOp& reduced_D() const { return red_D_; }

  RightHandSide make_rhs(VecC f_edges, VecC g_cells) const {
    RightHandSide r;
    r.f = std::move(f_edges);
    r.g = std::move(g_cells);
    dc_->edges->check(r.f);
    dc_->cells->check(r.g);
    r.norm_f = dual_norm(red_Cstar_, r.f);
    r.norm_g = dual_norm(red_D_, r.g);
    return r;
  }

 private:
  const DiscreteComplex* dc_;
  LinearOp Cstar_;
  LinearOp Dstar_;
  ReducedOp red_Cstar_;
  ReducedOp red_D_;
};

enum class AdmissibilityPolicy {
  dense,           // full block decomposition of a^{-1} and b
  diagonal_bounds, // entrywise Hermitian bounds, diagonal coefficients only
  trust,           // caller certified admissibility elsewhere
};

struct CurlDivAdmissibility {
  AdmissibilityReport a_inv;
  AdmissibilityReport b;
  bool ok = false;
};

namespace detail {

// For a Hermitian coefficient with spectrum in [lo, hi], 0 < lo, membership
// in M(alpha, beta, .) holds for every splitting pair whenever
// alpha <= lo and hi <= beta; compressions preserve spectral bounds, so all
// four floors are bounded by the entrywise extremes.
inline AdmissibilityReport diagonal_membership(const VecC& vals,
                                               const AdmissibilityParams& p,
                                               bool invert) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool real = true;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    cplx v = invert ? 1.0 / vals(i) : vals(i);
    lo = std::min(lo, v.real());
    hi = std::max(hi, v.real());
    if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v.real()))) real = false;
  }
  AdmissibilityReport rep;
  rep.floor_a00 = lo;
  rep.floor_a00_inv = hi > 0.0 ? 1.0 / hi : 0.0;
  rep.floor_ainv_11 = rep.floor_a00_inv;
  rep.floor_ainv_11_inv = lo;
  rep.member = real && lo > 0.0 && p.alpha <= lo + 1e-12 &&
               hi <= p.beta + 1e-12;
  return rep;
}

}  // namespace detail

// Checks a^{-1} in M(alpha, beta, (G, C)) and b in M(alpha, beta, (D, 0)).
inline CurlDivAdmissibility check_curldiv_admissibility(
    const DiscreteComplex& dc, const Coefficient& a, const Coefficient& b,
    const AdmissibilityParams& params,
    AdmissibilityPolicy policy = AdmissibilityPolicy::dense) {
  CurlDivAdmissibility rep;
  if (policy == AdmissibilityPolicy::trust) {
    rep.ok = true;
    return rep;
  }
  if (policy == AdmissibilityPolicy::diagonal_bounds) {
    auto da = a.diagonal();
    auto db = b.diagonal();
    if (!da || !db)
      throw std::invalid_argument(
          "check_curldiv_admissibility: diagonal_bounds needs diagonal "
          "coefficients");
    rep.a_inv = detail::diagonal_membership(*da, params, /*invert=*/true);
    rep.b = detail::diagonal_membership(*db, params, /*invert=*/false);
    rep.ok = rep.a_inv.member && rep.b.member;
    return rep;
  }
  // Dense path: invert a, decompose against the (grad, curl) pair on edges;
  // the pair for b is degenerate (A1 = 0 on cells).
  ComplexPair gc(dc.G, dc.C);
  MatC a_inv = detail::inverse_checked(a.dense(), "check_curldiv_admissibility (a)");
  DenseCoefficient ainv_coef(dc.edges, std::move(a_inv));
  rep.a_inv = admissibility_check(ainv_coef, params, gc);
  ComplexPair d0(dc.D, make_zero_op(dc.cells, make_unit_space(0)));
  rep.b = admissibility_check(b, params, d0);
  rep.ok = rep.a_inv.member && rep.b.member;
  return rep;
}

inline Solution solve_curldiv(const CurlDivSystem& sys, const Coefficient& a,
                              const Coefficient& b, const RightHandSide& rhs,
                              const AdmissibilityParams& params,
                              AdmissibilityPolicy policy = AdmissibilityPolicy::dense) {
  const DiscreteComplex& dc = sys.complex();
  CurlDivAdmissibility adm =
      check_curldiv_admissibility(dc, a, b, params, policy);
  if (!adm.ok)
    throw AdmissibilityError(
        "solve_curldiv: coefficient pair not admissible at the given "
        "(alpha, beta)");

  Solution sol;
  sol.u1 = solve_lax_milgram_flux(sys.reduced_Cstar(), a, rhs.f);
  sol.u2 = solve_lax_milgram_flux(sys.reduced_D(), b, rhs.g);
  sol.u = StaggeredField{SpaceTag::face, sol.u1 + sol.u2};

  VecC curl_u = sys.Cstar().apply(sol.u.values);
  VecC div_u = dc.D.apply(sol.u.values);
  sol.flux_curl = a.apply(curl_u);
  sol.flux_div = b.apply(div_u);
  sol.residual_f = dc.faces->norm(dc.C.apply(sol.flux_curl - rhs.f)) /
                   (1.0 + dc.edges->norm(rhs.f));
  sol.residual_g = dc.faces->norm(sys.Dstar().apply(sol.flux_div - rhs.g)) /
                   (1.0 + dc.cells->norm(rhs.g));
  sol.norm_u = dc.faces->norm(sol.u.values);
  sol.norm_curl = dc.edges->norm(curl_u);
  sol.norm_div = dc.cells->norm(div_u);

  const double c1 = sys.reduced_Cstar().smallest_singular_value();
  const double c2 = sys.reduced_D().smallest_singular_value();
  const double cc = std::max((1.0 + 1.0 / c1) * std::sqrt(1.0 + 1.0 / (c1 * c1)),
                             (1.0 + 1.0 / c2) * std::sqrt(1.0 + 1.0 / (c2 * c2)));
  sol.bound = (1.0 / params.alpha + params.beta) * cc * (rhs.norm_f + rhs.norm_g);
  return sol;
}

// Independent oracle: assembles the combined form on the explicit basis of
// rge(C) (+) rge(D*) and solves the full system directly.
inline Solution oracle_monolithic_solve(const CurlDivSystem& sys,
                                        const Coefficient& a,
                                        const Coefficient& b,
                                        const RightHandSide& rhs) {
  const DiscreteComplex& dc = sys.complex();
  const MatC& Bc = sys.reduced_Cstar().ker_perp_basis();  // rge(C)
  const MatC& Bd = sys.reduced_D().ker_perp_basis();      // rge(D*)
  const Eigen::Index rc = Bc.cols(), rd = Bd.cols();
  MatC B(Bc.rows(), rc + rd);
  B << Bc, Bd;

  MatC CB(dc.edges->dim(), B.cols());
  MatC DB(dc.cells->dim(), B.cols());
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    CB.col(j) = sys.Cstar().apply(B.col(j));
    DB.col(j) = dc.D.apply(B.col(j));
  }
  MatC aCB(CB.rows(), CB.cols()), bDB(DB.rows(), DB.cols());
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    aCB.col(j) = a.apply(CB.col(j));
    bDB.col(j) = b.apply(DB.col(j));
  }
  const VecR& we = dc.edges->weights();
  const VecR& wc = dc.cells->weights();
  MatC M = CB.adjoint() * we.asDiagonal() * aCB +
           DB.adjoint() * wc.asDiagonal() * bDB;
  VecC F = CB.adjoint() * we.asDiagonal() * rhs.f +
           DB.adjoint() * wc.asDiagonal() * rhs.g;
  Eigen::PartialPivLU<MatC> lu(M);
  const double pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (pivot <= kRankRelTol * (M.cwiseAbs().maxCoeff() + 1e-300))
    throw SingularOperatorError("oracle_monolithic_solve: singular system");
  VecC y = lu.solve(F);

  Solution sol;
  sol.u1 = Bc * y.head(rc);
  sol.u2 = Bd * y.tail(rd);
  sol.u = StaggeredField{SpaceTag::face, sol.u1 + sol.u2};
  VecC curl_u = sys.Cstar().apply(sol.u.values);
  VecC div_u = dc.D.apply(sol.u.values);
  sol.flux_curl = a.apply(curl_u);
  sol.flux_div = b.apply(div_u);
  sol.residual_f = dc.faces->norm(dc.C.apply(sol.flux_curl - rhs.f)) /
                   (1.0 + dc.edges->norm(rhs.f));
  sol.residual_g = dc.faces->norm(sys.Dstar().apply(sol.flux_div - rhs.g)) /
                   (1.0 + dc.cells->norm(rhs.g));
  sol.norm_u = dc.faces->norm(sol.u.values);
  sol.norm_curl = dc.edges->norm(curl_u);
  sol.norm_div = dc.cells->norm(div_u);
  return sol;
}

struct EstimateReport {
  double lhs = 0.0;    // |u| + |curl u| + |div u|
  double rhs = 0.0;    // (1/alpha + beta) * c * (|f|_* + |g|_*)
  double slack = 0.0;  // rhs - lhs
  double c = 0.0;
  bool params_admissible = false;
  bool holds = false;   // only asserted when params_admissible
};

// The continuity estimate. The constant c is computed from the reduced
// inverse norms: with c1, c2 the smallest nonzero singular values of curl*
// and div, the sub-solves give |A u_i| <= coercivity^{-1} sqrt(1+1/c_i^2)
// |functional| and |u_i| <= |A u_i| / c_i, and the coercivity floors are at
// least 1/beta resp. alpha under admissibility; folding the worst factors
// into c keeps the reported bound valid with nonnegative slack.
inline EstimateReport verify_continuity_estimate(
    const Solution& sol, const AdmissibilityParams& params,
    const CurlDivSystem& sys, const RightHandSide& rhs,
    const CurlDivAdmissibility& adm) {
  EstimateReport rep;
  const double c1 = sys.reduced_Cstar().smallest_singular_value();
  const double c2 = sys.reduced_D().smallest_singular_value();
  rep.c = std::max((1.0 + 1.0 / c1) * std::sqrt(1.0 + 1.0 / (c1 * c1)),
                   (1.0 + 1.0 / c2) * std::sqrt(1.0 + 1.0 / (c2 * c2)));
  rep.lhs = sol.norm_u + sol.norm_curl + sol.norm_div;
  rep.rhs = (1.0 / params.alpha + params.beta) * rep.c *
            (rhs.norm_f + rhs.norm_g);
  rep.slack = rep.rhs - rep.lhs;
  rep.params_admissible = adm.ok;
  rep.holds = rep.params_admissible && rep.slack >= -1e-10 * (1.0 + rep.rhs);
  return rep;
}

}  // namespace cdhom

#endif  // CDHOM_SOLVER_HPP
