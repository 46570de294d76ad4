#include <catch2/catch_amalgamated.hpp>

#include "cdhom/iterative.hpp"
#include "cdhom/probes.hpp"
#include "cdhom/series.hpp"
#include "cdhom/solver.hpp"

using namespace cdhom;
using Catch::Approx;

namespace {

VecC random_vec(Eigen::Index n, std::uint64_t seed) {
  detail::DeterministicGaussian g(seed);
  VecC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g.complex_normal();
  return v;
}

// Positive real diagonal coefficient with entries in [lo, hi].
CoefficientPtr random_diag(const SpacePtr& s, std::uint64_t seed, double lo,
                           double hi) {
  detail::DeterministicGaussian g(seed);
  VecC v(s->dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double u = 0.5 + 0.5 * std::tanh(g());
    v(i) = lo + (hi - lo) * u;
  }
  return std::make_shared<DiagonalCoefficient>(s, std::move(v));
}

double rel_diff(const HilbertSpace& s, const VecC& x, const VecC& y) {
  return s.norm(x - y) / (1.0 + s.norm(y));
}

}  // namespace

TEST_CASE("lax-milgram three-factor solve") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(3));
  LinearOp Cstar = adjoint(dc.C);
  ReducedOp red(Cstar);

  SECTION("identity coefficient, manufactured flux rhs recovers x0") {
    VecC x0 = red.project_ker_perp(random_vec(dc.faces->dim(), 11));
    // F(y) = <C* x0, C* y>  ==  flux form with h = C* x0 and a = 1.
    VecC h = Cstar.apply(x0);
    VecC x = solve_lax_milgram_flux(red, *identity_coefficient(dc.edges), h);
    REQUIRE(rel_diff(*dc.faces, x, x0) < 1e-11);
  }

  SECTION("zero functional gives zero") {
    VecC x = solve_lax_milgram(red, *identity_coefficient(dc.edges),
                               VecC::Zero(dc.faces->dim()));
    REQUIRE(dc.faces->norm(x) < 1e-13);
  }

  SECTION("random positive coefficient vs dense normal-equation oracle") {
    CoefficientPtr a = random_diag(dc.edges, 12, 0.5, 3.0);
    VecC riesz = random_vec(dc.faces->dim(), 13);
    VecC x = solve_lax_milgram(red, *a, riesz);

    // Oracle: solve B^H W_e a C*(B) c = domain coords of riesz directly over
    // the ker-perp basis, bypassing the three-factor route.
    const MatC& B = red.ker_perp_basis();
    MatC CB(dc.edges->dim(), B.cols());
    for (Eigen::Index j = 0; j < B.cols(); ++j)
      CB.col(j) = Cstar.apply(B.col(j));
    MatC aCB(CB.rows(), CB.cols());
    for (Eigen::Index j = 0; j < B.cols(); ++j)
      aCB.col(j) = a->apply(CB.col(j));
    MatC M = CB.adjoint() * dc.edges->weights().asDiagonal() * aCB;
    VecC F = red.domain_coords(riesz);
    VecC x_oracle = B * M.partialPivLu().solve(F);
    REQUIRE(rel_diff(*dc.faces, x, x_oracle) < 1e-9);
  }

  SECTION("coercivity failure raises") {
    CoefficientPtr bad = scalar_coefficient(dc.edges, -1.0);
    REQUIRE_THROWS_AS(
        solve_lax_milgram(red, *bad, random_vec(dc.faces->dim(), 14)),
        CoercivityError);
  }
}

TEST_CASE("dual norm formula") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(2));
  ReducedOp red(adjoint(dc.C));
  VecC r = random_vec(dc.edges->dim(), 21);
  const double nrm = dual_norm(red, r);

  // Achievability: the maximizing direction in ker-perp coordinates is
  // q_i / (1 + s_i^2) with q = S * range_coords(r).
  VecC q = (red.singular_values().array().cast<cplx>() *
            red.range_coords(r).array())
               .matrix();
  VecC c = (q.array() / (1.0 + red.singular_values().array().square()).cast<cplx>())
               .matrix();
  VecC y = red.ker_perp_basis() * c;
  VecC Ay = adjoint(dc.C).apply(y);
  double graph = std::sqrt(std::pow(dc.faces->norm(y), 2) +
                           std::pow(dc.edges->norm(Ay), 2));
  double val = std::abs(dc.edges->inner(r, Ay)) / graph;
  REQUIRE(val == Approx(nrm).epsilon(1e-10));

  // Upper bound over random directions.
  for (int t = 0; t < 25; ++t) {
    VecC yt = red.project_ker_perp(random_vec(dc.faces->dim(), 100 + t));
    VecC Ayt = adjoint(dc.C).apply(yt);
    double g = std::sqrt(std::pow(dc.faces->norm(yt), 2) +
                         std::pow(dc.edges->norm(Ayt), 2));
    if (g == 0.0) continue;
    REQUIRE(std::abs(dc.edges->inner(r, Ayt)) / g <= nrm * (1.0 + 1e-12));
  }
}

TEST_CASE("curl-div split solver") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(3));
  CurlDivSystem sys(dc);
  AdmissibilityParams params(0.25, 4.0);

  SECTION("zero rhs gives zero solution") {
    RightHandSide rhs = sys.make_rhs(VecC::Zero(dc.edges->dim()),
                                     VecC::Zero(dc.cells->dim()));
    Solution sol = solve_curldiv(sys, *identity_coefficient(dc.edges),
                                 *identity_coefficient(dc.cells), rhs, params);
    REQUIRE(sol.norm_u <= 1e-12);
  }

  SECTION("split structure, residuals, variational identity") {
    CoefficientPtr a = random_diag(dc.edges, 31, 0.5, 3.0);
    CoefficientPtr b = random_diag(dc.cells, 32, 0.5, 3.0);
    RightHandSide rhs = sys.make_rhs(random_vec(dc.edges->dim(), 33),
                                     random_vec(dc.cells->dim(), 34));
    Solution sol = solve_curldiv(sys, *a, *b, rhs, params);

    // u1 in rge(C) = ker(D), u2 in rge(D*): orthogonal split, and the curl
    // part is divergence-free (exact complex).
    const double scale = sol.norm_u * sol.norm_u + 1e-30;
    REQUIRE(std::abs(dc.faces->inner(sol.u1, sol.u2)) <= 1e-12 * scale);
    REQUIRE(dc.cells->norm(dc.D.apply(sol.u1)) <=
            1e-10 * (1.0 + dc.faces->norm(sol.u1)));
    REQUIRE(dc.edges->norm(sys.Cstar().apply(sol.u2)) <=
            1e-10 * (1.0 + dc.faces->norm(sol.u2)));
    REQUIRE(sol.residual_f <= 1e-10);
    REQUIRE(sol.residual_g <= 1e-10);

    // Variational identity against random face tests.
    for (int t = 0; t < 5; ++t) {
      VecC y = random_vec(dc.faces->dim(), 50 + t);
      VecC Cy = sys.Cstar().apply(y), Dy = dc.D.apply(y);
      cplx lhs = dc.edges->inner(sol.flux_curl, Cy) +
                 dc.cells->inner(sol.flux_div, Dy);
      cplx rhs_val = dc.edges->inner(rhs.f, Cy) + dc.cells->inner(rhs.g, Dy);
      REQUIRE(std::abs(lhs - rhs_val) <=
              1e-9 * (1.0 + std::abs(rhs_val)));
    }
  }

  SECTION("split agrees with monolithic oracle, 20 seeded problems") {
    for (int t = 0; t < 20; ++t) {
      CoefficientPtr a = random_diag(dc.edges, 1000 + 7 * t, 0.5, 3.0);
      CoefficientPtr b = random_diag(dc.cells, 2000 + 7 * t, 0.5, 3.0);
      RightHandSide rhs = sys.make_rhs(random_vec(dc.edges->dim(), 3000 + t),
                                       random_vec(dc.cells->dim(), 4000 + t));
      Solution s1 = solve_curldiv(sys, *a, *b, rhs, params);
      Solution s2 = oracle_monolithic_solve(sys, *a, *b, rhs);
      REQUIRE(rel_diff(*dc.faces, s1.u.values, s2.u.values) <= 1e-8);
    }
  }

  SECTION("linearity in the right-hand side") {
    CoefficientPtr a = random_diag(dc.edges, 61, 0.5, 3.0);
    CoefficientPtr b = random_diag(dc.cells, 62, 0.5, 3.0);
    VecC f1 = random_vec(dc.edges->dim(), 63), f2 = random_vec(dc.edges->dim(), 64);
    VecC g1 = random_vec(dc.cells->dim(), 65), g2 = random_vec(dc.cells->dim(), 66);
    Solution sa = solve_curldiv(sys, *a, *b, sys.make_rhs(f1, g1), params);
    Solution sb = solve_curldiv(sys, *a, *b, sys.make_rhs(f2, g2), params);
    Solution sc = solve_curldiv(sys, *a, *b, sys.make_rhs(f1 + f2, g1 + g2), params);
    REQUIRE(dc.faces->norm(sc.u.values - sa.u.values - sb.u.values) <=
            1e-10 * (1.0 + sc.norm_u));
  }

  SECTION("inadmissible coefficients rejected") {
    CoefficientPtr a = scalar_coefficient(dc.edges, 10.0);  // beyond beta
    CoefficientPtr b = identity_coefficient(dc.cells);
    RightHandSide rhs = sys.make_rhs(random_vec(dc.edges->dim(), 71),
                                     random_vec(dc.cells->dim(), 72));
    REQUIRE_THROWS_AS(solve_curldiv(sys, *a, *b, rhs, params),
                      AdmissibilityError);
  }
}

TEST_CASE("admissibility policies agree on diagonal coefficients") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(2));
  AdmissibilityParams params(0.25, 4.0);
  CoefficientPtr a = random_diag(dc.edges, 81, 0.5, 3.0);
  CoefficientPtr b = random_diag(dc.cells, 82, 0.5, 3.0);
  auto dense = check_curldiv_admissibility(dc, *a, *b, params,
                                           AdmissibilityPolicy::dense);
  auto diag = check_curldiv_admissibility(dc, *a, *b, params,
                                          AdmissibilityPolicy::diagonal_bounds);
  REQUIRE(dense.ok);
  REQUIRE(diag.ok);
  // The diagonal shortcut floors bound the dense compressed floors.
  REQUIRE(dense.a_inv.floor_a00 >= diag.a_inv.floor_a00 - 1e-10);
  REQUIRE(dense.b.floor_a00 >= diag.b.floor_a00 - 1e-10);

  AdmissibilityParams tight(0.9, 1.1);
  REQUIRE_FALSE(check_curldiv_admissibility(dc, *a, *b, tight,
                                            AdmissibilityPolicy::diagonal_bounds)
                    .ok);
}

TEST_CASE("continuity estimate holds with nonnegative slack") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(3));
  CurlDivSystem sys(dc);
  AdmissibilityParams params(0.25, 4.0);
  for (int t = 0; t < 5; ++t) {
    CoefficientPtr a = random_diag(dc.edges, 900 + t, 0.5, 3.0);
    CoefficientPtr b = random_diag(dc.cells, 950 + t, 0.5, 3.0);
    RightHandSide rhs = sys.make_rhs(random_vec(dc.edges->dim(), 970 + t),
                                     random_vec(dc.cells->dim(), 990 + t));
    Solution sol = solve_curldiv(sys, *a, *b, rhs, params);
    auto adm = check_curldiv_admissibility(dc, *a, *b, params,
                                           AdmissibilityPolicy::diagonal_bounds);
    EstimateReport rep = verify_continuity_estimate(sol, params, sys, rhs, adm);
    REQUIRE(rep.params_admissible);
    REQUIRE(rep.holds);
    REQUIRE(rep.slack >= -1e-10 * (1.0 + rep.rhs));
  }

  SECTION("alpha beyond the true floor flags non-admissible, not failure") {
    CoefficientPtr a = identity_coefficient(dc.edges);
    CoefficientPtr b = identity_coefficient(dc.cells);
    RightHandSide rhs = sys.make_rhs(random_vec(dc.edges->dim(), 995),
                                     random_vec(dc.cells->dim(), 996));
    Solution sol = solve_curldiv(sys, *a, *b, rhs, AdmissibilityParams(0.5, 2.0));
    AdmissibilityParams claimed(3.0, 3.5);  // identity is not >= 3
    auto adm = check_curldiv_admissibility(dc, *a, *b, claimed,
                                           AdmissibilityPolicy::diagonal_bounds);
    EstimateReport rep =
        verify_continuity_estimate(sol, claimed, sys, rhs, adm);
    REQUIRE_FALSE(rep.params_admissible);
    REQUIRE_FALSE(rep.holds);
  }
}

TEST_CASE("iterative split solver matches the dense path") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(3));
  CurlDivSystem sys(dc);
  AdmissibilityParams params(0.25, 4.0);
  CoefficientPtr a = random_diag(dc.edges, 411, 0.5, 3.0);
  CoefficientPtr b = random_diag(dc.cells, 412, 0.5, 3.0);
  VecC f = random_vec(dc.edges->dim(), 413);
  VecC g = random_vec(dc.cells->dim(), 414);
  Solution dense = solve_curldiv(sys, *a, *b, sys.make_rhs(f, g), params);
  IterativeSolveStats stats;
  Solution iter = solve_curldiv_iterative(dc, *a, *b, f, g, 1e-13, &stats);
  REQUIRE(stats.curl_part.converged);
  REQUIRE(stats.div_part.converged);
  REQUIRE(rel_diff(*dc.faces, iter.u.values, dense.u.values) <= 1e-9);
  REQUIRE(iter.residual_f <= 1e-10);
  REQUIRE(iter.residual_g <= 1e-10);

  SECTION("non-Hermitian coefficients rejected") {
    CoefficientPtr bad = scalar_coefficient(dc.edges, cplx(1.0, 0.5));
    REQUIRE_THROWS_AS(solve_curldiv_iterative(dc, *bad, *b, f, g),
                      std::invalid_argument);
  }
}

TEST_CASE("series runner bookkeeping") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(2));
  CurlDivSystem sys(dc);
  AdmissibilityParams params(0.25, 4.0);
  RightHandSide rhs = sys.make_rhs(random_vec(dc.edges->dim(), 511),
                                   random_vec(dc.cells->dim(), 512));
  CurlDivSolver solver = [&](const Coefficient& a, const Coefficient& b) {
    return solve_curldiv(sys, a, b, rhs, params);
  };

  DeviationProbes probes;
  probes.solution.emplace_back("p0", random_vec(dc.faces->dim(), 513));
  probes.curl_flux.emplace_back("p0", random_vec(dc.edges->dim(), 514));
  probes.div_flux.emplace_back("p0", random_vec(dc.cells->dim(), 515));

  std::pair<CoefficientPtr, CoefficientPtr> lim{
      identity_coefficient(dc.edges), identity_coefficient(dc.cells)};

  SECTION("constant sequence produces zero deviations") {
    std::vector<std::pair<CoefficientPtr, CoefficientPtr>> seq{lim, lim};
    SeriesReport rep =
        run_convergence_series(dc, seq, lim, {1, 2}, solver, probes);
    REQUIRE(rep.rows.size() == 6);
    for (const auto& r : rep.rows) REQUIRE(r.deviation <= 1e-12);
    REQUIRE(deviation_ratio(rep, "solution", 1, 2) == 0.0);
  }

  SECTION("empty probes rejected") {
    std::vector<std::pair<CoefficientPtr, CoefficientPtr>> seq{lim};
    REQUIRE_THROWS_AS(
        run_convergence_series(dc, seq, lim, {1}, solver, DeviationProbes{}),
        std::invalid_argument);
  }

  SECTION("per-n failures recorded, series continues") {
    std::pair<CoefficientPtr, CoefficientPtr> bad{
        scalar_coefficient(dc.edges, 100.0), identity_coefficient(dc.cells)};
    std::vector<std::pair<CoefficientPtr, CoefficientPtr>> seq{bad, lim};
    SeriesReport rep =
        run_convergence_series(dc, seq, lim, {1, 2}, solver, probes);
    REQUIRE_FALSE(rep.solves[0].ok);
    REQUIRE(!rep.solves[0].error.empty());
    REQUIRE(rep.solves[1].ok);
  }

  SECTION("CSV is deterministic and well-formed") {
    std::vector<std::pair<CoefficientPtr, CoefficientPtr>> seq{lim};
    SeriesReport rep =
        run_convergence_series(dc, seq, lim, {1}, solver, probes);
    std::string csv = series_csv(rep);
    REQUIRE(csv.rfind("n,probe_id,kind,deviation\n", 0) == 0);
    REQUIRE(csv == series_csv(rep));
  }
}
