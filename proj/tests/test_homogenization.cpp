#include <catch2/catch_amalgamated.hpp>

#include "cdhom/homogenization.hpp"

using namespace cdhom;
using Catch::Approx;

namespace {

double max_abs(const Mat3C& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("layered effective matrix formula") {
  SECTION("constant matrix is its own limit") {
    Mat3C a;
    a << 2.0, 0.3, 0.1, 0.3, 1.5, 0.0, 0.1, 0.0, 3.0;
    LayeredMatrixProfile p({0.0}, {a});
    REQUIRE(max_abs(layered_hom_matrix(p) - a) < 1e-14);
  }

  SECTION("two-phase isotropic d in {1,4}: harmonic normal, arithmetic in-plane") {
    LayeredProfile d = LayeredProfile::two_phase(1.0, 4.0);
    Mat3C hom = layered_hom_matrix(LayeredMatrixProfile::isotropic(d));
    Mat3C expect = Mat3C::Zero();
    expect(0, 0) = 1.6;
    expect(1, 1) = 2.5;
    expect(2, 2) = 2.5;
    REQUIRE(max_abs(hom - expect) < 1e-12);
  }

  SECTION("reciprocal profile") {
    LayeredProfile d = LayeredProfile::two_phase(1.0, 4.0);
    Mat3C hom =
        layered_hom_matrix(LayeredMatrixProfile::isotropic(d.reciprocal()));
    Mat3C expect = Mat3C::Zero();
    expect(0, 0) = 1.0 / 2.5;
    expect(1, 1) = 0.625;
    expect(2, 2) = 0.625;
    REQUIRE(max_abs(hom - expect) < 1e-12);
  }

  SECTION("phase swap leaves the equal-fraction limit invariant") {
    LayeredProfile d = LayeredProfile::two_phase(1.0, 4.0);
    Mat3C h1 = layered_hom_matrix(LayeredMatrixProfile::isotropic(d));
    Mat3C h2 = layered_hom_matrix(
        LayeredMatrixProfile::isotropic(d.swapped_phases()));
    REQUIRE(max_abs(h1 - h2) < 1e-13);
  }

  SECTION("degenerate a11 rejected") {
    Mat3C a = Mat3C::Identity();
    a(0, 0) = 0.0;
    REQUIRE_THROWS_AS(layered_hom_matrix(LayeredMatrixProfile({0.0}, {a})),
                      std::invalid_argument);
  }
}

TEST_CASE("effective curl-div coefficients") {
  SECTION("constant profile") {
    EffectiveCoefficients eff =
        effective_curldiv_coefficients(LayeredProfile::constant(3.0));
    REQUIRE(max_abs(eff.e_hom - 3.0 * Mat3C::Identity()) < 1e-13);
    REQUIRE(std::abs(eff.b_hom - 3.0) < 1e-13);
  }

  SECTION("two-phase d in {1,4}") {
    EffectiveCoefficients eff =
        effective_curldiv_coefficients(LayeredProfile::two_phase(1.0, 4.0));
    Mat3C expect = Mat3C::Zero();
    expect(0, 0) = 2.5;
    expect(1, 1) = 1.6;
    expect(2, 2) = 1.6;
    REQUIRE(max_abs(eff.e_hom - expect) < 1e-12);
    REQUIRE(std::abs(eff.b_hom - 1.6) < 1e-12);
  }

  SECTION("cross-consistency on 10 random two-phase profiles") {
    detail::DeterministicGaussian g(0xabc1);
    for (int t = 0; t < 10; ++t) {
      const double v0 = 0.5 + 3.5 * std::abs(std::tanh(g()));
      const double v1 = 0.5 + 3.5 * std::abs(std::tanh(g()));
      const double split = 0.2 + 0.6 * (0.5 + 0.5 * std::tanh(g()));
      LayeredProfile d = LayeredProfile::two_phase(v0, v1, split);
      EffectiveCoefficients eff = effective_curldiv_coefficients(d);
      Mat3C inv = layered_hom_matrix(
                      LayeredMatrixProfile::isotropic(d.reciprocal()))
                      .inverse();
      REQUIRE(max_abs(inv - eff.e_hom) <= 1e-10 * (1.0 + max_abs(eff.e_hom)));
    }
  }

  SECTION("harmonic mean below arithmetic mean for real positive profiles") {
    EffectiveCoefficients eff = effective_curldiv_coefficients(
        LayeredProfile({0.0, 0.3, 0.7}, {1.0, 5.0, 2.0}));
    REQUIRE(eff.e_hom(0, 0).real() >= eff.e_hom(1, 1).real());
  }
}

TEST_CASE("homogenization series") {
  SECTION("divisibility enforced") {
    DiscreteComplex dc = build_box_complex(BoxGrid::cube(4), false);
    DeviationProbes probes = make_series_probes(dc, 2, 1);
    REQUIRE_THROWS_AS(
        run_homogenization_series(dc, LayeredProfile::two_phase(1.0, 4.0), {3},
                                  probes, AdmissibilityParams(0.25, 4.0)),
        DivisibilityError);
  }

  SECTION("constant profile gives identically zero deviations") {
    DiscreteComplex dc = build_box_complex(BoxGrid::cube(4), false);
    DeviationProbes probes = make_series_probes(dc, 3, 1);
    HomogenizationSeries s = run_homogenization_series(
        dc, LayeredProfile::constant(2.0), {1, 2}, probes,
        AdmissibilityParams(0.25, 4.0));
    REQUIRE(max_abs(s.e_hom - 2.0 * Mat3C::Identity()) < 1e-13);
    for (const auto& r : s.report.rows) REQUIRE(r.deviation <= 1e-10);
  }

  SECTION("two-phase layered profile: deviations decrease") {
    DiscreteComplex dc = build_box_complex(BoxGrid::cube(8), false);
    DeviationProbes probes = make_series_probes(dc, 4, 0);
    HomogenizationSeries s = run_homogenization_series(
        dc, LayeredProfile::two_phase(1.0, 4.0), {1, 2, 4}, probes,
        AdmissibilityParams(0.25, 4.0), 2);
    for (const auto& sv : s.report.solves) REQUIRE(sv.ok);
    // Desk-scale smoke: decay visible though not gated at the acceptance
    // ratio (that runs at N=48).
    REQUIRE(deviation_ratio(s.report, "solution", 1, 4) < 1.0);
    REQUIRE(std::abs(s.b_hom - 1.6) < 1e-12);
  }
}

TEST_CASE("scalar Dirichlet H-convergence probe") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(4), false);
  VecC f = VecC::Zero(dc.cells->dim());
  dc.cell_layout.for_each([&](int, int i, int j, int k,
                              std::array<double, 3> p) {
    f(dc.cell_layout.index(0, i, j, k)) =
        detail::box_bump(dc.grid, p[0], p[1], p[2]);
  });
  std::vector<std::pair<std::string, VecC>> sol_probes{{"p", f}};
  std::vector<std::pair<std::string, VecC>> flux_probes{
      {"p", VecC::Ones(dc.faces->dim())}};

  SECTION("constant coefficients: zero deviations") {
    CoefficientPtr c = scalar_coefficient(dc.faces, 0.5);
    LocalHReport rep =
        local_H_probe(dc, {c, c}, c, {1, 2}, f, sol_probes, flux_probes);
    for (const auto& r : rep.rows) REQUIRE(r.deviation <= 1e-12);
  }

  SECTION("zero rhs gives zero solutions") {
    CoefficientPtr c = scalar_coefficient(dc.faces, 0.5);
    LocalHReport rep = local_H_probe(dc, {c}, c, {1},
                                     VecC::Zero(dc.cells->dim()), sol_probes,
                                     flux_probes);
    for (const auto& r : rep.rows) REQUIRE(r.deviation <= 1e-13);
  }

  SECTION("layered reciprocal sequence deviates less at higher n") {
    DiscreteComplex dc8 = build_box_complex(BoxGrid::cube(8), false);
    VecC f8 = VecC::Zero(dc8.cells->dim());
    dc8.cell_layout.for_each([&](int, int i, int j, int k,
                                 std::array<double, 3> p) {
      f8(dc8.cell_layout.index(0, i, j, k)) =
          detail::box_bump(dc8.grid, p[0], p[1], p[2]);
    });
    LayeredProfile d = LayeredProfile::two_phase(1.0, 4.0);
    ScalarField dinv_field = [d](double x, double, double) {
      return 1.0 / d.eval(x);
    };
    std::vector<CoefficientPtr> seq;
    std::vector<int> ns{1, 4};
    for (int n : ns)
      seq.push_back(sample_coefficient(periodic_rescale(dinv_field, n), dc8,
                                       SpaceTag::face));
    // Predicted H-limit of (1/d) I: diag(1/2.5, 0.625, 0.625).
    DiagField lim_field = [](double, double, double) {
      return Eigen::Vector3cd(1.0 / 2.5, 0.625, 0.625);
    };
    CoefficientPtr lim = sample_coefficient(lim_field, dc8, SpaceTag::face);
    std::vector<std::pair<std::string, VecC>> sp{{"p", f8}};
    LocalHReport rep = local_H_probe(dc8, seq, lim, ns, f8, sp, {});
    double dev1 = 0.0, dev4 = 0.0;
    for (const auto& r : rep.rows) {
      if (r.n == 1) dev1 = std::max(dev1, r.deviation);
      if (r.n == 4) dev4 = std::max(dev4, r.deviation);
    }
    REQUIRE(dev4 < dev1);
  }
}

TEST_CASE("nonlocal series") {
  DiscreteComplex dc = build_box_complex(BoxGrid::cube(4), false);
  DeviationProbes probes = make_series_probes(dc, 3, 1);
  AdmissibilityParams params(0.25, 4.0);

  SECTION("constant kernel: exact fixed point, zero deviations") {
    NonlocalSeries s = run_nonlocal_series(dc, Kernel::constant(0.3), {1, 2, 4},
                                           probes, params);
    REQUIRE(std::abs(s.kernel_mean - 0.3) < 1e-14);
    for (double n : s.operator_norms) REQUIRE(n == Approx(0.3).epsilon(1e-10));
    for (const auto& r : s.report.rows) REQUIRE(r.deviation <= 1e-10);
  }

  SECTION("zero kernel reduces to the identity-coefficient problem") {
    NonlocalSeries s =
        run_nonlocal_series(dc, Kernel::constant(0.0), {1}, probes, params);
    REQUIRE(s.limit_norm == 0.0);
    for (const auto& r : s.report.rows) REQUIRE(r.deviation <= 1e-12);
  }

  SECTION("zero-mean oscillating kernel: deviations decrease") {
    DiscreteComplex dc8 = build_box_complex(BoxGrid::cube(8), false);
    DeviationProbes p8 = make_series_probes(dc8, 4, 0);
    Kernel k = Kernel::layered(LayeredProfile::two_phase(0.45, -0.45));
    NonlocalSeries s = run_nonlocal_series(dc8, k, {1, 2, 4}, p8, params, 2);
    REQUIRE(std::abs(s.kernel_mean) < 1e-14);
    REQUIRE(s.limit_norm < 1e-13);
    REQUIRE(deviation_ratio(s.report, "solution", 1, 4) < 1.0);
  }
}
