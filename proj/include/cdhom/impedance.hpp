#ifndef CDHOM_IMPEDANCE_HPP
#define CDHOM_IMPEDANCE_HPP

#include <cstdint>

#include "cdhom/homogenization.hpp"
#include "cdhom/probes.hpp"
#include "cdhom/series.hpp"
#include "cdhom/solver.hpp"

// Coupled (E, H) first-order system with the impedance trace coupling: both
// fields collocated at the nodes, the ambient operator mapping to the
// 8-component stack (curl E, div E, curl H, div H), and the tangential
// constraint gamma_tau H = pi_tau E eliminated exactly at the interior nodes
// of each boundary face. No exactness is needed here; finite dimensionality
// supplies the closed range, and the reduced factorization carries the
// coercivity constant.

namespace cdhom {

struct ImpedanceOperator {
  BoxGrid grid;
  SpaceLayout node_layout;
  SpacePtr nodes;       // P
  SpacePtr fields;      // 6P: E0,E1,E2,H0,H1,H2 blocks
  SpacePtr stack;       // 8P: curlE (3P), divE (P), curlH (3P), divH (P)
  SpacePtr domain;      // constrained coordinates, unit weights
  LinearOp ambient;     // fields -> stack
  SpMatC constraints;   // rows x 6P, two rows per boundary-face interior node
  SpMatC domain_basis;  // 6P x dim(domain), exact nullspace, orthonormal
  LinearOp constrained; // domain -> stack
  std::shared_ptr<const ReducedOp> reduced;

  Eigen::Index P() const { return nodes->dim(); }
  Eigen::Index field_index(bool magnetic, int comp, Eigen::Index node) const {
    return (magnetic ? 3 : 0) * P() + comp * P() + node;
  }
  Eigen::Index stack_index(int block, Eigen::Index node) const {
    // blocks 0..2 curl E, 3 div E, 4..6 curl H, 7 div H
    return block * P() + node;
  }
  // (E, H) pair in ambient coordinates from constrained coordinates.
  VecC embed(const VecC& coords) const { return domain_basis * coords; }
};

namespace detail {

// One-axis first-derivative matrix on the collocated node grid: centered
// second order interiorly, one-sided second order at the ends.
inline SpMatC node_derivative(const CompGrid& cg, int axis) {
  const Eigen::Index P = cg.size();
  std::vector<Eigen::Triplet<cplx>> trip;
  const double inv2h = 1.0 / (2.0 * cg.h[axis]);
  const int ext = cg.ext[axis];
  for (int k = 0; k < cg.ext[2]; ++k)
    for (int j = 0; j < cg.ext[1]; ++j)
      for (int i = 0; i < cg.ext[0]; ++i) {
        const Eigen::Index row = cg.index(i, j, k);
        std::array<int, 3> q{i, j, k};
        auto at = [&](int off) {
          auto p = q;
          p[axis] += off;
          return cg.index(p[0], p[1], p[2]);
        };
        if (q[axis] == 0) {
          trip.emplace_back(row, at(0), cplx(-3.0 * inv2h));
          trip.emplace_back(row, at(1), cplx(4.0 * inv2h));
          trip.emplace_back(row, at(2), cplx(-1.0 * inv2h));
        } else if (q[axis] == ext - 1) {
          trip.emplace_back(row, at(0), cplx(3.0 * inv2h));
          trip.emplace_back(row, at(-1), cplx(-4.0 * inv2h));
          trip.emplace_back(row, at(-2), cplx(1.0 * inv2h));
        } else {
          trip.emplace_back(row, at(1), cplx(inv2h));
          trip.emplace_back(row, at(-1), cplx(-inv2h));
        }
      }
  SpMatC m(P, P);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace detail

inline ImpedanceOperator build_impedance_operator(const BoxGrid& grid) {
  for (int a = 0; a < 3; ++a)
    if (grid.cells[a] < 3)
      throw std::invalid_argument("build_impedance_operator: need N >= 3");
  SpaceLayout nl(grid, SpaceTag::node);
  const CompGrid& cg = nl.comps[0];
  const Eigen::Index P = cg.size();
  VecR nw = nl.weights();

  VecR wf(6 * P), ws(8 * P);
  for (int b = 0; b < 6; ++b) wf.segment(b * P, P) = nw;
  for (int b = 0; b < 8; ++b) ws.segment(b * P, P) = nw;
  SpacePtr nodes = make_space(nw, "nodes");
  SpacePtr fields = make_space(wf, "EH fields");
  SpacePtr stack = make_space(ws, "flux stack");

  std::array<SpMatC, 3> Dx{detail::node_derivative(cg, 0),
                           detail::node_derivative(cg, 1),
                           detail::node_derivative(cg, 2)};

  // Ambient operator: rows are P-blocks of the stack, columns P-blocks of
  // the fields.
  std::vector<Eigen::Triplet<cplx>> trip;
  auto add_block = [&](Eigen::Index row_block, Eigen::Index col_block,
                       const SpMatC& m, double sign) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMatC::InnerIterator it(m, k); it; ++it)
        trip.emplace_back(row_block * P + it.row(), col_block * P + it.col(),
                          sign * it.value());
  };
  for (int half = 0; half < 2; ++half) {   // 0: E, 1: H
    const Eigen::Index col0 = 3 * half;
    const Eigen::Index row0 = 4 * half;
    for (int c = 0; c < 3; ++c) {          // (curl v)_c = d_u v_v - d_v v_u
      const int u = (c + 1) % 3, v = (c + 2) % 3;
      add_block(row0 + c, col0 + v, Dx[u], 1.0);
      add_block(row0 + c, col0 + u, Dx[v], -1.0);
    }
    for (int a = 0; a < 3; ++a) add_block(row0 + 3, col0 + a, Dx[a], 1.0);
  }
  SpMatC amb(8 * P, 6 * P);
  amb.setFromTriplets(trip.begin(), trip.end());
  LinearOp ambient(fields, stack, std::move(amb));

  // Trace constraints at interior nodes of each boundary face. With outward
  // normal n = sigma e_a and the right-handed tangent frame t1 = e_u,
  // t2 = sigma e_v (u = a+1, v = a+2 mod 3), the coupling gamma_tau H =
  // pi_tau E reads E.t1 = H.t2 and E.t2 = -H.t1:
  //   row 1:  E_u - sigma H_v = 0
  //   row 2:  sigma E_v + H_u = 0.
  // Nodes on box edges/corners carry no rows (no unique normal).
  std::vector<Eigen::Triplet<cplx>> ctrip;
  std::vector<Eigen::Triplet<cplx>> btrip;  // exact nullspace, built alongside
  std::vector<bool> slot_constrained(6 * P, false);
  Eigen::Index row = 0, bcol = 0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < 3; ++a) {
    const int u = (a + 1) % 3, v = (a + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      const double sigma = side == 0 ? -1.0 : 1.0;
      std::array<int, 3> lo{0, 0, 0}, hi{cg.ext[0], cg.ext[1], cg.ext[2]};
      lo[a] = side == 0 ? 0 : cg.ext[a] - 1;
      hi[a] = lo[a] + 1;
      lo[u] = 1; hi[u] = cg.ext[u] - 1;
      lo[v] = 1; hi[v] = cg.ext[v] - 1;
      for (int k = lo[2]; k < hi[2]; ++k)
        for (int j = lo[1]; j < hi[1]; ++j)
          for (int i = lo[0]; i < hi[0]; ++i) {
            const Eigen::Index q = cg.index(i, j, k);
            const Eigen::Index Eu = u * P + q, Ev = v * P + q;
            const Eigen::Index Hu = (3 + u) * P + q, Hv = (3 + v) * P + q;
            ctrip.emplace_back(row, Eu, cplx(1.0));
            ctrip.emplace_back(row, Hv, cplx(-sigma));
            ++row;
            ctrip.emplace_back(row, Ev, cplx(sigma));
            ctrip.emplace_back(row, Hu, cplx(1.0));
            ++row;
            slot_constrained[Eu] = slot_constrained[Ev] = true;
            slot_constrained[Hu] = slot_constrained[Hv] = true;
            // Null directions of the two rows (disjoint slot pairs):
            //   (E_u, H_v) = (sigma, 1) and (E_v, H_u) = (1, -sigma).
            btrip.emplace_back(Eu, bcol, cplx(sigma * inv_sqrt2));
            btrip.emplace_back(Hv, bcol, cplx(inv_sqrt2));
            ++bcol;
            btrip.emplace_back(Ev, bcol, cplx(inv_sqrt2));
            btrip.emplace_back(Hu, bcol, cplx(-sigma * inv_sqrt2));
            ++bcol;
          }
    }
  }
  for (Eigen::Index s = 0; s < 6 * P; ++s)
    if (!slot_constrained[s]) {
      btrip.emplace_back(s, bcol, cplx(1.0));
      ++bcol;
    }
  SpMatC con(row, 6 * P);
  con.setFromTriplets(ctrip.begin(), ctrip.end());
  SpMatC basis(6 * P, bcol);
  basis.setFromTriplets(btrip.begin(), btrip.end());

  ImpedanceOperator op{grid,
                       std::move(nl),
                       nodes,
                       fields,
                       stack,
                       make_unit_space(bcol, "impedance domain"),
                       std::move(ambient),
                       std::move(con),
                       std::move(basis),
                       LinearOp{},
                       nullptr};
  // The paired slots share a node, hence a weight, so the hand-built basis is
  // orthonormal in the weighted product after per-column rescaling by
  // sqrt(node weight).
  for (int c = 0; c < op.domain_basis.outerSize(); ++c) {
    double wsum = 0.0;
    for (SpMatC::InnerIterator it(op.domain_basis, c); it; ++it)
      wsum += wf(it.row()) * std::norm(it.value());
    const double scale = 1.0 / std::sqrt(wsum);
    for (SpMatC::InnerIterator it(op.domain_basis, c); it; ++it)
      it.valueRef() *= scale;
  }
  op.constrained = LinearOp(op.domain, op.stack,
                            SpMatC(op.ambient.matrix() * op.domain_basis));
  op.reduced = std::make_shared<ReducedOp>(op.constrained);
  return op;
}

struct KernelRangeReport {
  Eigen::Index kernel_dim = 0;
  MatC kernel_basis;  // ambient 6P representation
  double coercivity_c = 0.0;
};

inline KernelRangeReport impedance_kernel_range(const ImpedanceOperator& op) {
  KernelRangeReport rep;
  rep.kernel_dim = op.reduced->nullity();
  rep.coercivity_c = op.reduced->smallest_singular_value();
  if (rep.kernel_dim > 0) {
    // Domain has unit weights, so a plain full SVD yields the kernel.
    Eigen::JacobiSVD<MatC> svd(op.constrained.dense(), Eigen::ComputeFullV);
    rep.kernel_basis =
        op.domain_basis *
        svd.matrixV().rightCols(rep.kernel_dim);
  } else {
    rep.kernel_basis.resize(op.fields->dim(), 0);
  }
  return rep;
}

struct ImpedanceSolution {
  VecC fields;  // (E, H) ambient, satisfies the constraints exactly
  VecC coords;  // constrained coordinates, orthogonal to ker(A0)
  double residual = 0.0;  // relative variational residual
};

// Solution formula: invert the dual map, the compressed coefficient, and the
// reduced operator. F is a Riesz vector on the (E, H) field space:
// F(phi) = <F_vec, phi>.
inline ImpedanceSolution solve_impedance(const ImpedanceOperator& op,
                                         const Coefficient& a,
                                         const VecC& F_vec,
                                         double min_floor = 1e-12) {
  op.fields->check(F_vec);
  VecC F_dom = op.domain_basis.adjoint() *
               (op.fields->weights().asDiagonal() * F_vec);
  ImpedanceSolution sol;
  sol.coords = solve_lax_milgram(*op.reduced, a, F_dom, min_floor);
  sol.fields = op.embed(sol.coords);
  VecC flux = a.apply(op.constrained.apply(sol.coords));
  VecC res = adjoint(op.constrained).apply(flux) - F_dom;
  sol.residual = res.norm() / (1.0 + F_dom.norm());
  return sol;
}

// Splitting pair rge(A0) (+) rge(A0)^bot in the stack space, reusing the
// generic block machinery with A1 := 1 - P_rge(A0).
inline ComplexPair make_range_splitting_pair(const LinearOp& A0) {
  ReducedOp red(A0);
  const MatC& Br = red.range_basis();
  MatC proj = Br * (Br.adjoint() * A0.codomain()->weights().asDiagonal());
  MatC compl_proj = MatC::Identity(proj.rows(), proj.cols()) - proj;
  LinearOp A1(A0.codomain(), A0.codomain(), compl_proj);
  return ComplexPair(A0, A1);
}

inline AdmissibilityReport impedance_admissibility(
    const Coefficient& a, const AdmissibilityParams& params,
    const ComplexPair& split) {
  return admissibility_check(a, params, split);
}

inline CharacteristicMaps impedance_characteristic_maps(
    const Coefficient& a, const ComplexPair& split) {
  return characteristic_maps(a, split);
}

// Diagonal block coefficient diag(a_e, b_e, a_h, b_h) on the 8-stack,
// sampled at the nodes.
inline CoefficientPtr make_diag_block_coefficient(const ImpedanceOperator& op,
                                                  const MatrixField& a_e,
                                                  const ScalarField& b_e,
                                                  const MatrixField& a_h,
                                                  const ScalarField& b_h) {
  const CompGrid& cg = op.node_layout.comps[0];
  const Eigen::Index P = op.P();
  std::vector<Eigen::Triplet<cplx>> trip;
  bool hermitian = true;
  for (int k = 0; k < cg.ext[2]; ++k)
    for (int j = 0; j < cg.ext[1]; ++j)
      for (int i = 0; i < cg.ext[0]; ++i) {
        const Eigen::Index q = cg.index(i, j, k);
        auto p = cg.point(i, j, k);
        Eigen::Matrix3cd me = a_e(p[0], p[1], p[2]);
        Eigen::Matrix3cd mh = a_h(p[0], p[1], p[2]);
        cplx se = b_e(p[0], p[1], p[2]);
        cplx sh = b_h(p[0], p[1], p[2]);
        if ((me - me.adjoint()).cwiseAbs().maxCoeff() > 1e-14 ||
            (mh - mh.adjoint()).cwiseAbs().maxCoeff() > 1e-14 ||
            std::abs(se.imag()) > 1e-14 || std::abs(sh.imag()) > 1e-14)
          hermitian = false;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) {
            if (me(r, c) != 0.0)
              trip.emplace_back(r * P + q, c * P + q, me(r, c));
            if (mh(r, c) != 0.0)
              trip.emplace_back((4 + r) * P + q, (4 + c) * P + q, mh(r, c));
          }
        trip.emplace_back(3 * P + q, 3 * P + q, se);
        trip.emplace_back(7 * P + q, 7 * P + q, sh);
      }
  SpMatC m(8 * P, 8 * P);
  m.setFromTriplets(trip.begin(), trip.end());
  return std::make_shared<SparseCoefficient>(op.stack, std::move(m), hermitian);
}

// Smooth (E, H) Riesz functionals and probe vectors for the impedance series.
inline VecC smooth_field_vector(const ImpedanceOperator& op, int variant) {
  const CompGrid& cg = op.node_layout.comps[0];
  const BoxGrid& g = op.grid;
  const Eigen::Index P = op.P();
  VecC v = VecC::Zero(6 * P);
  for (int k = 0; k < cg.ext[2]; ++k)
    for (int j = 0; j < cg.ext[1]; ++j)
      for (int i = 0; i < cg.ext[0]; ++i) {
        const Eigen::Index q = cg.index(i, j, k);
        auto p = cg.point(i, j, k);
        const double x = p[0] / g.lengths[0], y = p[1] / g.lengths[1],
                     z = p[2] / g.lengths[2];
        const double bump = detail::box_bump(g, p[0], p[1], p[2]);
        for (int c = 0; c < 6; ++c) {
          const double phase =
              0.5 * M_PI * ((c + variant) % 3) + M_PI * (x + 0.3 * y - 0.7 * z);
          v(c * P + q) = bump * (std::cos(phase) + 0.25 * (c == variant % 6));
        }
      }
  return v;
}

struct ImpedanceSeriesReport {
  std::vector<SeriesEntry> rows;  // kinds: solution, flux_0..flux_7 per block
  std::vector<SolveSummary> solves;
};

inline ImpedanceSeriesReport run_impedance_series(
    const ImpedanceOperator& op,
    const std::vector<CoefficientPtr>& sequence, const CoefficientPtr& limit,
    const VecC& F_vec, const std::vector<int>& ns,
    const std::vector<std::pair<std::string, VecC>>& solution_probes,
    const std::vector<std::pair<std::string, VecC>>& flux_probes) {
  if (sequence.size() != ns.size())
    throw std::invalid_argument("run_impedance_series: sequence/index mismatch");
  if (solution_probes.empty() && flux_probes.empty())
    throw std::invalid_argument("run_impedance_series: empty probe set");
  ImpedanceSeriesReport rep;
  ImpedanceSolution lim = solve_impedance(op, *limit, F_vec);
  VecC lim_flux = limit->apply(op.constrained.apply(lim.coords));
  for (std::size_t idx = 0; idx < sequence.size(); ++idx) {
    SolveSummary s;
    s.n = ns[idx];
    try {
      ImpedanceSolution sol = solve_impedance(op, *sequence[idx], F_vec);
      VecC flux = sequence[idx]->apply(op.constrained.apply(sol.coords));
      s.ok = true;
      s.residual_f = sol.residual;
      s.norm_u = op.fields->norm(sol.fields);
      for (const auto& [id, w] : solution_probes)
        rep.rows.push_back({ns[idx], id, "solution",
                            std::abs(op.fields->inner(sol.fields - lim.fields, w))});
      const Eigen::Index P = op.P();
      for (const auto& [id, w] : flux_probes) {
        VecC dflux = flux - lim_flux;
        for (int blk = 0; blk < 8; ++blk) {
          cplx acc = 0.0;
          for (Eigen::Index q = 0; q < P; ++q)
            acc += op.nodes->weights()(q) * dflux(blk * P + q) *
                   std::conj(w(blk * P + q));
          rep.rows.push_back(
              {ns[idx], id, "flux_" + std::to_string(blk), std::abs(acc)});
        }
      }
    } catch (const std::exception& e) {
      s.error = e.what();
    }
    rep.solves.push_back(std::move(s));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The block-diagonal characterization experiment: compare decay of the four
// characteristic maps toward those of the predicted limit (side i) with the
// direct weak-star decay of the oscillating scalar blocks (side ii).

struct DiagBlockProfiles {
  LayeredMatrixProfile a_e = LayeredMatrixProfile({0.0}, {Mat3C::Identity()});
  LayeredProfile b_e = LayeredProfile::constant(1.0);
  LayeredMatrixProfile a_h = LayeredMatrixProfile({0.0}, {Mat3C::Identity()});
  LayeredProfile b_h = LayeredProfile::constant(1.0);
  bool a_e_oscillates = false;
  bool b_e_oscillates = false;
  bool a_h_oscillates = false;
  bool b_h_oscillates = false;
};

struct DiagCharacterization {
  std::vector<SeriesEntry> side_i;   // kinds map1..map4
  std::vector<SeriesEntry> side_ii;  // kinds <block>_weakstar
  Mat3C a_e_limit, a_h_limit;
  cplx b_e_limit{}, b_h_limit{};
};

namespace detail {

inline MatrixField matrix_profile_field(const LayeredMatrixProfile& p, int n) {
  return [p, n](double x, double, double) {
    return p.eval(frac_unit(n * x));
  };
}

inline ScalarField scalar_profile_field(const LayeredProfile& p, int n) {
  return [p, n](double x, double, double) { return p.eval(frac_unit(n * x)); };
}

}  // namespace detail

inline DiagCharacterization diag_characterization_experiment(
    const ImpedanceOperator& op, const DiagBlockProfiles& prof,
    const std::vector<int>& ns, std::uint64_t seed = 0xd1a6ULL,
    int probe_count = 4) {
  DiagCharacterization out;
  out.a_e_limit = prof.a_e_oscillates
                      ? layered_hom_matrix(prof.a_e)
                      : prof.a_e.eval(0.0);
  out.a_h_limit = prof.a_h_oscillates
                      ? layered_hom_matrix(prof.a_h)
                      : prof.a_h.eval(0.0);
  out.b_e_limit = prof.b_e_oscillates ? 1.0 / prof.b_e.mean_reciprocal()
                                      : prof.b_e.eval(0.0);
  out.b_h_limit = prof.b_h_oscillates ? 1.0 / prof.b_h.mean_reciprocal()
                                      : prof.b_h.eval(0.0);

  ComplexPair split = make_range_splitting_pair(op.constrained);
  Mat3C ae_lim = out.a_e_limit, ah_lim = out.a_h_limit;
  cplx be_lim = out.b_e_limit, bh_lim = out.b_h_limit;
  auto limit_coef = make_diag_block_coefficient(
      op, [ae_lim](double, double, double) { return ae_lim; },
      [be_lim](double, double, double) { return be_lim; },
      [ah_lim](double, double, double) { return ah_lim; },
      [bh_lim](double, double, double) { return bh_lim; });
  CharacteristicMaps lim_maps = characteristic_maps(*limit_coef, split);

  const Eigen::Index r0 = lim_maps.m1.rows();
  const Eigen::Index r1 = lim_maps.m4.rows();
  SpacePtr s0 = make_unit_space(r0), s1 = make_unit_space(r1);
  std::array<ProbeSet, 4> probesets{
      ProbeSet::seeded_random(s0, s0, seed + 1, probe_count, true),
      ProbeSet::seeded_random(s0, s1, seed + 2, probe_count, true),
      ProbeSet::seeded_random(s1, s0, seed + 3, probe_count, true),
      ProbeSet::seeded_random(s1, s1, seed + 4, probe_count, true)};

  // Weak-star test functions at the nodes.
  const CompGrid& cg = op.node_layout.comps[0];
  std::vector<std::pair<std::string, VecC>> weakstar_probes;
  for (int m = 0; m < probe_count; ++m) {
    VecC w(op.P());
    for (int k = 0; k < cg.ext[2]; ++k)
      for (int j = 0; j < cg.ext[1]; ++j)
        for (int i = 0; i < cg.ext[0]; ++i) {
          auto p = cg.point(i, j, k);
          w(cg.index(i, j, k)) =
              detail::box_bump(op.grid, p[0], p[1], p[2]) *
              std::cos(2.0 * M_PI * (m % 2 + 1) * p[1] / op.grid.lengths[1] +
                       0.5 * m);
        }
    weakstar_probes.emplace_back("smooth-" + std::to_string(m), std::move(w));
  }

  auto weakstar_rows = [&](const LayeredProfile& p, bool oscillates,
                           cplx lim_inv_target, int n, const char* kind) {
    if (!oscillates) return;
    VecC diff(op.P());
    for (int k = 0; k < cg.ext[2]; ++k)
      for (int j = 0; j < cg.ext[1]; ++j)
        for (int i = 0; i < cg.ext[0]; ++i) {
          auto pt = cg.point(i, j, k);
          diff(cg.index(i, j, k)) =
              1.0 / p.eval(frac_unit(n * pt[0])) - lim_inv_target;
        }
    for (const auto& [id, w] : weakstar_probes) {
      cplx acc = 0.0;
      for (Eigen::Index q = 0; q < op.P(); ++q)
        acc += op.nodes->weights()(q) * diff(q) * w(q);
      out.side_ii.push_back({n, id, kind, std::abs(acc)});
    }
  };

  for (int n : ns) {
    auto coef = make_diag_block_coefficient(
        op,
        detail::matrix_profile_field(prof.a_e, prof.a_e_oscillates ? n : 1),
        detail::scalar_profile_field(prof.b_e, prof.b_e_oscillates ? n : 1),
        detail::matrix_profile_field(prof.a_h, prof.a_h_oscillates ? n : 1),
        detail::scalar_profile_field(prof.b_h, prof.b_h_oscillates ? n : 1));
    CharacteristicMaps maps = characteristic_maps(*coef, split);
    out.side_i.push_back(
        {n, "wot", "map1", wot_distance(maps.m1, lim_maps.m1, probesets[0])});
    out.side_i.push_back(
        {n, "wot", "map2", wot_distance(maps.m2, lim_maps.m2, probesets[1])});
    out.side_i.push_back(
        {n, "wot", "map3", wot_distance(maps.m3, lim_maps.m3, probesets[2])});
    out.side_i.push_back(
        {n, "wot", "map4", wot_distance(maps.m4, lim_maps.m4, probesets[3])});
    weakstar_rows(prof.b_e, prof.b_e_oscillates, 1.0 / out.b_e_limit, n,
                  "be_inv_weakstar");
    weakstar_rows(prof.b_h, prof.b_h_oscillates, 1.0 / out.b_h_limit, n,
                  "bh_inv_weakstar");
  }
  return out;
}

}  // namespace cdhom

#endif  // CDHOM_IMPEDANCE_HPP
