#ifndef CDHOM_GRID_COMPLEX_HPP
#define CDHOM_GRID_COMPLEX_HPP

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "cdhom/coefficient.hpp"
#include "cdhom/complex_pair.hpp"
#include "cdhom/grid.hpp"

// The discrete grad/curl/div complex on a box. The assembled G, C, D carry no
// boundary constraints; homogeneous boundary conditions live in the weighted
// adjoints (C* is the curl with vanishing tangential trace, D* the negative
// gradient with vanishing Dirichlet trace).

namespace cdhom {

struct DiscreteComplex {
  BoxGrid grid;
  SpaceLayout node_layout;
  SpaceLayout edge_layout;
  SpaceLayout face_layout;
  SpaceLayout cell_layout;
  SpacePtr nodes, edges, faces, cells;
  LinearOp G;  // nodes -> edges
  LinearOp C;  // edges -> faces
  LinearOp D;  // faces -> cells
  std::optional<ExactnessReport> grad_curl_exactness;
  std::optional<ExactnessReport> curl_div_exactness;

  const SpaceLayout& layout(SpaceTag t) const {
    switch (t) {
      case SpaceTag::node: return node_layout;
      case SpaceTag::edge: return edge_layout;
      case SpaceTag::face: return face_layout;
      case SpaceTag::cell: return cell_layout;
    }
    throw std::logic_error("layout: bad tag");
  }
  const SpacePtr& space(SpaceTag t) const {
    switch (t) {
      case SpaceTag::node: return nodes;
      case SpaceTag::edge: return edges;
      case SpaceTag::face: return faces;
      case SpaceTag::cell: return cells;
    }
    throw std::logic_error("space: bad tag");
  }
};

namespace detail {

inline LinearOp assemble_grad(const BoxGrid& g, const SpaceLayout& nodes,
                              const SpaceLayout& edges, const SpacePtr& ns,
                              const SpacePtr& es) {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(2 * edges.total);
  for (int c = 0; c < 3; ++c) {
    const CompGrid& cg = edges.comps[c];
    const double inv_h = 1.0 / g.spacing(c);
    for (int k = 0; k < cg.ext[2]; ++k)
      for (int j = 0; j < cg.ext[1]; ++j)
        for (int i = 0; i < cg.ext[0]; ++i) {
          const Eigen::Index row = edges.index(c, i, j, k);
          int ip = i + (c == 0), jp = j + (c == 1), kp = k + (c == 2);
          trip.emplace_back(row, nodes.index(0, ip, jp, kp), cplx(inv_h));
          trip.emplace_back(row, nodes.index(0, i, j, k), cplx(-inv_h));
        }
  }
  SpMatC m(edges.total, nodes.total);
  m.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(ns, es, std::move(m));
}

inline LinearOp assemble_curl(const BoxGrid& g, const SpaceLayout& edges,
                              const SpaceLayout& faces, const SpacePtr& es,
                              const SpacePtr& fs) {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(4 * faces.total);
  for (int c = 0; c < 3; ++c) {
    const int u = (c + 1) % 3, v = (c + 2) % 3;
    const CompGrid& cg = faces.comps[c];
    const double inv_hu = 1.0 / g.spacing(u), inv_hv = 1.0 / g.spacing(v);
    for (int k = 0; k < cg.ext[2]; ++k)
      for (int j = 0; j < cg.ext[1]; ++j)
        for (int i = 0; i < cg.ext[0]; ++i) {
          const Eigen::Index row = faces.index(c, i, j, k);
          std::array<int, 3> m{i, j, k};
          auto idx = [&](int comp, std::array<int, 3> p) {
            return edges.index(comp, p[0], p[1], p[2]);
          };
          std::array<int, 3> mu = m;  // shifted along u
          ++mu[u];
          std::array<int, 3> mv = m;  // shifted along v
          ++mv[v];
          // (curl e)_c = d_u e_v - d_v e_u
          trip.emplace_back(row, idx(v, mu), cplx(inv_hu));
          trip.emplace_back(row, idx(v, m), cplx(-inv_hu));
          trip.emplace_back(row, idx(u, mv), cplx(-inv_hv));
          trip.emplace_back(row, idx(u, m), cplx(inv_hv));
        }
  }
  SpMatC mat(faces.total, edges.total);
  mat.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(es, fs, std::move(mat));
}

inline LinearOp assemble_div(const BoxGrid& g, const SpaceLayout& faces,
                             const SpaceLayout& cells, const SpacePtr& fs,
                             const SpacePtr& cs) {
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(6 * cells.total);
  const CompGrid& cg = cells.comps[0];
  for (int k = 0; k < cg.ext[2]; ++k)
    for (int j = 0; j < cg.ext[1]; ++j)
      for (int i = 0; i < cg.ext[0]; ++i) {
        const Eigen::Index row = cells.index(0, i, j, k);
        for (int c = 0; c < 3; ++c) {
          const double inv_h = 1.0 / g.spacing(c);
          std::array<int, 3> m{i, j, k};
          std::array<int, 3> mp = m;
          ++mp[c];
          trip.emplace_back(row, faces.index(c, mp[0], mp[1], mp[2]), cplx(inv_h));
          trip.emplace_back(row, faces.index(c, m[0], m[1], m[2]), cplx(-inv_h));
        }
      }
  SpMatC mat(cells.total, faces.total);
  mat.setFromTriplets(trip.begin(), trip.end());
  return LinearOp(fs, cs, std::move(mat));
}

}  // namespace detail

// Rank certificates need dense factorizations; they are attached by default
// only when the edge space is small enough to make that cheap.
inline DiscreteComplex build_box_complex(const BoxGrid& grid,
                                         std::optional<bool> rank_certificates = {}) {
  SpaceLayout nl(grid, SpaceTag::node), el(grid, SpaceTag::edge),
      fl(grid, SpaceTag::face), cl(grid, SpaceTag::cell);
  SpacePtr ns = make_space(nl.weights(), "nodes");
  SpacePtr es = make_space(el.weights(), "edges");
  SpacePtr fs = make_space(fl.weights(), "faces");
  SpacePtr cs = make_space(cl.weights(), "cells");
  LinearOp G = detail::assemble_grad(grid, nl, el, ns, es);
  LinearOp C = detail::assemble_curl(grid, el, fl, es, fs);
  LinearOp D = detail::assemble_div(grid, fl, cl, fs, cs);
  DiscreteComplex dc{grid,          std::move(nl), std::move(el), std::move(fl),
                     std::move(cl), ns,            es,            fs,
                     cs,            std::move(G),  std::move(C),  std::move(D),
                     {},            {}};
  const bool certify = rank_certificates.value_or(es->dim() <= 4000);
  if (certify) {
    dc.grad_curl_exactness = verify_exactness(dc.G, dc.C);
    dc.curl_div_exactness = verify_exactness(dc.C, dc.D);
  }
  return dc;
}

using ScalarField = std::function<cplx(double, double, double)>;
using DiagField = std::function<Eigen::Vector3cd(double, double, double)>;
using MatrixField = std::function<Eigen::Matrix3cd(double, double, double)>;

namespace detail {

inline void reject_bad_sample(cplx v) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw std::invalid_argument("sample_coefficient: non-finite sample");
}

}  // namespace detail

// Scalar fields multiply every component at its own staggered location.
inline CoefficientPtr sample_coefficient(const ScalarField& d,
                                         const DiscreteComplex& dc, SpaceTag tag) {
  const SpaceLayout& layout = dc.layout(tag);
  VecC vals(layout.total);
  layout.for_each([&](int c, int i, int j, int k, std::array<double, 3> p) {
    cplx v = d(p[0], p[1], p[2]);
    detail::reject_bad_sample(v);
    vals(layout.index(c, i, j, k)) = v;
  });
  return std::make_shared<DiagonalCoefficient>(dc.space(tag), std::move(vals));
}

// Diagonal matrix fields: component c is scaled by the c-th diagonal entry,
// sampled at the component location.
inline CoefficientPtr sample_coefficient(const DiagField& d,
                                         const DiscreteComplex& dc, SpaceTag tag) {
  const SpaceLayout& layout = dc.layout(tag);
  if (component_count(tag) != 3)
    throw std::invalid_argument("sample_coefficient: matrix field needs a vector space");
  VecC vals(layout.total);
  layout.for_each([&](int c, int i, int j, int k, std::array<double, 3> p) {
    Eigen::Vector3cd v = d(p[0], p[1], p[2]);
    detail::reject_bad_sample(v(c));
    vals(layout.index(c, i, j, k)) = v(c);
  });
  return std::make_shared<DiagonalCoefficient>(dc.space(tag), std::move(vals));
}

// Full 3x3 matrix fields on staggered vector spaces: off-component values are
// averaged from the 4 nearest hosts of the other component. Experimental for
// identification; acceptance paths use diagonal coefficients.
CoefficientPtr sample_full_matrix_coefficient(const MatrixField& a,
                                              const DiscreteComplex& dc,
                                              SpaceTag tag);

// x -> d(n*x mod 1 per axis) for unit-periodic d.
inline ScalarField periodic_rescale(ScalarField d, int n) {
  if (n < 1) throw std::invalid_argument("periodic_rescale: n must be >= 1");
  return [d = std::move(d), n](double x, double y, double z) {
    auto frac = [](double t) { return t - std::floor(t); };
    return d(frac(n * x), frac(n * y), frac(n * z));
  };
}

inline DiagField periodic_rescale(DiagField d, int n) {
  if (n < 1) throw std::invalid_argument("periodic_rescale: n must be >= 1");
  return [d = std::move(d), n](double x, double y, double z) {
    auto frac = [](double t) { return t - std::floor(t); };
    return d(frac(n * x), frac(n * y), frac(n * z));
  };
}

// Implementation of the averaging sampler. For row component r and column
// component c != r, the value of column component c is taken as the
// arithmetic mean over the nearest hosts of component c around the row
// location (4 on staggered vector spaces).
inline CoefficientPtr sample_full_matrix_coefficient_impl(const MatrixField& a,
                                                          const DiscreteComplex& dc,
                                                          SpaceTag tag) {
  if (component_count(tag) != 3)
    throw std::invalid_argument("sample_full_matrix_coefficient: need edge or face space");
  const SpaceLayout& layout = dc.layout(tag);
  std::vector<Eigen::Triplet<cplx>> trip;
  layout.for_each([&](int r, int i, int j, int k, std::array<double, 3> p) {
    Eigen::Matrix3cd m = a(p[0], p[1], p[2]);
    for (int rr = 0; rr < 3; ++rr)
      for (int cc = 0; cc < 3; ++cc) detail::reject_bad_sample(m(rr, cc));
    const Eigen::Index row = layout.index(r, i, j, k);
    trip.emplace_back(row, row, m(r, r));
    std::array<int, 3> idx{i, j, k};
    for (int c = 0; c < 3; ++c) {
      if (c == r) continue;
      // Hosts of component c nearest to the row location: along each axis
      // where the two grids stagger differently, take the two neighbouring
      // indices (clamped at the boundary) and average.
      const CompGrid& target = layout.comps[c];
      std::vector<std::array<int, 3>> cand{{idx}};
      for (int ax = 0; ax < 3; ++ax) {
        const bool row_mid = layout.comps[r].mid[ax];
        const bool tgt_mid = target.mid[ax];
        if (row_mid == tgt_mid) continue;
        std::vector<std::array<int, 3>> next;
        for (auto q : cand) {
          int lo, hi;
          if (!row_mid && tgt_mid) {
            lo = q[ax] - 1;
            hi = q[ax];
          } else {
            lo = q[ax];
            hi = q[ax] + 1;
          }
          for (int t : {lo, hi}) {
            int tt = std::min(std::max(t, 0), target.ext[ax] - 1);
            auto qq = q;
            qq[ax] = tt;
            next.push_back(qq);
          }
        }
        cand = std::move(next);
      }
      const cplx w = m(r, c) / static_cast<double>(cand.size());
      for (const auto& q : cand)
        trip.emplace_back(row, layout.index(c, q[0], q[1], q[2]), w);
    }
  });
  SpMatC mat(layout.total, layout.total);
  mat.setFromTriplets(trip.begin(), trip.end());
  return std::make_shared<SparseCoefficient>(dc.space(tag), std::move(mat), false);
}

inline CoefficientPtr sample_full_matrix_coefficient(const MatrixField& a,
                                                     const DiscreteComplex& dc,
                                                     SpaceTag tag) {
  return sample_full_matrix_coefficient_impl(a, dc, tag);
}

}  // namespace cdhom

#endif  // CDHOM_GRID_COMPLEX_HPP
