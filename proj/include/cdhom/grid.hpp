#ifndef CDHOM_GRID_HPP
#define CDHOM_GRID_HPP

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdhom/core.hpp"

// Axis-aligned box with the standard staggered layout: scalars at nodes and
// cell centres, vector components on edges and faces. Quadrature weights are
// products of dual lengths, so they sum to the box volume on every space.

namespace cdhom {

struct BoxGrid {
  std::array<int, 3> cells{2, 2, 2};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};

  BoxGrid() = default;
  BoxGrid(std::array<int, 3> n, std::array<double, 3> len)
      : cells(n), lengths(len) {
    for (int a = 0; a < 3; ++a) {
      if (cells[a] < 2)
        throw std::invalid_argument("BoxGrid: need at least 2 cells per axis");
      if (!(lengths[a] > 0.0))
        throw std::invalid_argument("BoxGrid: lengths must be positive");
    }
  }
  static BoxGrid cube(int n, double len = 1.0) {
    return BoxGrid({n, n, n}, {len, len, len});
  }

  double spacing(int axis) const { return lengths[axis] / cells[axis]; }
  double volume() const { return lengths[0] * lengths[1] * lengths[2]; }
};

enum class SpaceTag { node, edge, face, cell };

inline const char* to_string(SpaceTag t) {
  switch (t) {
    case SpaceTag::node: return "node";
    case SpaceTag::edge: return "edge";
    case SpaceTag::face: return "face";
    case SpaceTag::cell: return "cell";
  }
  return "?";
}

inline int component_count(SpaceTag t) {
  return (t == SpaceTag::edge || t == SpaceTag::face) ? 3 : 1;
}

// One scalar component grid of a staggered space. Axes are either
// node-aligned (N+1 points at i*h, half weights at the boundary) or staggered
// (N points at (i+1/2)*h, full weight h).
struct CompGrid {
  std::array<int, 3> ext{};
  std::array<bool, 3> mid{};  // true: midpoint-staggered along this axis
  std::array<double, 3> h{};

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(ext[0]) * ext[1] * ext[2];
  }
  Eigen::Index index(int i, int j, int k) const {
    return i + static_cast<Eigen::Index>(ext[0]) * (j + static_cast<Eigen::Index>(ext[1]) * k);
  }
  double coord(int axis, int i) const {
    return mid[axis] ? (i + 0.5) * h[axis] : i * h[axis];
  }
  double axis_weight(int axis, int i) const {
    if (mid[axis]) return h[axis];
    return (i == 0 || i == ext[axis] - 1) ? 0.5 * h[axis] : h[axis];
  }
  double weight(int i, int j, int k) const {
    return axis_weight(0, i) * axis_weight(1, j) * axis_weight(2, k);
  }
  std::array<double, 3> point(int i, int j, int k) const {
    return {coord(0, i), coord(1, j), coord(2, k)};
  }
};

inline CompGrid component_grid(const BoxGrid& g, SpaceTag tag, int comp) {
  CompGrid cg;
  for (int a = 0; a < 3; ++a) cg.h[a] = g.spacing(a);
  auto set_axis = [&](int a, bool staggered) {
    cg.mid[a] = staggered;
    cg.ext[a] = staggered ? g.cells[a] : g.cells[a] + 1;
  };
  switch (tag) {
    case SpaceTag::node:
      for (int a = 0; a < 3; ++a) set_axis(a, false);
      break;
    case SpaceTag::cell:
      for (int a = 0; a < 3; ++a) set_axis(a, true);
      break;
    case SpaceTag::edge:
      for (int a = 0; a < 3; ++a) set_axis(a, a == comp);
      break;
    case SpaceTag::face:
      for (int a = 0; a < 3; ++a) set_axis(a, a != comp);
      break;
  }
  return cg;
}

// Layout of a (possibly multi-component) staggered space: component grids and
// their offsets in the concatenated coordinate vector.
struct SpaceLayout {
  SpaceTag tag;
  std::vector<CompGrid> comps;
  std::vector<Eigen::Index> offsets;
  Eigen::Index total = 0;

  SpaceLayout(const BoxGrid& g, SpaceTag t) : tag(t) {
    const int nc = component_count(t);
    offsets.resize(nc);
    for (int c = 0; c < nc; ++c) {
      offsets[c] = total;
      comps.push_back(component_grid(g, t, nc == 1 ? 0 : c));
      total += comps.back().size();
    }
  }

  Eigen::Index index(int comp, int i, int j, int k) const {
    return offsets[comp] + comps[comp].index(i, j, k);
  }

  VecR weights() const {
    VecR w(total);
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const CompGrid& cg = comps[c];
      for (int k = 0; k < cg.ext[2]; ++k)
        for (int j = 0; j < cg.ext[1]; ++j)
          for (int i = 0; i < cg.ext[0]; ++i)
            w(offsets[c] + cg.index(i, j, k)) = cg.weight(i, j, k);
    }
    return w;
  }

  template <typename F>  // F: (comp, i, j, k, point) -> void
  void for_each(F&& f) const {
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const CompGrid& cg = comps[c];
      for (int k = 0; k < cg.ext[2]; ++k)
        for (int j = 0; j < cg.ext[1]; ++j)
          for (int i = 0; i < cg.ext[0]; ++i)
            f(static_cast<int>(c), i, j, k, cg.point(i, j, k));
    }
  }
};

// A field sampled on one staggered space, kept next to its tag so consumers
// can recover the component layout.
struct StaggeredField {
  SpaceTag tag = SpaceTag::node;
  VecC values;
};

}  // namespace cdhom

#endif  // CDHOM_GRID_HPP
