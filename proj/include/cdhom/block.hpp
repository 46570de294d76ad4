#ifndef CDHOM_BLOCK_HPP
#define CDHOM_BLOCK_HPP

#include <array>
#include <stdexcept>
#include <utility>

#include "cdhom/coefficient.hpp"
#include "cdhom/complex_pair.hpp"

// 2x2 block form of a coefficient relative to rge(A0) (+) rge(A1*), the four
// characteristic maps of the nonlocal H-topology, and the admissibility class
// M(alpha, beta, (A0, A1)).

namespace cdhom {

struct DecompositionNotSpanningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BlockCoefficient {
  // Blocks expressed in the stored orthonormal bases: a00 acts on rge(A0)
  // coordinates, a11 on rge(A1*) coordinates.
  MatC a00, a01, a10, a11;
};

namespace detail {

// Compresses a to the two cached bases. Requires trivial harmonic space so
// that the bases span the middle space.
inline std::pair<MatC, MatC> block_images(const Coefficient& a,
                                          const ComplexPair& pair) {
  if (a.space()->dim() != pair.middle_space()->dim())
    throw DimensionError("block_decompose: coefficient acts on the wrong space");
  if (pair.harmonic_dim() != 0)
    throw DecompositionNotSpanningError(
        "block_decompose: rge(A0) (+) rge(A1*) does not span the middle space "
        "(harmonic dimension " + std::to_string(pair.harmonic_dim()) + ")");
  const MatC& B0 = pair.range_A0_basis();
  const MatC& B1 = pair.range_A1_adj_basis();
  MatC a_B0(B0.rows(), B0.cols());
  for (Eigen::Index j = 0; j < B0.cols(); ++j) a_B0.col(j) = a.apply(B0.col(j));
  MatC a_B1(B1.rows(), B1.cols());
  for (Eigen::Index j = 0; j < B1.cols(); ++j) a_B1.col(j) = a.apply(B1.col(j));
  return {std::move(a_B0), std::move(a_B1)};
}

}  // namespace detail

inline BlockCoefficient block_decompose(const Coefficient& a,
                                        const ComplexPair& pair) {
  auto [a_B0, a_B1] = detail::block_images(a, pair);
  const MatC& B0 = pair.range_A0_basis();
  const MatC& B1 = pair.range_A1_adj_basis();
  const VecR& w = pair.middle_space()->weights();
  MatC P0 = B0.adjoint() * w.asDiagonal();
  MatC P1 = B1.adjoint() * w.asDiagonal();
  BlockCoefficient b;
  b.a00 = P0 * a_B0;
  b.a01 = P0 * a_B1;
  b.a10 = P1 * a_B0;
  b.a11 = P1 * a_B1;
  return b;
}

struct AdmissibilityParams {
  double alpha = 0.0;
  double beta = 0.0;
  AdmissibilityParams(double a, double b) : alpha(a), beta(b) {
    if (!(0.0 < a && a <= b))
      throw std::invalid_argument("AdmissibilityParams: need 0 < alpha <= beta");
  }
};

struct AdmissibilityReport {
  double floor_a00 = 0.0;          // min eig of Re part of a00
  double floor_a00_inv = 0.0;      // of a00^{-1}
  double floor_ainv_11 = 0.0;      // of (a^{-1})_{11}
  double floor_ainv_11_inv = 0.0;  // of (a^{-1})_{11}^{-1}
  bool member = false;
};

namespace detail {

inline MatC inverse_checked(const MatC& m, const char* what) {
  Eigen::PartialPivLU<MatC> lu(m);
  double det_scale = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  double norm_scale = m.cwiseAbs().maxCoeff();
  if (m.size() == 0) return m;
  if (det_scale <= kRankRelTol * (norm_scale + 1e-300))
    throw SingularOperatorError(std::string("singular operator in ") + what);
  return lu.inverse();
}

}  // namespace detail

// Membership check for M(alpha, beta, (A0, A1)):
//   Re a00 >= alpha, Re a00^{-1} >= 1/beta,
//   a invertible, Re (a^{-1})_{11} >= 1/beta, Re (a^{-1})_{11}^{-1} >= alpha.
inline AdmissibilityReport admissibility_check(const Coefficient& a,
                                               const AdmissibilityParams& params,
                                               const ComplexPair& pair) {
  BlockCoefficient blocks = block_decompose(a, pair);
  AdmissibilityReport rep;
  rep.floor_a00 = hermitian_part_floor(blocks.a00);
  MatC a00_inv = detail::inverse_checked(blocks.a00, "admissibility_check (a00)");
  rep.floor_a00_inv = hermitian_part_floor(a00_inv);

  if (pair.range_A1_adj_basis().cols() > 0) {
    // (a^{-1})_{11} through the dense inverse of the full block matrix.
    const Eigen::Index r0 = blocks.a00.rows();
    const Eigen::Index r1 = blocks.a11.rows();
    MatC full(r0 + r1, r0 + r1);
    full << blocks.a00, blocks.a01, blocks.a10, blocks.a11;
    MatC full_inv = detail::inverse_checked(full, "admissibility_check (a)");
    MatC ainv11 = full_inv.block(r0, r0, r1, r1);
    rep.floor_ainv_11 = hermitian_part_floor(ainv11);
    MatC ainv11_inv =
        detail::inverse_checked(ainv11, "admissibility_check ((a^-1)_11)");
    rep.floor_ainv_11_inv = hermitian_part_floor(ainv11_inv);
  } else {
    // Degenerate pair (A1 = 0): only the a00 conditions remain.
    rep.floor_ainv_11 = rep.floor_a00_inv;
    rep.floor_ainv_11_inv = rep.floor_a00;
  }

  const double tol = 1e-12;
  rep.member = rep.floor_a00 >= params.alpha - tol &&
               rep.floor_a00_inv >= 1.0 / params.beta - tol &&
               rep.floor_ainv_11 >= 1.0 / params.beta - tol &&
               rep.floor_ainv_11_inv >= params.alpha - tol;
  return rep;
}

struct CharacteristicMaps {
  MatC m1;  // a00^{-1}
  MatC m2;  // a10 a00^{-1}
  MatC m3;  // a00^{-1} a01
  MatC m4;  // a11 - a10 a00^{-1} a01   (Schur complement)
};

inline CharacteristicMaps characteristic_maps(const BlockCoefficient& b) {
  CharacteristicMaps maps;
  maps.m1 = detail::inverse_checked(b.a00, "characteristic_maps (a00)");
  maps.m2 = b.a10 * maps.m1;
  maps.m3 = maps.m1 * b.a01;
  maps.m4 = b.a11 - b.a10 * maps.m1 * b.a01;
  return maps;
}

inline CharacteristicMaps characteristic_maps(const Coefficient& a,
                                              const ComplexPair& pair) {
  return characteristic_maps(block_decompose(a, pair));
}

}  // namespace cdhom

#endif  // CDHOM_BLOCK_HPP
