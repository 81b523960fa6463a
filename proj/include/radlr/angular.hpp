#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "radlr/types.hpp"

namespace radlr {

/// Real spherical harmonic m_l^k at a unit direction omega.
/// Orthonormal on the sphere; m_0^0 = 1/sqrt(4*pi).
double eval_real_sh(int l, int k, const Eigen::Vector3d& omega);

/// P_N basis metadata: flux matrices A_x/A_y over the harmonics up to
/// degree N (m = (N+1)^2 of them, ordered (0,0),(1,-1),(1,0),(1,1),...),
/// their eigendecompositions and the Roe matrices |A| = V |Lambda| V^T.
struct PnBasis {
  int degree = 0;
  int size = 0;
  std::vector<std::pair<int, int>> lk; // flat index -> (l,k)
  Matrix Ax, Ay;
  Matrix absAx, absAy;
  Matrix Vx, Vy;
  Vector lamx, lamy;
  double lambda_max = 0.0;

  int flat(int l, int k) const { return l * l + l + k; }
};

PnBasis build_pn_basis(int N);

/// Angular quadrature set with the nodal-to-moment map
/// T_M[q,a] = w_q * m_a(omega_q), so moments = psi * T_M for nodal psi.
struct Quadrature {
  Matrix points;  // n_q x 3 unit vectors
  Vector weights; // sum = 4*pi for the full set
  Matrix moment_map;
  double omega_x_max = 0.0; // max |omega_x| over the set (CFL input)
  double omega_y_max = 0.0;

  int count() const { return static_cast<int>(weights.size()); }
};

/// Tensor product set: Gauss-Legendre(order) in mu times 2*order uniform
/// midpoint nodes in phi. Exact for harmonic products up to degree
/// 2*order - 2.
Quadrature build_quadrature(int order, const PnBasis& basis);

/// Subset of the full set within a cone around beam_dir; weights are kept
/// unchanged. Throws if the cone captures no points.
Quadrature build_directed_quadrature(int order, const PnBasis& basis,
                                     const Eigen::Vector3d& beam_dir,
                                     double cone_half_angle);

/// Diagonal of the in-scattering matrix for an azimuthally symmetric kernel:
/// entry for harmonic (l,k) is 2*pi * integral of P_l(mu)*kernel(mu) over
/// [-1,1], evaluated by Gauss-Legendre quadrature. The total cross section
/// is the (0,0) entry. Throws on NaN or if |sigma_kk| exceeds the (0,0)
/// entry (inadmissible kernel).
Vector build_scatter_diagonal(const std::function<double(double)>& kernel,
                              int N);

/// Legendre polynomial P_l(x), used by the scattering moments and tests.
double legendre_p(int l, double x);

} // namespace radlr
