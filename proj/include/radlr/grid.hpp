#pragma once

#include <iosfwd>
#include <vector>

#include "radlr/types.hpp"

namespace radlr {

enum class BoundaryMode { periodic, dirichlet_ghost };

/// Structured 2D cell-centered mesh with a per-cell density field.
///
/// Cells are indexed (i,j) with i in [0,nx_cells) along x and j in
/// [0,ny_cells) along y; the flat index is i*ny_cells + j. All file
/// formats use this 0-based x-major order.
struct Grid2D {
  int nx_cells = 0;
  int ny_cells = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0; // lower-left corner
  double y0 = 0.0;
  BoundaryMode boundary = BoundaryMode::periodic;
  Vector rho;       // cell densities, flat order
  int floored_cells = 0;

  int cell_count() const { return nx_cells * ny_cells; }
  int flat(int i, int j) const { return i * ny_cells + j; }
  double cell_x(int i) const { return x0 + (i + 0.5) * dx; }
  double cell_y(int j) const { return y0 + (j + 0.5) * dy; }
  double rho_min() const { return rho.minCoeff(); }
};

/// Validates dimensions, applies the density floor and counts floored cells.
Grid2D build_grid(int nx_cells, int ny_cells, double dx, double dy, double x0,
                  double y0, const Vector& density, BoundaryMode mode,
                  double rho_floor = 0.05);

/// Sparse 5-point stencil matrices.
///
/// T matrices are density-free; L = T * diag(rho)^{-1}. T1 is the (negative
/// semi-definite) diffusion stencil, T2 the antisymmetric advection stencil;
/// the streaming flow L2 u A^T + L1 u |A|^T is the upwind scheme. In
/// dirichlet_ghost mode, rows next to the physical boundary simply drop the
/// out-of-range neighbor (zero ghost value); inflow enters separately through
/// boundary-face contributions.
struct StencilSet {
  SpMat T1x, T1y, T2x, T2y;
  SpMat L1x, L1y, L2x, L2y;
};

StencilSet build_stencils(const Grid2D& g);

/// One cell face on the physical boundary (dirichlet_ghost mode).
/// axis: 0 = x, 1 = y. normal: outward normal sign along that axis.
/// gx, gy: center of the ghost cell behind the face.
struct BoundaryFace {
  int cell;
  int axis;
  int normal;
  double gx, gy;
};

std::vector<BoundaryFace> boundary_faces(const Grid2D& g);

/// Discrete Fourier modes diagonalizing the periodic stencils,
/// T * modes = modes * diag(symbol).
struct FourierDiag {
  Eigen::MatrixXcd modes; // n_x x n_x, unitary
  Eigen::VectorXcd d1x, d1y, d2x, d2y;
};

/// Periodic grids only; refuses n_x > 4096.
FourierDiag build_fourier(const Grid2D& g);

/// Coordinate-list text dump (row col value per line, 0-based).
void export_coo(const SpMat& m, std::ostream& os);

} // namespace radlr
