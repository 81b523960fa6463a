#include "radlr/grid.hpp"

#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace radlr {

Grid2D build_grid(int nx_cells, int ny_cells, double dx, double dy, double x0,
                  double y0, const Vector& density, BoundaryMode mode,
                  double rho_floor) {
  if (nx_cells < 3 || ny_cells < 3)
    throw std::invalid_argument("build_grid: cell counts must be >= 3");
  if (!(dx > 0.0) || !(dy > 0.0))
    throw std::invalid_argument("build_grid: cell widths must be positive");
  if (density.size() != static_cast<Eigen::Index>(nx_cells) * ny_cells)
    throw std::invalid_argument("build_grid: density field size mismatch");
  if (!(rho_floor > 0.0))
    throw std::invalid_argument("build_grid: density floor must be positive");

  Grid2D g;
  g.nx_cells = nx_cells;
  g.ny_cells = ny_cells;
  g.dx = dx;
  g.dy = dy;
  g.x0 = x0;
  g.y0 = y0;
  g.boundary = mode;
  g.rho = density;
  for (Eigen::Index c = 0; c < g.rho.size(); ++c) {
    if (!std::isfinite(g.rho[c]))
      throw std::invalid_argument("build_grid: non-finite density value");
    if (g.rho[c] < rho_floor) {
      g.rho[c] = rho_floor;
      ++g.floored_cells;
    }
  }
  return g;
}

namespace {

using Triplet = Eigen::Triplet<double>;

struct StencilBuilder {
  const Grid2D& g;
  std::vector<Triplet> diff, adv; // T1, T2 entries

  // neighbor offset along `axis` by `step` in {-1,+1}; returns -1 when the
  // neighbor falls outside a dirichlet grid
  int neighbor(int i, int j, int axis, int step) const {
    int ni = i + (axis == 0 ? step : 0);
    int nj = j + (axis == 1 ? step : 0);
    if (g.boundary == BoundaryMode::periodic) {
      ni = (ni + g.nx_cells) % g.nx_cells;
      nj = (nj + g.ny_cells) % g.ny_cells;
    } else if (ni < 0 || ni >= g.nx_cells || nj < 0 || nj >= g.ny_cells) {
      return -1;
    }
    return g.flat(ni, nj);
  }

  void assemble(int axis, double h) {
    const double half = 0.5 / h;
    for (int i = 0; i < g.nx_cells; ++i) {
      for (int j = 0; j < g.ny_cells; ++j) {
        const int row = g.flat(i, j);
        diff.emplace_back(row, row, -1.0 / h);
        const int up = neighbor(i, j, axis, +1);
        const int dn = neighbor(i, j, axis, -1);
        if (up >= 0) {
          diff.emplace_back(row, up, half);
          adv.emplace_back(row, up, -half);
        }
        if (dn >= 0) {
          diff.emplace_back(row, dn, half);
          adv.emplace_back(row, dn, half);
        }
      }
    }
  }
};

SpMat from_triplets(int n, const std::vector<Triplet>& t) {
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SpMat density_scaled(const SpMat& t, const Vector& rho) {
  SpMat l = t;
  for (int r = 0; r < l.outerSize(); ++r)
    for (SpMat::InnerIterator it(l, r); it; ++it)
      it.valueRef() /= rho[it.col()];
  return l;
}

} // namespace

StencilSet build_stencils(const Grid2D& g) {
  const int n = g.cell_count();
  StencilSet s;

  StencilBuilder bx{g, {}, {}};
  bx.assemble(0, g.dx);
  s.T1x = from_triplets(n, bx.diff);
  s.T2x = from_triplets(n, bx.adv);

  StencilBuilder by{g, {}, {}};
  by.assemble(1, g.dy);
  s.T1y = from_triplets(n, by.diff);
  s.T2y = from_triplets(n, by.adv);

  s.L1x = density_scaled(s.T1x, g.rho);
  s.L2x = density_scaled(s.T2x, g.rho);
  s.L1y = density_scaled(s.T1y, g.rho);
  s.L2y = density_scaled(s.T2y, g.rho);
  return s;
}

std::vector<BoundaryFace> boundary_faces(const Grid2D& g) {
  std::vector<BoundaryFace> faces;
  if (g.boundary != BoundaryMode::dirichlet_ghost) return faces;
  for (int j = 0; j < g.ny_cells; ++j) {
    faces.push_back({g.flat(0, j), 0, -1, g.x0 - 0.5 * g.dx, g.cell_y(j)});
    faces.push_back({g.flat(g.nx_cells - 1, j), 0, +1,
                     g.x0 + (g.nx_cells + 0.5) * g.dx, g.cell_y(j)});
  }
  for (int i = 0; i < g.nx_cells; ++i) {
    faces.push_back({g.flat(i, 0), 1, -1, g.cell_x(i), g.y0 - 0.5 * g.dy});
    faces.push_back({g.flat(i, g.ny_cells - 1), 1, +1, g.cell_x(i),
                     g.y0 + (g.ny_cells + 0.5) * g.dy});
  }
  return faces;
}

FourierDiag build_fourier(const Grid2D& g) {
  if (g.boundary != BoundaryMode::periodic)
    throw std::invalid_argument("build_fourier: requires a periodic grid");
  const int n = g.cell_count();
  if (n > 4096)
    throw std::invalid_argument("build_fourier: grid too large (n_x > 4096)");

  const int nx = g.nx_cells, ny = g.ny_cells;
  FourierDiag f;
  f.modes.resize(n, n);
  f.d1x.resize(n);
  f.d1y.resize(n);
  f.d2x.resize(n);
  f.d2y.resize(n);

  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  const std::complex<double> iu(0.0, 1.0);
  for (int a = 0; a < nx; ++a) {
    const double thx = 2.0 * M_PI * a / nx;
    for (int b = 0; b < ny; ++b) {
      const double thy = 2.0 * M_PI * b / ny;
      const int col = g.flat(a, b);
      f.d1x[col] = (std::cos(thx) - 1.0) / g.dx;
      f.d2x[col] = -iu * std::sin(thx) / g.dx;
      f.d1y[col] = (std::cos(thy) - 1.0) / g.dy;
      f.d2y[col] = -iu * std::sin(thy) / g.dy;
      for (int l = 0; l < nx; ++l)
        for (int k = 0; k < ny; ++k)
          f.modes(g.flat(l, k), col) =
              norm * std::exp(iu * (thx * l + thy * k));
    }
  }
  return f;
}

void export_coo(const SpMat& m, std::ostream& os) {
  os << "# row col value (" << m.rows() << " x " << m.cols() << ", "
     << m.nonZeros() << " entries)\n";
  for (int r = 0; r < m.outerSize(); ++r)
    for (SpMat::InnerIterator it(m, r); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

} // namespace radlr
