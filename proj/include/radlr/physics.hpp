#pragma once

#include <utility>
#include <vector>

#include "radlr/grid.hpp"
#include "radlr/types.hpp"

namespace radlr {

/// Stopping power S(E) > 0, either the analytic family s0 + s1*E or a
/// tabulated curve with linear interpolation (clamped outside the table).
class StoppingPower {
 public:
  static StoppingPower linear(double s0, double s1);
  static StoppingPower tabulated(std::vector<double> energy,
                                 std::vector<double> value);

  double operator()(double E) const;

 private:
  bool tabulated_ = false;
  double s0_ = 1.0, s1_ = 0.0;
  std::vector<double> e_, v_;
};

/// Henyey-Greenstein scattering kernel with energy-dependent magnitude c(E)
/// (the total scattering cross section) and anisotropy g(E); g = 0 is the
/// isotropic case. Both vary linearly in E.
struct HGKernel {
  double c0 = 1.0, c1 = 0.0;
  double g0 = 0.0, g1 = 0.0;

  double magnitude(double E) const { return c0 + c1 * E; }
  double g(double E) const { return g0 + g1 * E; }
  double operator()(double E, double mu) const;
};

/// Cross sections plus the energy <-> pseudo-time transform
/// t(E) = integral of 1/S from E to E_max (clamped below at E_cut).
struct CrossSectionModel {
  StoppingPower stopping = StoppingPower::linear(1.0, 0.0);
  HGKernel kernel;
  double E_max = 1.0;
  double E_cut = 0.0;

  double pseudo_time(double E) const;
  double energy_of(double t) const; // monotone inverse, bisection to 1e-10
  double t_end() const { return pseudo_time(E_cut); }

  /// In-scattering diagonal and total cross section at pseudo-time t;
  /// sigma_t equals the zero-degree entry.
  std::pair<double, Vector> scatter_diagonal(double t, int N) const;
};

/// Pointwise transformed density psi~ = S(E) * rho * psi and its inverse.
double transform_density(double psi, double E, double rho,
                         const CrossSectionModel& m);
double untransform_density(double psi_t, double E, double rho,
                           const CrossSectionModel& m);

/// Gaussian beam boundary model; the table values are inverse variances.
struct BeamModel {
  double amplitude = 1e5;
  double x_mean = 7.25;
  double y_mean = 14.5;
  double omega1_mean = 1.0;
  double e_mean = 21.0;
  double inv_var_x = 20.0;
  double inv_var_y = 20.0;
  double inv_var_omega1 = 75.0;
  double inv_var_e = 100.0;

  bool operator==(const BeamModel&) const = default;
};

double eval_beam(const BeamModel& b, double E, double x, double y,
                 double omega1);

struct DoseGrid {
  Vector values;
  explicit DoseGrid(int cells = 0) : values(Vector::Zero(cells)) {}
};

/// Left-endpoint accumulation: dose += dt * scalar_flux / rho per cell.
void accumulate_dose(DoseGrid& dose, const Vector& scalar_flux,
                     const Grid2D& grid, double dt);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels; // row-major, row 0 = top, values in [0,1]

  double at(int row, int col) const { return pixels[row * width + col]; }
};

/// Affine map gray->density with gray 1 -> rho_bone and gray 0 -> rho_min,
/// then the air region connected to the image border (gray <= air_threshold)
/// is overwritten with rho_fill. Returns the flat density field for a grid
/// with nx = width, ny = height (image row 0 = top = highest y).
Vector ct_to_density(const GrayImage& img, double rho_bone = 1.85,
                     double rho_min = 0.05, double air_threshold = 0.02,
                     double rho_fill = 1.0);

} // namespace radlr
