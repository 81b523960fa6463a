#pragma once

#include <string>

#include "radlr/solver.hpp"

namespace radlr {

/// Dense-matrix reference state: same split as MultilevelState but without
/// low-rank compression.
struct FullState {
  Matrix psi_u;
  std::vector<Matrix> levels; // n_x x m each
  Matrix collided;
  double t = 0.0;
  int step_index = 0;

  double total_norm() const;
};

FullState make_full_state(const Scene& scene, int levels);

/// Dense four-term streaming flow F(u).
Matrix streaming_flow_full(const Matrix& u, const Scene& scene);

/// One dense step with the same split and ordering as solver::step.
void full_step(FullState& state, const Scene& scene, double sigma_t,
               const Vector& sigma_diag, double dt);

/// Single-equation P_N march (no collision split): explicit streaming, then
/// the columnwise implicit in/out-scattering division.
void plain_pn_step(Matrix& u, const Scene& scene, double sigma_t,
                   const Vector& sigma_diag, double dt);

Vector scalar_flux(const FullState& state, const Scene& scene);

struct OracleConfig {
  int levels = 1;
  double cfl_safety = 0.9;
  std::optional<double> t_end;
  bool accumulate_dose = true;
};

RunReport run_oracle(const Scene& scene, FullState state,
                     const OracleConfig& cfg);

/// Line source benchmark: domain [-1.5,1.5]^2, rho = 1, isotropic unit
/// scattering, Gaussian initial pulse of width sigma = 0.03, t_end = 1.
struct LinesourceSetup {
  Scene scene;
  MultilevelState lowrank;
  FullState full;
};

LinesourceSetup linesource_setup(int cells_per_side, int pn_degree,
                                 int quad_order, int levels, int r_init,
                                 double sigma = 0.03);

/// Beam-driven CSD setup over a density image (CT or synthetic phantom).
/// The domain's left edge defaults to the beam spot x_mean so that the
/// inflow Gaussian enters at full strength.
struct LungConfig {
  double x0 = 7.25; // cm, left edge (beam entry)
  double y0 = 0.0;
  double domain_width = 14.5;  // cm, x extent
  double domain_height = 29.0; // cm, y extent
  int pn_degree = 5;
  int quad_order = 8;
  double cone_half_angle_deg = 84.25; // keeps 396 of 968 nodes at order 22
  int levels = 1;
  int r_init = 2;
  BeamModel beam;            // defaults are the 21 MeV table values
  double e_max = 21.0;
  double s0 = 2.0, s1 = 0.02; // stopping power stand-in
  double hg_c = 1.2, hg_g = 0.85;
  double rho_bone = 1.85, rho_min = 0.05;
};

struct LungSetup {
  Scene scene;
  MultilevelState lowrank;
  FullState full;
};

LungSetup lung_setup(const GrayImage& image, const LungConfig& cfg);

} // namespace radlr
