#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radlr/angular.hpp"
#include "radlr/dlra.hpp"
#include "radlr/grid.hpp"
#include "radlr/physics.hpp"
#include "radlr/types.hpp"

namespace radlr {

/// Everything a march needs: mesh, stencils, angular discretization,
/// cross sections and (for beam-driven problems) the boundary model.
/// Immutable during a run; shareable between the low-rank solver and the
/// full-matrix reference solver.
struct Scene {
  Grid2D grid;
  StencilSet stencils;
  PnBasis basis;
  Quadrature quad;
  CrossSectionModel xs;
  std::optional<BeamModel> beam;
  std::vector<BoundaryFace> faces;
};

Scene make_scene(Grid2D grid, PnBasis basis, Quadrature quad,
                 CrossSectionModel xs, std::optional<BeamModel> beam = {});

enum class IntegratorMode { fixed_rank, adaptive };

struct SolverConfig {
  int levels = 1; // L; 0 means the plain collided/uncollided split
  IntegratorMode mode = IntegratorMode::adaptive;
  TruncationPolicy trunc;
  int r_init = 2;
  double cfl_safety = 0.9;
  std::optional<double> t_end; // defaults to the model's pseudo-time range
  bool accumulate_dose = true;
};

/// Nodal uncollided flux plus the factored moment components.
struct MultilevelState {
  Matrix psi_u; // n_x x n_q
  std::vector<LowRankFactors> levels;
  LowRankFactors collided;
  double t = 0.0;
  int step_index = 0;

  double total_norm() const;
};

MultilevelState make_state(const Scene& scene, int levels, int r_init);

/// CFL step size: safety * 1/2 * rho_min * min(dx,dy) / lambda_eff, where
/// lambda_eff also covers the quadrature direction components when
/// omega_max > 0. The scattering restriction is checked at pseudo-time t
/// and can only bite for inadmissible kernels (some sigma_kk > sigma_t), in
/// which case dt is shrunk to keep the implicit denominators positive.
double cfl_dt(const Grid2D& grid, const PnBasis& basis,
              const CrossSectionModel& xs, double t, double safety,
              double omega_max = 0.0);
double cfl_dt(const Scene& scene, double t, double safety);

/// Explicit upwind streaming of the nodal flux, beam inflow through the
/// ghost faces, then implicit out-scattering.
void uncollided_step(Matrix& psi, const Scene& scene, double t1,
                     double sigma_t, double dt);

/// One streaming step of a factored component (four-term flux flow);
/// adaptive mode augments, pads and truncates.
LowRankFactors streaming_update(const LowRankFactors& f, const Scene& scene,
                                double dt, IntegratorMode mode,
                                const TruncationPolicy& policy);

/// Implicit in-/out-scattering update of level ell (1-based). The source is
/// psi_u * T_M * Sigma for ell = 1 and level ell-1 (already advanced to t1)
/// otherwise.
void scatter_update_level(int ell, MultilevelState& state, const Scene& scene,
                          double sigma_t, const Vector& sigma_diag, double dt,
                          IntegratorMode mode, const TruncationPolicy& policy);

/// Explicit in-scattering from the deepest level (or from psi_u when L = 0)
/// followed by the projector-splitting L-step for self-scattering.
void scatter_update_collided(MultilevelState& state, const Scene& scene,
                             double sigma_t, const Vector& sigma_diag,
                             double dt, IntegratorMode mode,
                             const TruncationPolicy& policy);

/// Scalar flux sqrt(4*pi) * (zeroth moments) + quadrature sum of psi_u.
Vector scalar_flux(const MultilevelState& state, const Scene& scene);

/// One full step of the cascade at step size dt (state.t advances by dt).
void step(MultilevelState& state, const Scene& scene, const SolverConfig& cfg,
          double dt);

struct RankRow {
  int step;
  double t;
  std::string component;
  int rank;
};

struct NormRow {
  int step;
  double t;
  double psi;
  std::vector<double> levels;
  double collided;
  double total;
};

struct RunReport {
  Vector dose;
  Vector flux; // scalar flux at the final pseudo-time
  std::vector<RankRow> ranks;
  std::vector<NormRow> norms;
  std::vector<double> dts;
  int steps = 0;
  double wall_seconds = 0.0;
  bool norm_monotone = true;
  double worst_norm_growth = 0.0; // max relative per-step increase
  bool aborted = false;
  std::string abort_reason;
  std::string tag; // "dlra" or "oracle"
};

/// Marches state to t_end, accumulating dose (left endpoint) and per-step
/// diagnostics. Aborts with a snapshot reason on non-finite values.
RunReport run(const Scene& scene, MultilevelState state,
              const SolverConfig& cfg);

} // namespace radlr
