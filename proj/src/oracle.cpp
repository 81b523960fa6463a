#include "radlr/oracle.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace radlr {

double FullState::total_norm() const {
  double n = psi_u.norm() + collided.norm();
  for (const auto& l : levels) n += l.norm();
  return n;
}

FullState make_full_state(const Scene& scene, int levels) {
  if (levels < 0) throw std::invalid_argument("make_full_state: levels < 0");
  const int n = scene.grid.cell_count();
  const int m = scene.basis.size;
  FullState st;
  st.psi_u = Matrix::Zero(n, scene.quad.count());
  st.levels.assign(levels, Matrix::Zero(n, m));
  st.collided = Matrix::Zero(n, m);
  return st;
}

Matrix streaming_flow_full(const Matrix& u, const Scene& scene) {
  Matrix f = scene.stencils.L2x * u * scene.basis.Ax.transpose();
  f.noalias() += scene.stencils.L1x * u * scene.basis.absAx.transpose();
  f.noalias() += scene.stencils.L2y * u * scene.basis.Ay.transpose();
  f.noalias() += scene.stencils.L1y * u * scene.basis.absAy.transpose();
  return f;
}

void full_step(FullState& state, const Scene& scene, double sigma_t,
               const Vector& sigma_diag, double dt) {
  const double t1 = state.t + dt;
  uncollided_step(state.psi_u, scene, t1, sigma_t, dt);

  const Matrix psi_moments = state.psi_u * scene.quad.moment_map;
  for (size_t l = 0; l < state.levels.size(); ++l) {
    Matrix u = state.levels[l] + dt * streaming_flow_full(state.levels[l],
                                                          scene);
    const Matrix& src = (l == 0) ? psi_moments : state.levels[l - 1];
    u += dt * src * sigma_diag.asDiagonal();
    state.levels[l] = u / (1.0 + dt * sigma_t);
  }

  Matrix uc = state.collided + dt * streaming_flow_full(state.collided, scene);
  const Matrix& src_c =
      state.levels.empty() ? psi_moments : state.levels.back();
  uc += dt * src_c * sigma_diag.asDiagonal();
  for (Eigen::Index k = 0; k < sigma_diag.size(); ++k) {
    const double denom = 1.0 + dt * sigma_t - dt * sigma_diag[k];
    if (!(denom > 0.0))
      throw std::runtime_error("full_step: non-positive scattering "
                               "denominator");
    uc.col(k) /= denom;
  }
  state.collided = uc;

  if (!state.collided.allFinite())
    throw std::runtime_error("full_step: non-finite collided flux");
  state.t = t1;
  ++state.step_index;
}

void plain_pn_step(Matrix& u, const Scene& scene, double sigma_t,
                   const Vector& sigma_diag, double dt) {
  u += dt * streaming_flow_full(u, scene);
  for (Eigen::Index k = 0; k < sigma_diag.size(); ++k) {
    const double denom = 1.0 + dt * sigma_t - dt * sigma_diag[k];
    if (!(denom > 0.0))
      throw std::runtime_error("plain_pn_step: non-positive scattering "
                               "denominator");
    u.col(k) /= denom;
  }
  if (!u.allFinite()) throw std::runtime_error("plain_pn_step: non-finite u");
}

Vector scalar_flux(const FullState& state, const Scene& scene) {
  const double c = std::sqrt(4.0 * M_PI);
  Vector flux = state.psi_u * scene.quad.weights;
  flux += c * state.collided.col(0);
  for (const auto& l : state.levels) flux += c * l.col(0);
  return flux;
}

RunReport run_oracle(const Scene& scene, FullState state,
                     const OracleConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.tag = "oracle";
  rep.dose = Vector::Zero(scene.grid.cell_count());
  const double t_end = cfg.t_end.value_or(scene.xs.t_end());

  DoseGrid dose(scene.grid.cell_count());
  double prev_total = state.total_norm();

  auto record = [&](const FullState& s) {
    NormRow row;
    row.step = s.step_index;
    row.t = s.t;
    row.psi = s.psi_u.norm();
    for (const auto& l : s.levels) row.levels.push_back(l.norm());
    row.collided = s.collided.norm();
    row.total = s.total_norm();
    rep.norms.push_back(row);
  };
  record(state);

  try {
    while (state.t < t_end - 1e-12) {
      double dt = cfl_dt(scene, state.t, cfg.cfl_safety);
      dt = std::min(dt, t_end - state.t);
      if (cfg.accumulate_dose)
        accumulate_dose(dose, scalar_flux(state, scene), scene.grid, dt);
      const auto [sigma_t, sigma_diag] = scene.xs.scatter_diagonal(
          std::min(state.t + dt, scene.xs.t_end()), scene.basis.degree);
      full_step(state, scene, sigma_t, sigma_diag, dt);
      rep.dts.push_back(dt);
      ++rep.steps;
      record(state);

      const double total = state.total_norm();
      const double growth =
          (total - prev_total) / std::max(prev_total, 1e-300);
      rep.worst_norm_growth = std::max(rep.worst_norm_growth, growth);
      if (growth > 1e-10) rep.norm_monotone = false;
      prev_total = total;
    }
    rep.flux = scalar_flux(state, scene);
  } catch (const std::exception& e) {
    rep.aborted = true;
    rep.abort_reason = e.what();
    rep.flux = Vector::Zero(scene.grid.cell_count());
  }
  rep.dose = dose.values;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    t_start)
          .count();
  return rep;
}

LinesourceSetup linesource_setup(int cells_per_side, int pn_degree,
                                 int quad_order, int levels, int r_init,
                                 double sigma) {
  const double width = 3.0;
  const double h = width / cells_per_side;
  Grid2D grid = build_grid(cells_per_side, cells_per_side, h, h, -1.5, -1.5,
                           Vector::Ones(static_cast<Eigen::Index>(
                               cells_per_side) * cells_per_side),
                           BoundaryMode::periodic);
  PnBasis basis = build_pn_basis(pn_degree);
  Quadrature quad = build_quadrature(quad_order, basis);

  CrossSectionModel xs;
  xs.stopping = StoppingPower::linear(1.0, 0.0);
  xs.kernel = HGKernel{1.0, 0.0, 0.0, 0.0}; // isotropic, sigma_s = 1
  xs.E_max = 1.0;
  xs.E_cut = 0.0; // unit stopping power, t_end = 1 exactly

  LinesourceSetup setup{
      make_scene(std::move(grid), std::move(basis), std::move(quad),
                 std::move(xs)),
      {}, {}};
  setup.lowrank = make_state(setup.scene, levels, r_init);
  setup.full = make_full_state(setup.scene, levels);

  const auto& g = setup.scene.grid;
  Vector pulse(g.cell_count());
  const double amp = 1.0 / (4.0 * M_PI * sigma * sigma);
  for (int i = 0; i < g.nx_cells; ++i)
    for (int j = 0; j < g.ny_cells; ++j) {
      const double x = g.cell_x(i), y = g.cell_y(j);
      pulse[g.flat(i, j)] =
          amp * std::exp(-(x * x + y * y) / (4.0 * sigma * sigma));
    }
  // isotropic initial condition sampled at the quadrature directions
  setup.lowrank.psi_u =
      pulse * Eigen::RowVectorXd::Ones(setup.scene.quad.count());
  setup.full.psi_u = setup.lowrank.psi_u;
  return setup;
}

LungSetup lung_setup(const GrayImage& image, const LungConfig& cfg) {
  Vector rho = ct_to_density(image, cfg.rho_bone, cfg.rho_min);
  const double dx = cfg.domain_width / image.width;
  const double dy = cfg.domain_height / image.height;
  Grid2D grid = build_grid(image.width, image.height, dx, dy, cfg.x0, cfg.y0,
                           rho, BoundaryMode::dirichlet_ghost, cfg.rho_min);
  PnBasis basis = build_pn_basis(cfg.pn_degree);
  Quadrature quad = build_directed_quadrature(
      cfg.quad_order, basis, Eigen::Vector3d(1.0, 0.0, 0.0),
      cfg.cone_half_angle_deg * M_PI / 180.0);

  CrossSectionModel xs;
  xs.stopping = StoppingPower::linear(cfg.s0, cfg.s1);
  xs.kernel = HGKernel{cfg.hg_c, 0.0, cfg.hg_g, 0.0};
  xs.E_max = cfg.e_max;
  xs.E_cut = 1e-3 * cfg.e_max;

  BeamModel beam = cfg.beam;
  beam.e_mean = cfg.e_max;

  LungSetup setup{make_scene(std::move(grid), std::move(basis),
                             std::move(quad), std::move(xs), beam),
                  {}, {}};
  setup.lowrank = make_state(setup.scene, cfg.levels, cfg.r_init);
  setup.full = make_full_state(setup.scene, cfg.levels);
  return setup;
}

} // namespace radlr
