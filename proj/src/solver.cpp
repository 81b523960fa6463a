#include "radlr/solver.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace radlr {

Scene make_scene(Grid2D grid, PnBasis basis, Quadrature quad,
                 CrossSectionModel xs, std::optional<BeamModel> beam) {
  Scene s;
  s.grid = std::move(grid);
  s.stencils = build_stencils(s.grid);
  s.basis = std::move(basis);
  s.quad = std::move(quad);
  s.xs = std::move(xs);
  s.beam = beam;
  s.faces = boundary_faces(s.grid);
  return s;
}

double MultilevelState::total_norm() const {
  double n = psi_u.norm() + collided.norm();
  for (const auto& l : levels) n += l.norm();
  return n;
}

MultilevelState make_state(const Scene& scene, int levels, int r_init) {
  if (levels < 0) throw std::invalid_argument("make_state: levels < 0");
  const int n = scene.grid.cell_count();
  const int m = scene.basis.size;
  MultilevelState st;
  st.psi_u = Matrix::Zero(n, scene.quad.count());
  st.levels.reserve(levels);
  for (int l = 0; l < levels; ++l)
    st.levels.push_back(LowRankFactors::zero(n, m, r_init));
  st.collided = LowRankFactors::zero(n, m, r_init);
  return st;
}

double cfl_dt(const Grid2D& grid, const PnBasis& basis,
              const CrossSectionModel& xs, double t, double safety,
              double omega_max) {
  if (!(safety > 0.0) || safety > 1.0)
    throw std::invalid_argument("cfl_dt: safety must lie in (0,1]");
  const double lambda = std::max(basis.lambda_max, omega_max);
  double dt = safety * 0.5 * grid.rho_min() * std::min(grid.dx, grid.dy) /
              lambda;
  const auto [sig_t, sig] = xs.scatter_diagonal(t, basis.degree);
  const double worst = sig.maxCoeff();
  if (worst > sig_t) {
    // inadmissible kernel: keep the implicit denominators positive
    const double cap = 0.5 / (worst - sig_t);
    dt = std::min(dt, cap);
  }
  if (!(dt > 1e-14))
    throw std::runtime_error("cfl_dt: step size underflow");
  return dt;
}

double cfl_dt(const Scene& scene, double t, double safety) {
  const double om =
      std::max(scene.quad.omega_x_max, scene.quad.omega_y_max);
  return cfl_dt(scene.grid, scene.basis, scene.xs, t, safety, om);
}

namespace {

// four-term streaming flow and its Galerkin projections
struct StreamingFlow {
  const Scene& sc;

  Matrix full(const Matrix& u) const {
    Matrix f = sc.stencils.L2x * u * sc.basis.Ax.transpose();
    f.noalias() += sc.stencils.L1x * u * sc.basis.absAx.transpose();
    f.noalias() += sc.stencils.L2y * u * sc.basis.Ay.transpose();
    f.noalias() += sc.stencils.L1y * u * sc.basis.absAy.transpose();
    return f;
  }

  FlowSet flows() const {
    FlowSet fs;
    fs.k_flow = [this](const Matrix& k, const Matrix& w) {
      const Matrix ax = w.transpose() * sc.basis.Ax.transpose() * w;
      const Matrix aax = w.transpose() * sc.basis.absAx.transpose() * w;
      const Matrix ay = w.transpose() * sc.basis.Ay.transpose() * w;
      const Matrix aay = w.transpose() * sc.basis.absAy.transpose() * w;
      Matrix out = sc.stencils.L2x * k * ax;
      out.noalias() += sc.stencils.L1x * k * aax;
      out.noalias() += sc.stencils.L2y * k * ay;
      out.noalias() += sc.stencils.L1y * k * aay;
      return out;
    };
    fs.l_flow = [this](const Matrix& x, const Matrix& l) {
      const Matrix l2x = x.transpose() * (sc.stencils.L2x * x);
      const Matrix l1x = x.transpose() * (sc.stencils.L1x * x);
      const Matrix l2y = x.transpose() * (sc.stencils.L2y * x);
      const Matrix l1y = x.transpose() * (sc.stencils.L1y * x);
      Matrix out = l2x * l * sc.basis.Ax.transpose();
      out.noalias() += l1x * l * sc.basis.absAx.transpose();
      out.noalias() += l2y * l * sc.basis.Ay.transpose();
      out.noalias() += l1y * l * sc.basis.absAy.transpose();
      return out;
    };
    fs.s_flow = [this](const Matrix& x, const Matrix& s, const Matrix& w) {
      const Matrix l2x = x.transpose() * (sc.stencils.L2x * x);
      const Matrix l1x = x.transpose() * (sc.stencils.L1x * x);
      const Matrix l2y = x.transpose() * (sc.stencils.L2y * x);
      const Matrix l1y = x.transpose() * (sc.stencils.L1y * x);
      const Matrix ax = w.transpose() * sc.basis.Ax.transpose() * w;
      const Matrix aax = w.transpose() * sc.basis.absAx.transpose() * w;
      const Matrix ay = w.transpose() * sc.basis.Ay.transpose() * w;
      const Matrix aay = w.transpose() * sc.basis.absAy.transpose() * w;
      Matrix out = l2x * s * ax;
      out.noalias() += l1x * s * aax;
      out.noalias() += l2y * s * ay;
      out.noalias() += l1y * s * aay;
      return out;
    };
    return fs;
  }
};

// scattering source term src*Sigma in factored-friendly form
struct ScatterSource {
  // src * Sigma * W  (n_x x r)
  std::function<Matrix(const Matrix& w)> times_w;
  // X^T * src * Sigma  (r x m)
  std::function<Matrix(const Matrix& x)> left;

  static ScatterSource none(int n, int m) {
    return {[n](const Matrix& w) { return Matrix::Zero(n, w.cols()); },
            [m](const Matrix& x) { return Matrix::Zero(x.cols(), m); }};
  }

  // from the nodal uncollided flux: psi * T_M * Sigma
  static ScatterSource from_nodal(const Matrix& psi, const Matrix& tm,
                                  const Vector& sigma) {
    return {[&psi, &tm, &sigma](const Matrix& w) {
              return psi * (tm * (sigma.asDiagonal() * w));
            },
            [&psi, &tm, &sigma](const Matrix& x) {
              return Matrix(((x.transpose() * psi) * tm) *
                            sigma.asDiagonal());
            }};
  }

  // from a factored component: X_s S_s W_s^T * Sigma
  static ScatterSource from_factors(const LowRankFactors& f,
                                    const Vector& sigma) {
    return {[&f, &sigma](const Matrix& w) {
              return f.X *
                     (f.S * (f.W.transpose() * (sigma.asDiagonal() * w)));
            },
            [&f, &sigma](const Matrix& x) {
              return Matrix(((x.transpose() * f.X) * f.S) *
                            (f.W.transpose() * sigma.asDiagonal()));
            }};
  }
};

// implicit Euler scattering update of one factored component
LowRankFactors scatter_component(const LowRankFactors& f,
                                 const ScatterSource& src, double sigma_t,
                                 double dt, bool implicit_damping,
                                 IntegratorMode mode,
                                 const TruncationPolicy& policy) {
  const double damp = implicit_damping ? 1.0 / (1.0 + dt * sigma_t) : 1.0;
  const int n = f.rows();
  const int m = f.cols();

  Matrix k1 = (f.X * f.S + dt * src.times_w(f.W)) * damp;
  Matrix l1 = (f.S * f.W.transpose() + dt * src.left(f.X)) * damp;
  if (!k1.allFinite() || !l1.allFinite())
    throw std::runtime_error("scatter update: non-finite K/L step");

  if (mode == IntegratorMode::fixed_rank) {
    LowRankFactors out;
    out.X = orthonormalize(k1).Q;
    out.W = orthonormalize(l1.transpose()).Q;
    out.S = (out.X.transpose() * f.X) * f.S * (f.W.transpose() * out.W);
    out.S += dt * (src.left(out.X) * out.W);
    out.S *= damp;
    return out;
  }

  const Matrix xh = augment_basis(f.X, k1, n);
  const Matrix wh = augment_basis(f.W, l1.transpose(), m);
  Matrix sh = Matrix::Zero(xh.cols(), wh.cols());
  sh.topLeftCorner(f.rank(), f.rank()) = f.S;
  sh += dt * (src.left(xh) * wh);
  sh *= damp;
  return truncate(sh, xh, wh, policy);
}

} // namespace

void uncollided_step(Matrix& psi, const Scene& scene, double t1,
                     double sigma_t, double dt) {
  const auto& st = scene.stencils;
  const auto& q = scene.quad;
  const int nq = q.count();

  Vector ox = q.points.col(0), oy = q.points.col(1);
  Matrix f = st.L2x * psi * ox.asDiagonal();
  f.noalias() += st.L1x * psi * ox.cwiseAbs().asDiagonal();
  f.noalias() += st.L2y * psi * oy.asDiagonal();
  f.noalias() += st.L1y * psi * oy.cwiseAbs().asDiagonal();
  psi += dt * f;

  if (scene.beam && !scene.faces.empty()) {
    const double energy = scene.xs.energy_of(std::min(t1, scene.xs.t_end()));
    const double s_val = scene.xs.stopping(energy);
    for (const auto& face : scene.faces) {
      const double h = face.axis == 0 ? scene.grid.dx : scene.grid.dy;
      for (int iq = 0; iq < nq; ++iq) {
        const double oc = face.axis == 0 ? ox[iq] : oy[iq];
        const double coef = (std::abs(oc) - face.normal * oc) / (2.0 * h);
        if (coef <= 0.0) continue;
        const double psi_in =
            eval_beam(*scene.beam, energy, face.gx, face.gy, ox[iq]);
        // transformed inflow S*rho_ghost*psi_in; the ghost density cancels
        // against the 1/rho_ghost carried by the stencil column
        psi(face.cell, iq) += dt * coef * s_val * psi_in;
      }
    }
  }

  if (!psi.allFinite())
    throw std::runtime_error("uncollided_step: non-finite flux");
  psi /= (1.0 + dt * sigma_t);
}

LowRankFactors streaming_update(const LowRankFactors& f, const Scene& scene,
                                double dt, IntegratorMode mode,
                                const TruncationPolicy& policy) {
  const double bound =
      0.5 * scene.grid.rho_min() * std::min(scene.grid.dx, scene.grid.dy) /
      scene.basis.lambda_max;
  if (dt > bound * (1.0 + 1e-12))
    std::cerr << "radlr: warning: streaming step " << dt
              << " exceeds the CFL bound " << bound << "\n";

  StreamingFlow flow{scene};
  if (mode == IntegratorMode::fixed_rank)
    return bug_step(f, flow.flows(), dt);
  return adaptive_bug_step(f, flow.flows(), dt, policy);
}

void scatter_update_level(int ell, MultilevelState& state, const Scene& scene,
                          double sigma_t, const Vector& sigma_diag, double dt,
                          IntegratorMode mode,
                          const TruncationPolicy& policy) {
  if (ell < 1 || ell > static_cast<int>(state.levels.size()))
    throw std::invalid_argument("scatter_update_level: bad level index");
  const ScatterSource src =
      ell == 1 ? ScatterSource::from_nodal(state.psi_u, scene.quad.moment_map,
                                           sigma_diag)
               : ScatterSource::from_factors(state.levels[ell - 2],
                                             sigma_diag);
  state.levels[ell - 1] = scatter_component(state.levels[ell - 1], src,
                                            sigma_t, dt, true, mode, policy);
}

void scatter_update_collided(MultilevelState& state, const Scene& scene,
                             double sigma_t, const Vector& sigma_diag,
                             double dt, IntegratorMode mode,
                             const TruncationPolicy& policy) {
  const ScatterSource src =
      state.levels.empty()
          ? ScatterSource::from_nodal(state.psi_u, scene.quad.moment_map,
                                      sigma_diag)
          : ScatterSource::from_factors(state.levels.back(), sigma_diag);
  LowRankFactors mid = scatter_component(state.collided, src, sigma_t, dt,
                                         false, mode, policy);
  state.collided = psi_l_step_scatter(mid, sigma_t, sigma_diag, dt);
}

Vector scalar_flux(const MultilevelState& state, const Scene& scene) {
  const double c = std::sqrt(4.0 * M_PI);
  Vector flux = state.psi_u * scene.quad.weights;
  flux += c * state.collided.dense_col(0);
  for (const auto& l : state.levels) flux += c * l.dense_col(0);
  return flux;
}

void step(MultilevelState& state, const Scene& scene, const SolverConfig& cfg,
          double dt) {
  const double t1 = state.t + dt;
  const auto [sigma_t, sigma_diag] =
      scene.xs.scatter_diagonal(std::min(t1, scene.xs.t_end()),
                                scene.basis.degree);

  uncollided_step(state.psi_u, scene, t1, sigma_t, dt);
  for (size_t l = 0; l < state.levels.size(); ++l) {
    state.levels[l] =
        streaming_update(state.levels[l], scene, dt, cfg.mode, cfg.trunc);
    scatter_update_level(static_cast<int>(l) + 1, state, scene, sigma_t,
                         sigma_diag, dt, cfg.mode, cfg.trunc);
  }
  state.collided =
      streaming_update(state.collided, scene, dt, cfg.mode, cfg.trunc);
  scatter_update_collided(state, scene, sigma_t, sigma_diag, dt, cfg.mode,
                          cfg.trunc);

  state.t = t1;
  ++state.step_index;
}

RunReport run(const Scene& scene, MultilevelState state,
              const SolverConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.tag = "dlra";
  rep.dose = Vector::Zero(scene.grid.cell_count());
  const double t_end = cfg.t_end.value_or(scene.xs.t_end());

  DoseGrid dose(scene.grid.cell_count());
  double prev_total = state.total_norm();

  auto record = [&](const MultilevelState& s) {
    for (size_t l = 0; l < s.levels.size(); ++l)
      rep.ranks.push_back({s.step_index, s.t,
                           "level" + std::to_string(l + 1),
                           s.levels[l].rank()});
    rep.ranks.push_back({s.step_index, s.t, "collided", s.collided.rank()});
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
      step(state, scene, cfg, dt);
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

} // namespace radlr
