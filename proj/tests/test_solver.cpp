#include <doctest.h>

#include <cmath>
#include <random>

#include "radlr/oracle.hpp"
#include "radlr/solver.hpp"

using namespace radlr;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

LowRankFactors random_factors(int n, int m, int r, std::mt19937_64& rng) {
  LowRankFactors f;
  f.X = orthonormalize(random_matrix(n, r, rng)).Q;
  f.W = orthonormalize(random_matrix(m, r, rng)).Q;
  f.S = random_matrix(r, r, rng);
  return f;
}

TruncationPolicy exact_policy(int r_max) {
  TruncationPolicy pol;
  pol.mode = TruncationPolicy::Mode::absolute;
  pol.theta = 0.0;
  pol.r_min = 1;
  pol.r_max = r_max;
  return pol;
}

} // namespace

TEST_CASE("cfl_dt follows the streaming formula and the density floor") {
  LinesourceSetup s = linesource_setup(16, 3, 4, 1, 2);
  const Scene& sc = s.scene;
  const double om = std::max(sc.quad.omega_x_max, sc.quad.omega_y_max);
  const double lam = std::max(sc.basis.lambda_max, om);
  const double expected = 1.0 * 0.5 * 1.0 * sc.grid.dx / lam;
  CHECK(cfl_dt(sc, 0.0, 1.0) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(cfl_dt(sc, 0.0, 0.5) == doctest::Approx(0.5 * expected));

  // a flat density of 0.05 scales the step by 0.05
  Grid2D floored = build_grid(16, 16, sc.grid.dx, sc.grid.dy, 0.0, 0.0,
                              0.01 * Vector::Ones(256),
                              BoundaryMode::periodic, 0.05);
  CHECK(cfl_dt(floored, sc.basis, sc.xs, 0.0, 1.0, om) ==
        doctest::Approx(0.05 * expected).epsilon(1e-12));

  // admissible kernels never shrink the step through the scatter check
  CHECK(cfl_dt(sc, 0.5 * sc.xs.t_end(), 1.0) == doctest::Approx(expected));
  CHECK_THROWS(cfl_dt(sc, 0.0, 1.5));
}

TEST_CASE("uncollided step: constants, damping, and the norm factor") {
  LinesourceSetup s = linesource_setup(12, 3, 4, 1, 2);
  const int n = s.scene.grid.cell_count();
  const int nq = s.scene.quad.count();

  // uniform field with zero cross section: periodic streaming leaves it alone
  Matrix psi = Matrix::Constant(n, nq, 0.8);
  uncollided_step(psi, s.scene, 0.1, 0.0, 0.05);
  CHECK((psi - Matrix::Constant(n, nq, 0.8)).norm() <= 1e-13);

  // uniform field with sigma_t = 1, dt = 1: value halves
  uncollided_step(psi, s.scene, 0.1, 1.0, 1.0);
  CHECK((psi - Matrix::Constant(n, nq, 0.4)).norm() <= 1e-13);

  // general field: norm bounded by the pure-scattering factor
  std::mt19937_64 rng(5);
  psi = random_matrix(n, nq, rng);
  const double dt = cfl_dt(s.scene, 0.0, 1.0);
  const double before = psi.norm();
  uncollided_step(psi, s.scene, dt, 1.0, dt);
  CHECK(psi.norm() <= before / (1.0 + dt * 1.0) * (1.0 + 1e-12));
}

TEST_CASE("streaming update: zero step, stability, full-rank equivalence") {
  LinesourceSetup s = linesource_setup(16, 3, 4, 1, 2);
  const int n = s.scene.grid.cell_count();
  const int m = s.scene.basis.size;
  std::mt19937_64 rng(11);

  // zero step size leaves the represented matrix untouched
  LowRankFactors f = random_factors(n, m, 5, rng);
  const LowRankFactors g = streaming_update(f, s.scene, 0.0,
                                            IntegratorMode::fixed_rank,
                                            exact_policy(5));
  CHECK((g.dense() - f.dense()).norm() <= 1e-13 * f.dense().norm());

  // norm of S never grows at nu = 1/2
  const double dt = cfl_dt(s.scene.grid, s.scene.basis, s.scene.xs, 0.0, 1.0);
  LowRankFactors h = random_factors(n, m, 4, rng);
  for (int it = 0; it < 60; ++it) {
    const double before = h.norm();
    h = streaming_update(h, s.scene, dt, IntegratorMode::fixed_rank,
                         exact_policy(4));
    CHECK(h.norm() <= before * (1.0 + 1e-12));
  }

  // full directional rank, adaptive mode: one step equals the dense
  // explicit Euler streaming step
  LowRankFactors full = random_factors(n, m, m, rng);
  const Matrix u0 = full.dense();
  const Matrix euler = u0 + dt * streaming_flow_full(u0, s.scene);
  const LowRankFactors stepped = streaming_update(
      full, s.scene, dt, IntegratorMode::adaptive, exact_policy(m));
  CHECK((stepped.dense() - euler).norm() <= 1e-10 * euler.norm());
}

TEST_CASE("scatter_update_level: damping and source coupling") {
  LinesourceSetup s = linesource_setup(12, 3, 4, 2, 3);
  std::mt19937_64 rng(23);
  const int n = s.scene.grid.cell_count();
  const int m = s.scene.basis.size;
  const double dt = 0.07, sigma_t = 1.3;
  const Vector sigma = Vector::Zero(m);

  // zero source (psi = 0) and plain damping of level 1
  MultilevelState st = s.lowrank;
  st.levels[0] = random_factors(n, m, 3, rng);
  const Matrix before = st.levels[0].dense();
  scatter_update_level(1, st, s.scene, sigma_t, sigma, dt,
                       IntegratorMode::fixed_rank, exact_policy(3));
  CHECK((st.levels[0].dense() - before / (1.0 + dt * sigma_t)).norm() <=
        1e-11 * before.norm());

  // theorem-style bound with an active source
  const auto [st2_sigma_t, st2_sigma] =
      s.scene.xs.scatter_diagonal(0.1, s.scene.basis.degree);
  MultilevelState st2 = s.lowrank;
  st2.levels[0] = random_factors(n, m, 3, rng);
  st2.levels[1] = random_factors(n, m, 3, rng);
  const double src_norm = st2.levels[0].norm();
  const double before2 = st2.levels[1].norm();
  scatter_update_level(2, st2, s.scene, st2_sigma_t, st2_sigma, dt,
                       IntegratorMode::fixed_rank, exact_policy(3));
  const double bound = (before2 + dt * st2_sigma.maxCoeff() * src_norm) /
                       (1.0 + dt * st2_sigma_t);
  CHECK(st2.levels[1].norm() <= bound * (1.0 + 1e-10));
}

TEST_CASE("scatter_update_collided: conservation and damping") {
  LinesourceSetup s = linesource_setup(12, 3, 4, 0, 4);
  std::mt19937_64 rng(29);
  const int n = s.scene.grid.cell_count();
  const int m = s.scene.basis.size;
  const double dt = 0.05;

  // L = 0, psi = 0, isotropic kernel with sigma_00 = sigma_t: the
  // zeroth-moment column of the collided component is exactly preserved
  MultilevelState st = s.lowrank;
  st.psi_u.setZero();
  st.collided = random_factors(n, m, 4, rng);
  const Vector col0 = st.collided.dense_col(0);
  Vector sigma = Vector::Zero(m);
  sigma[0] = 1.0;
  scatter_update_collided(st, s.scene, 1.0, sigma, dt,
                          IntegratorMode::fixed_rank, exact_policy(4));
  CHECK((st.collided.dense_col(0) - col0).norm() <= 1e-12 * col0.norm());

  // sigma == 0: pure absorption damps everything by 1/(1+dt sigma_t)
  MultilevelState st2 = s.lowrank;
  st2.collided = random_factors(n, m, 4, rng);
  const Matrix before = st2.collided.dense();
  scatter_update_collided(st2, s.scene, 2.0, Vector::Zero(m), dt,
                          IntegratorMode::fixed_rank, exact_policy(4));
  CHECK((st2.collided.dense() - before / (1.0 + dt * 2.0)).norm() <=
        1e-11 * before.norm());
}

TEST_CASE("level cascade ordering: the source must be the updated neighbor") {
  LinesourceSetup s = linesource_setup(12, 3, 4, 2, 3);
  std::mt19937_64 rng(31);
  const int n = s.scene.grid.cell_count();
  const int m = s.scene.basis.size;
  const auto [sigma_t, sigma] =
      s.scene.xs.scatter_diagonal(0.1, s.scene.basis.degree);
  const double dt = 0.05;

  MultilevelState st = s.lowrank;
  st.levels[0] = random_factors(n, m, 3, rng);
  st.levels[1] = random_factors(n, m, 3, rng);

  // updated-source path
  MultilevelState updated = st;
  scatter_update_level(1, updated, s.scene, sigma_t, sigma, dt,
                       IntegratorMode::fixed_rank, exact_policy(3));
  scatter_update_level(2, updated, s.scene, sigma_t, sigma, dt,
                       IntegratorMode::fixed_rank, exact_policy(3));

  // stale-source path: level 2 first, then level 1
  MultilevelState stale = st;
  scatter_update_level(2, stale, s.scene, sigma_t, sigma, dt,
                       IntegratorMode::fixed_rank, exact_policy(3));
  scatter_update_level(1, stale, s.scene, sigma_t, sigma, dt,
                       IntegratorMode::fixed_rank, exact_policy(3));

  const double diff =
      (updated.levels[1].dense() - stale.levels[1].dense()).norm();
  CHECK(diff > 1e-8 * updated.levels[1].dense().norm());
}

TEST_CASE("uniform state with zero cross sections is a fixed point") {
  LinesourceSetup s = linesource_setup(12, 3, 4, 1, 2);
  CrossSectionModel xs = s.scene.xs;
  xs.kernel = HGKernel{0.0, 0.0, 0.0, 0.0}; // no scattering at all
  Scene scene = make_scene(s.scene.grid, build_pn_basis(3),
                           build_quadrature(4, s.scene.basis), xs);

  SolverConfig cfg;
  cfg.levels = 1;
  cfg.mode = IntegratorMode::fixed_rank;
  cfg.r_init = 2;
  MultilevelState st = make_state(scene, 1, 2);
  st.psi_u = Matrix::Constant(scene.grid.cell_count(), scene.quad.count(),
                              0.3);
  const double total0 = st.total_norm();
  const double dt = cfl_dt(scene, 0.0, 1.0);
  step(st, scene, cfg, dt);
  CHECK(st.total_norm() == doctest::Approx(total0).epsilon(1e-12));
}

TEST_CASE("full-rank chain reproduces the dense split solver per step") {
  // adaptive steps at full directional rank with a zero tolerance keep the
  // factored update exactly equal to the dense one
  for (int levels : {0, 1}) {
    for (unsigned seed : {101u, 202u, 303u}) {
      std::mt19937_64 rng(seed);
      LinesourceSetup s = linesource_setup(12, 2, 3, levels, 9);
      const int n = s.scene.grid.cell_count();
      const int m = s.scene.basis.size; // 9

      SolverConfig cfg;
      cfg.levels = levels;
      cfg.mode = IntegratorMode::adaptive;
      cfg.trunc = exact_policy(m);
      cfg.r_init = m;

      MultilevelState low = make_state(s.scene, levels, m);
      FullState full = make_full_state(s.scene, levels);
      low.psi_u = random_matrix(n, s.scene.quad.count(), rng).cwiseAbs();
      full.psi_u = low.psi_u;
      for (int l = 0; l < levels; ++l) {
        low.levels[l] = random_factors(n, m, m, rng);
        full.levels[l] = low.levels[l].dense();
      }
      low.collided = random_factors(n, m, m, rng);
      full.collided = low.collided.dense();

      const double dt = cfl_dt(s.scene, 0.0, 0.9);
      for (int it = 0; it < 25; ++it) {
        const auto [sigma_t, sigma] = s.scene.xs.scatter_diagonal(
            std::min(low.t + dt, s.scene.xs.t_end()), s.scene.basis.degree);
        step(low, s.scene, cfg, dt);
        full_step(full, s.scene, sigma_t, sigma, dt);

        CHECK((low.psi_u - full.psi_u).norm() <=
              1e-10 * std::max(1.0, full.psi_u.norm()));
        for (int l = 0; l < levels; ++l)
          CHECK((low.levels[l].dense() - full.levels[l]).norm() <=
                1e-10 * std::max(1e-6, full.levels[l].norm()));
        CHECK((low.collided.dense() - full.collided).norm() <=
              1e-10 * std::max(1e-6, full.collided.norm()));
      }
    }
  }
}

TEST_CASE("theorem-style total norm inequality on a short march") {
  for (auto mode : {IntegratorMode::fixed_rank, IntegratorMode::adaptive}) {
    LinesourceSetup s = linesource_setup(32, 3, 4, 2, 5);
    SolverConfig cfg;
    cfg.levels = 2;
    cfg.mode = mode;
    cfg.r_init = 5;
    if (mode == IntegratorMode::fixed_rank) {
      cfg.trunc = exact_policy(5);
      cfg.trunc.r_min = 5;
    } else {
      cfg.trunc.mode = TruncationPolicy::Mode::relative;
      cfg.trunc.theta = 0.3;
      cfg.trunc.r_min = 2;
      cfg.trunc.r_max = 16;
    }
    cfg.cfl_safety = 1.0;
    RunReport rep = run(s.scene, s.lowrank, cfg);
    CHECK(!rep.aborted);
    CHECK(rep.norm_monotone);
    CHECK(rep.worst_norm_growth <= 1e-10);
  }
}

TEST_CASE("run: line source march is monotone, ranks bounded, deterministic") {
  LinesourceSetup s = linesource_setup(24, 3, 4, 2, 2);
  SolverConfig cfg;
  cfg.levels = 2;
  cfg.mode = IntegratorMode::adaptive;
  cfg.trunc.mode = TruncationPolicy::Mode::relative;
  cfg.trunc.theta = 0.3;
  cfg.trunc.r_min = 2;
  cfg.trunc.r_max = 12;
  cfg.r_init = 2;
  cfg.cfl_safety = 0.9;

  RunReport rep = run(s.scene, s.lowrank, cfg);
  CHECK(!rep.aborted);
  CHECK(rep.steps > 5);
  CHECK(rep.norm_monotone);
  for (const auto& r : rep.ranks) CHECK(r.rank <= cfg.trunc.r_max);
  // moment components may oscillate microscopically below zero
  CHECK(rep.dose.minCoeff() >= -1e-12 * rep.dose.cwiseAbs().maxCoeff());
  CHECK(rep.flux.allFinite());

  RunReport rep2 = run(s.scene, s.lowrank, cfg);
  CHECK((rep.flux - rep2.flux).norm() == 0.0);
  CHECK((rep.dose - rep2.dose).norm() == 0.0);
}
