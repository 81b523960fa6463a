#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <Eigen/SVD>

#include "radlr/config.hpp"
#include "radlr/io.hpp"
#include "radlr/oracle.hpp"
#include "radlr/solver.hpp"

namespace {

using namespace radlr;

SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig sc;
  sc.levels = cfg.levels;
  sc.mode = cfg.mode == "fixed_rank" ? IntegratorMode::fixed_rank
                                     : IntegratorMode::adaptive;
  sc.trunc.mode = cfg.theta_mode == "absolute"
                      ? TruncationPolicy::Mode::absolute
                      : TruncationPolicy::Mode::relative;
  sc.trunc.theta = cfg.theta;
  sc.trunc.r_min = cfg.r_min;
  sc.trunc.r_max = cfg.r_max;
  sc.r_init = cfg.r_init;
  sc.cfl_safety = cfg.cfl_safety;
  return sc;
}

void apply_stopping_table(CrossSectionModel& xs, const RunConfig& cfg) {
  if (cfg.stopping_table.empty()) return;
  const Matrix t = read_matrix_csv(cfg.stopping_table);
  if (t.cols() != 2)
    throw std::runtime_error("stopping table must have 2 columns (E, S)");
  std::vector<double> e(t.rows()), s(t.rows());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    e[i] = t(i, 0);
    s[i] = t(i, 1);
  }
  xs.stopping = StoppingPower::tabulated(std::move(e), std::move(s));
}

void emit_outputs(const RunReport& rep, const Scene& scene,
                  const RunConfig& cfg, const std::string& subdir) {
  const std::string dir = cfg.out_dir + "/" + subdir;
  write_report(rep, scene.grid, dir);
  if (cfg.write_vtk_files) {
    write_vtk(dir + "/dose.vtk", rep.dose, scene.grid, "dose");
    write_vtk(dir + "/flux.vtk", rep.flux, scene.grid, "flux");
  }
  std::cout << subdir << ": " << rep.steps << " steps, "
            << format_double(rep.wall_seconds) << " s, norm history "
            << (rep.norm_monotone ? "non-increasing" : "NOT monotone")
            << ", outputs in " << dir << "\n";
  if (rep.aborted)
    std::cout << subdir << ": run aborted: " << rep.abort_reason << "\n";
}

void snapshot_state(const MultilevelState& st, const RunConfig& cfg) {
  const std::string dir = cfg.out_dir + "/dlra";
  for (size_t l = 0; l < st.levels.size(); ++l)
    write_factors(st.levels[l], dir, "factors_level" + std::to_string(l + 1),
                  st.step_index, st.t);
  write_factors(st.collided, dir, "factors_collided", st.step_index, st.t);
}

int cmd_linesource(const RunConfig& cfg) {
  validate_config(cfg, "linesource");
  const int order = cfg.quad_order > 0 ? cfg.quad_order : cfg.pn_degree + 1;
  LinesourceSetup setup = linesource_setup(cfg.cells, cfg.pn_degree, order,
                                           cfg.levels, cfg.r_init);
  const SolverConfig sc = solver_config(cfg);

  RunReport rep = run(setup.scene, setup.lowrank, sc);
  emit_outputs(rep, setup.scene, cfg, "dlra");
  if (cfg.snapshot_factors) {
    // march a copy to t_end to snapshot the final factors
    MultilevelState st = setup.lowrank;
    while (st.t < setup.scene.xs.t_end() - 1e-12) {
      double dt = cfl_dt(setup.scene, st.t, sc.cfl_safety);
      dt = std::min(dt, setup.scene.xs.t_end() - st.t);
      step(st, setup.scene, sc, dt);
    }
    snapshot_state(st, cfg);
  }
  if (cfg.with_oracle) {
    OracleConfig oc{cfg.levels, cfg.cfl_safety, {}, true};
    RunReport orep = run_oracle(setup.scene, setup.full, oc);
    emit_outputs(orep, setup.scene, cfg, "oracle");
  }
  return rep.aborted ? 2 : 0;
}

int cmd_ct_plan(const RunConfig& cfg) {
  validate_config(cfg, "ct-plan");
  const GrayImage img = load_gray_image(cfg.image);
  LungConfig lc;
  lc.domain_width = cfg.domain_width;
  lc.domain_height = cfg.domain_height;
  lc.pn_degree = cfg.pn_degree;
  lc.quad_order = cfg.quad_order > 0 ? cfg.quad_order : cfg.pn_degree + 1;
  lc.cone_half_angle_deg = cfg.cone_half_angle_deg;
  lc.levels = cfg.levels;
  lc.r_init = cfg.r_init;
  lc.beam = cfg.beam;
  lc.e_max = cfg.e_max;
  lc.s0 = cfg.s0;
  lc.s1 = cfg.s1;
  lc.hg_c = cfg.hg_c;
  lc.hg_g = cfg.hg_g;
  LungSetup setup = lung_setup(img, lc);
  CrossSectionModel& xs = const_cast<CrossSectionModel&>(setup.scene.xs);
  apply_stopping_table(xs, cfg);

  const SolverConfig sc = solver_config(cfg);
  RunReport rep = run(setup.scene, setup.lowrank, sc);
  emit_outputs(rep, setup.scene, cfg, "dlra");
  if (cfg.snapshot_factors) {
    MultilevelState st = setup.lowrank;
    while (st.t < setup.scene.xs.t_end() - 1e-12) {
      double dt = cfl_dt(setup.scene, st.t, sc.cfl_safety);
      dt = std::min(dt, setup.scene.xs.t_end() - st.t);
      step(st, setup.scene, sc, dt);
    }
    snapshot_state(st, cfg);
  }
  if (cfg.with_oracle) {
    OracleConfig oc{cfg.levels, cfg.cfl_safety, {}, true};
    RunReport orep = run_oracle(setup.scene, setup.full, oc);
    emit_outputs(orep, setup.scene, cfg, "oracle");
  }
  return rep.aborted ? 2 : 0;
}

int cmd_stability_check(double nu, int theta_samples, int streaming_steps) {
  // amplification modulus of the half symbol 1/2 + nu(cos th - 1) - i nu sin th,
  // doubled for the two spatial directions
  double worst = 0.0;
  for (int i = 0; i <= theta_samples; ++i) {
    const double th = M_PI * i / theta_samples;
    const double re = 0.5 + nu * (std::cos(th) - 1.0);
    const double im = nu * std::sin(th);
    worst = std::max(worst, std::hypot(re, im));
  }
  const double amp = 2.0 * worst;
  std::cout << "nu = " << format_double(nu)
            << ", max amplification modulus = " << format_double(amp) << " ("
            << (amp <= 1.0 + 1e-12 ? "stable" : "unstable") << ")\n";

  if (streaming_steps > 0) {
    LinesourceSetup setup = linesource_setup(32, 3, 4, 1, 4);
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> dist;
    auto& f = setup.lowrank.collided;
    for (Eigen::Index i = 0; i < f.S.size(); ++i)
      f.S.data()[i] = dist(rng);
    const double bound = 0.5 * std::min(setup.scene.grid.dx,
                                        setup.scene.grid.dy) /
                         setup.scene.basis.lambda_max;
    const double dt = 2.0 * nu * bound; // nu = 1/2 maps to the CFL bound
    TruncationPolicy pol;
    std::cout << "step,norm\n0," << format_double(f.norm()) << "\n";
    for (int s = 1; s <= streaming_steps; ++s) {
      f = streaming_update(f, setup.scene, dt, IntegratorMode::fixed_rank,
                           pol);
      std::cout << s << ',' << format_double(f.norm()) << "\n";
    }
  }
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const auto [fa, ma] = read_field_csv(a);
  const auto [fb, mb] = read_field_csv(b);
  if (fa.size() != fb.size())
    throw std::runtime_error("compare: field sizes differ");
  const double l2 = (fa - fb).norm();
  const double rel = l2 / std::max(fb.norm(), 1e-300);
  const double linf = (fa - fb).cwiseAbs().maxCoeff();
  std::cout << "fields: " << a << " vs " << b << " (" << ma.nx << "x" << ma.ny
            << ")\n";
  std::cout << "l2_abs = " << format_double(l2) << "\n";
  std::cout << "l2_rel = " << format_double(rel) << "\n";
  std::cout << "linf   = " << format_double(linf) << "\n";
  return 0;
}

int cmd_export_modes(const std::string& dir, const std::string& name,
                     int count, const std::string& out_dir) {
  const LowRankFactors f = read_factors(dir, name);
  Eigen::JacobiSVD<Matrix> svd(f.S,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int k = std::min<int>(count, static_cast<int>(
                                         svd.singularValues().size()));
  const Matrix spatial = f.X * svd.matrixU().leftCols(k);
  const Matrix directional = f.W * svd.matrixV().leftCols(k);
  write_matrix_csv(out_dir + "/spatial_modes.csv", spatial,
                   name + " dominant spatial modes");
  write_matrix_csv(out_dir + "/directional_modes.csv", directional,
                   name + " dominant directional modes");
  Vector sv = svd.singularValues().head(k);
  write_matrix_csv(out_dir + "/mode_weights.csv", sv,
                   name + " singular values");
  std::cout << "wrote " << k << " modes to " << out_dir << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D multilevel low-rank radiation transport solver"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--cells", cfg.cells, "cells per side");
    sub->add_option("--degree", cfg.pn_degree, "spherical harmonics degree");
    sub->add_option("--quad-order", cfg.quad_order, "quadrature order");
    sub->add_option("--levels", cfg.levels, "collision levels L");
    sub->add_option("--mode", cfg.mode, "adaptive | fixed_rank");
    sub->add_option("--theta-rel", cfg.theta, "relative truncation tolerance")
        ->each([&cfg](const std::string&) { cfg.theta_mode = "relative"; });
    sub->add_option("--theta-abs", cfg.theta, "absolute truncation tolerance")
        ->each([&cfg](const std::string&) { cfg.theta_mode = "absolute"; });
    sub->add_option("--r-init", cfg.r_init, "initial rank");
    sub->add_option("--r-max", cfg.r_max, "rank cap");
    sub->add_option("--safety", cfg.cfl_safety, "CFL safety factor");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_flag("--with-oracle", cfg.with_oracle,
                  "also run the full-matrix reference solver");
    sub->add_flag("--vtk", cfg.write_vtk_files, "emit legacy VTK files");
    sub->add_flag("--snapshot-factors", cfg.snapshot_factors,
                  "dump final low-rank factors as CSV");
  };

  auto* ls = app.add_subcommand("linesource", "line source benchmark");
  add_common(ls);

  auto* ct = app.add_subcommand("ct-plan", "beam dose run over a density image");
  add_common(ct);
  ct->add_option("--image", cfg.image, "density image (.pgm or .csv)");
  ct->add_option("--e-max", cfg.e_max, "beam energy (MeV)");

  double nu = 0.5;
  int theta_samples = 4096, streaming_steps = 0;
  auto* st = app.add_subcommand("stability-check",
                                "amplification factors and norm histories");
  st->add_option("--nu", nu, "CFL number");
  st->add_option("--theta-samples", theta_samples, "symbol sample count");
  st->add_option("--streaming-steps", streaming_steps,
                 "also run this many streaming steps");

  std::string field_a, field_b;
  auto* cp = app.add_subcommand("compare", "L2 error table for two fields");
  cp->add_option("a", field_a, "first field CSV")->required();
  cp->add_option("b", field_b, "second field CSV")->required();

  std::string factors_dir = ".", factors_name = "factors_collided",
              modes_out = "modes";
  int mode_count = 4;
  auto* em = app.add_subcommand("export-modes",
                                "dominant spatial/directional modes");
  em->add_option("--dir", factors_dir, "directory with factor snapshots");
  em->add_option("--name", factors_name, "snapshot name prefix");
  em->add_option("--count", mode_count, "number of modes");
  em->add_option("--out", modes_out, "output directory");

  // config file loads first, flags override
  app.callback([&] {
    if (!config_path.empty()) {
      RunConfig file_cfg = load_config(config_path);
      // re-apply flag values on top of the file values
      RunConfig flags = cfg;
      cfg = file_cfg;
      for (auto* sub : app.get_subcommands()) {
        for (const auto* opt : sub->get_options()) {
          if (opt->count() == 0) continue;
          const std::string n = opt->get_name();
          if (n == "--cells") cfg.cells = flags.cells;
          else if (n == "--degree") cfg.pn_degree = flags.pn_degree;
          else if (n == "--quad-order") cfg.quad_order = flags.quad_order;
          else if (n == "--levels") cfg.levels = flags.levels;
          else if (n == "--mode") cfg.mode = flags.mode;
          else if (n == "--theta-rel" || n == "--theta-abs") {
            cfg.theta = flags.theta;
            cfg.theta_mode = flags.theta_mode;
          } else if (n == "--r-init") cfg.r_init = flags.r_init;
          else if (n == "--r-max") cfg.r_max = flags.r_max;
          else if (n == "--safety") cfg.cfl_safety = flags.cfl_safety;
          else if (n == "--out") cfg.out_dir = flags.out_dir;
          else if (n == "--with-oracle") cfg.with_oracle = flags.with_oracle;
          else if (n == "--vtk") cfg.write_vtk_files = flags.write_vtk_files;
          else if (n == "--snapshot-factors")
            cfg.snapshot_factors = flags.snapshot_factors;
          else if (n == "--image") cfg.image = flags.image;
          else if (n == "--e-max") cfg.e_max = flags.e_max;
        }
      }
    }
  });

  CLI11_PARSE(app, argc, argv);

  try {
    if (ls->parsed()) return cmd_linesource(cfg);
    if (ct->parsed()) return cmd_ct_plan(cfg);
    if (st->parsed())
      return cmd_stability_check(nu, theta_samples, streaming_steps);
    if (cp->parsed()) return cmd_compare(field_a, field_b);
    if (em->parsed())
      return cmd_export_modes(factors_dir, factors_name, mode_count,
                              modes_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "radlr: config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "radlr: runtime failure: " << e.what() << "\n";
    try {
      std::filesystem::create_directories(cfg.out_dir);
      std::ofstream snap(cfg.out_dir + "/failure_snapshot.txt");
      snap << e.what() << "\n";
      std::cerr << "radlr: snapshot written to " << cfg.out_dir
                << "/failure_snapshot.txt\n";
    } catch (...) {
    }
    return 2;
  }
  return 0;
}
