#pragma once

#include <string>

#include "radlr/physics.hpp"

namespace radlr {

/// Flat key=value run configuration shared by the linesource and ct-plan
/// subcommands. Section headers in the file map to key prefixes
/// ("[solver]" + "levels" -> solver.levels).
struct RunConfig {
  // grid
  int cells = 100; // linesource: square cell count per side
  double x0 = 7.25; // ct-plan: left edge (defaults to the beam spot)
  double y0 = 0.0;
  double domain_width = 14.5;
  double domain_height = 29.0;
  // angular
  int pn_degree = 7;
  int quad_order = 0; // 0 -> pn_degree + 1
  double cone_half_angle_deg = 84.25;
  // physics
  double e_max = 1.0;
  double e_cut_rel = 0.0; // E_cut = e_cut_rel * e_max
  double s0 = 1.0, s1 = 0.0;
  std::string stopping_table; // optional 2-column CSV (E, S)
  double hg_c = 1.0, hg_g = 0.0;
  // beam (ct-plan)
  BeamModel beam;
  // solver
  int levels = 1;
  std::string mode = "adaptive"; // adaptive | fixed_rank
  double theta = 0.3;
  std::string theta_mode = "relative"; // relative | absolute
  int r_init = 2, r_min = 2, r_max = 50;
  double cfl_safety = 0.9;
  // inputs / outputs
  std::string image; // ct-plan density image (.pgm or .csv)
  std::string out_dir = "out";
  bool with_oracle = false;
  bool write_vtk_files = false;
  bool snapshot_factors = false;
  unsigned long long seed = 0;

  bool operator==(const RunConfig&) const = default;
};

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

/// Range/consistency checks; subcommand names which keys are required.
void validate_config(const RunConfig& cfg, const std::string& subcommand);

} // namespace radlr
