#include "radlr/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "radlr/io.hpp"

namespace radlr {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Schema {
  std::map<std::string, std::function<void(RunConfig&, const std::string&)>>
      setters;
  std::map<std::string, std::function<std::string(const RunConfig&)>> getters;

  void num(const std::string& key, double RunConfig::* field) {
    setters[key] = [field](RunConfig& c, const std::string& v) {
      c.*field = std::stod(v);
    };
    getters[key] = [field](const RunConfig& c) {
      return format_double(c.*field);
    };
  }
  void integer(const std::string& key, int RunConfig::* field) {
    setters[key] = [field](RunConfig& c, const std::string& v) {
      c.*field = std::stoi(v);
    };
    getters[key] = [field](const RunConfig& c) {
      return std::to_string(c.*field);
    };
  }
  void text(const std::string& key, std::string RunConfig::* field) {
    setters[key] = [field](RunConfig& c, const std::string& v) {
      c.*field = v;
    };
    getters[key] = [field](const RunConfig& c) { return c.*field; };
  }
  void flag(const std::string& key, bool RunConfig::* field) {
    setters[key] = [key, field](RunConfig& c, const std::string& v) {
      if (v == "true" || v == "1") c.*field = true;
      else if (v == "false" || v == "0") c.*field = false;
      else throw std::invalid_argument("key " + key + ": expected a boolean");
    };
    getters[key] = [field](const RunConfig& c) {
      return (c.*field) ? "true" : "false";
    };
  }
  void beam_num(const std::string& key, double BeamModel::* field) {
    setters[key] = [field](RunConfig& c, const std::string& v) {
      c.beam.*field = std::stod(v);
    };
    getters[key] = [field](const RunConfig& c) {
      return format_double(c.beam.*field);
    };
  }
};

const Schema& schema() {
  static const Schema s = [] {
    Schema sc;
    sc.integer("grid.cells", &RunConfig::cells);
    sc.num("grid.x0", &RunConfig::x0);
    sc.num("grid.y0", &RunConfig::y0);
    sc.num("grid.domain_width", &RunConfig::domain_width);
    sc.num("grid.domain_height", &RunConfig::domain_height);
    sc.integer("angular.pn_degree", &RunConfig::pn_degree);
    sc.integer("angular.quad_order", &RunConfig::quad_order);
    sc.num("angular.cone_half_angle_deg", &RunConfig::cone_half_angle_deg);
    sc.num("physics.e_max", &RunConfig::e_max);
    sc.num("physics.e_cut_rel", &RunConfig::e_cut_rel);
    sc.num("physics.s0", &RunConfig::s0);
    sc.num("physics.s1", &RunConfig::s1);
    sc.text("physics.stopping_table", &RunConfig::stopping_table);
    sc.num("physics.hg_c", &RunConfig::hg_c);
    sc.num("physics.hg_g", &RunConfig::hg_g);
    sc.beam_num("beam.amplitude", &BeamModel::amplitude);
    sc.beam_num("beam.x_mean", &BeamModel::x_mean);
    sc.beam_num("beam.y_mean", &BeamModel::y_mean);
    sc.beam_num("beam.omega1_mean", &BeamModel::omega1_mean);
    sc.beam_num("beam.inv_var_x", &BeamModel::inv_var_x);
    sc.beam_num("beam.inv_var_y", &BeamModel::inv_var_y);
    sc.beam_num("beam.inv_var_omega1", &BeamModel::inv_var_omega1);
    sc.beam_num("beam.inv_var_e", &BeamModel::inv_var_e);
    sc.integer("solver.levels", &RunConfig::levels);
    sc.text("solver.mode", &RunConfig::mode);
    sc.num("solver.theta", &RunConfig::theta);
    sc.text("solver.theta_mode", &RunConfig::theta_mode);
    sc.integer("solver.r_init", &RunConfig::r_init);
    sc.integer("solver.r_min", &RunConfig::r_min);
    sc.integer("solver.r_max", &RunConfig::r_max);
    sc.num("solver.cfl_safety", &RunConfig::cfl_safety);
    sc.text("input.image", &RunConfig::image);
    sc.text("output.dir", &RunConfig::out_dir);
    sc.flag("output.with_oracle", &RunConfig::with_oracle);
    sc.flag("output.write_vtk", &RunConfig::write_vtk_files);
    sc.flag("output.snapshot_factors", &RunConfig::snapshot_factors);
    sc.setters["run.seed"] = [](RunConfig& c, const std::string& v) {
      c.seed = std::stoull(v);
    };
    sc.getters["run.seed"] = [](const RunConfig& c) {
      return std::to_string(c.seed);
    };
    return sc;
  }();
  return s;
}

} // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path);
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key =
        (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = schema().setters.find(key);
    if (it == schema().setters.end())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
    try {
      it->second(cfg, val);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return cfg;
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::filesystem::create_directories(
      std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config " + path);
  std::string section;
  for (const auto& [key, get] : schema().getters) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << get(cfg) << '\n';
  }
}

void validate_config(const RunConfig& cfg, const std::string& subcommand) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
  };
  if (cfg.cells < 3) fail("grid.cells must be >= 3");
  if (cfg.pn_degree < 1) fail("angular.pn_degree must be >= 1");
  if (cfg.quad_order < 0) fail("angular.quad_order must be >= 0");
  if (!(cfg.e_max > 0)) fail("physics.e_max must be positive");
  if (cfg.e_cut_rel < 0 || cfg.e_cut_rel >= 1)
    fail("physics.e_cut_rel must lie in [0,1)");
  if (std::abs(cfg.hg_g) >= 1) fail("physics.hg_g must lie in (-1,1)");
  if (cfg.hg_c <= 0) fail("physics.hg_c must be positive");
  if (cfg.levels < 0) fail("solver.levels must be >= 0");
  if (cfg.mode != "adaptive" && cfg.mode != "fixed_rank")
    fail("solver.mode must be adaptive or fixed_rank");
  if (cfg.theta < 0) fail("solver.theta must be >= 0");
  if (cfg.theta_mode != "relative" && cfg.theta_mode != "absolute")
    fail("solver.theta_mode must be relative or absolute");
  if (cfg.r_init < 1 || cfg.r_min < 1 || cfg.r_max < cfg.r_min)
    fail("solver rank bounds must satisfy 1 <= r_min <= r_max");
  if (!(cfg.cfl_safety > 0) || cfg.cfl_safety > 1)
    fail("solver.cfl_safety must lie in (0,1]");
  if (!cfg.stopping_table.empty() &&
      !std::filesystem::exists(cfg.stopping_table))
    fail("physics.stopping_table file not found: " + cfg.stopping_table);
  if (subcommand == "ct-plan") {
    if (cfg.image.empty()) fail("missing required key: input.image");
    if (!std::filesystem::exists(cfg.image))
      fail("input.image file not found: " + cfg.image);
  }
}

} // namespace radlr
