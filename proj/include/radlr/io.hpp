#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "radlr/dlra.hpp"
#include "radlr/grid.hpp"
#include "radlr/physics.hpp"
#include "radlr/solver.hpp"
#include "radlr/types.hpp"

namespace radlr {

/// Shortest round-trip decimal form of v (locale-independent).
std::string format_double(double v);

uint64_t fnv1a64(const std::string& bytes);
uint64_t fnv1a64_file(const std::string& path);

struct FieldMeta {
  int nx = 0, ny = 0;
  double dx = 0, dy = 0, x0 = 0, y0 = 0;
};

/// Cell field as CSV: ny rows (bottom-to-top) by nx comma-separated columns
/// (left-to-right), with a self-describing '#' header.
void write_field_csv(const std::string& path, const Vector& field,
                     const Grid2D& grid, const std::string& name);
std::pair<Vector, FieldMeta> read_field_csv(const std::string& path);

/// Plain matrix CSV (no grid metadata beyond dimensions).
void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::string& name);
Matrix read_matrix_csv(const std::string& path);

/// Plain (P2) PGM or CSV matrix, normalized to [0,1]; dispatch on extension.
GrayImage load_gray_image(const std::string& path);
GrayImage read_pgm(std::istream& in);
void write_pgm(const std::string& path, const GrayImage& img,
               int maxval = 255);

/// Legacy VTK structured-points file of a cell field.
void write_vtk(const std::string& path, const Vector& field,
               const Grid2D& grid, const std::string& name);

/// dose.csv, flux.csv, ranks.csv, norms.csv, plot.gp and manifest.json
/// (file list with FNV-1a checksums). Returns the manifest path.
std::string write_report(const RunReport& rep, const Grid2D& grid,
                         const std::string& dir);

/// Factor snapshot: <name>_X.csv, <name>_S.csv, <name>_W.csv plus
/// <name>_meta.json carrying rank, step and pseudo-time.
void write_factors(const LowRankFactors& f, const std::string& dir,
                   const std::string& name, int step, double t);
LowRankFactors read_factors(const std::string& dir, const std::string& name);

} // namespace radlr
