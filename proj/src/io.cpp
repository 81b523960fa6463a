#include "radlr/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace radlr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

namespace {

std::ofstream open_out(const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::string hex64(uint64_t v) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[v & 0xf];
    v >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

} // namespace

void write_field_csv(const std::string& path, const Vector& field,
                     const Grid2D& grid, const std::string& name) {
  if (field.size() != grid.cell_count())
    throw std::invalid_argument("write_field_csv: field size mismatch");
  auto out = open_out(path);
  out << "# radlr field: " << name << "\n";
  out << "# nx=" << grid.nx_cells << " ny=" << grid.ny_cells
      << " dx=" << format_double(grid.dx) << " dy=" << format_double(grid.dy)
      << " x0=" << format_double(grid.x0) << " y0=" << format_double(grid.y0)
      << "\n";
  out << "# rows: y cells bottom-to-top; columns: x cells left-to-right\n";
  for (int j = 0; j < grid.ny_cells; ++j) {
    for (int i = 0; i < grid.nx_cells; ++i) {
      if (i) out << ',';
      out << format_double(field[grid.flat(i, j)]);
    }
    out << '\n';
  }
}

std::pair<Vector, FieldMeta> read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  FieldMeta meta;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "nx") meta.nx = std::stoi(val);
        else if (key == "ny") meta.ny = std::stoi(val);
        else if (key == "dx") meta.dx = std::stod(val);
        else if (key == "dy") meta.dy = std::stod(val);
        else if (key == "x0") meta.x0 = std::stod(val);
        else if (key == "y0") meta.y0 = std::stod(val);
      }
      continue;
    }
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty field file " + path);
  const int ny = static_cast<int>(rows.size());
  const int nx = static_cast<int>(rows[0].size());
  if (meta.nx == 0) meta.nx = nx;
  if (meta.ny == 0) meta.ny = ny;
  if (meta.nx != nx || meta.ny != ny)
    throw std::runtime_error("field dimensions disagree with header in " +
                             path);
  Vector field(static_cast<Eigen::Index>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    if (static_cast<int>(rows[j].size()) != nx)
      throw std::runtime_error("ragged rows in " + path);
    for (int i = 0; i < nx; ++i) field[i * ny + j] = rows[j][i];
  }
  return {field, meta};
}

void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::string& name) {
  auto out = open_out(path);
  out << "# radlr matrix: " << name << " rows=" << m.rows()
      << " cols=" << m.cols() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty matrix file " + path);
  Matrix m(rows.size(), rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw std::runtime_error("ragged rows in " + path);
    for (size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

GrayImage read_pgm(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic != "P2")
    throw std::runtime_error("read_pgm: only plain (P2) PGM is supported");
  auto next_int = [&in]() {
    // skip whitespace and '#' comment lines
    while (true) {
      const int c = in.peek();
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v;
    if (!(in >> v)) throw std::runtime_error("read_pgm: truncated file");
    return v;
  };
  GrayImage img;
  img.width = static_cast<int>(next_int());
  img.height = static_cast<int>(next_int());
  const long maxval = next_int();
  if (img.width <= 0 || img.height <= 0 || maxval <= 0)
    throw std::runtime_error("read_pgm: bad header");
  img.pixels.resize(static_cast<size_t>(img.width) * img.height);
  for (auto& p : img.pixels)
    p = static_cast<double>(next_int()) / static_cast<double>(maxval);
  return img;
}

GrayImage load_gray_image(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  if (ext == ".pgm") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return read_pgm(in);
  }
  if (ext == ".csv") {
    const Matrix m = read_matrix_csv(path);
    GrayImage img;
    img.height = static_cast<int>(m.rows());
    img.width = static_cast<int>(m.cols());
    img.pixels.resize(static_cast<size_t>(img.width) * img.height);
    for (int r = 0; r < img.height; ++r)
      for (int c = 0; c < img.width; ++c) img.pixels[r * img.width + c] =
          m(r, c);
    return img;
  }
  throw std::runtime_error("load_gray_image: unsupported extension " + ext);
}

void write_pgm(const std::string& path, const GrayImage& img, int maxval) {
  auto out = open_out(path);
  out << "P2\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const long v = std::lround(img.at(r, c) * maxval);
      out << v << (c + 1 == img.width ? '\n' : ' ');
    }
  }
}

void write_vtk(const std::string& path, const Vector& field,
               const Grid2D& grid, const std::string& name) {
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\nradlr " << name
      << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << grid.nx_cells << ' ' << grid.ny_cells << " 1\n";
  out << "ORIGIN " << format_double(grid.x0 + 0.5 * grid.dx) << ' '
      << format_double(grid.y0 + 0.5 * grid.dy) << " 0\n";
  out << "SPACING " << format_double(grid.dx) << ' ' << format_double(grid.dy)
      << " 1\n";
  out << "POINT_DATA " << grid.cell_count() << "\nSCALARS " << name
      << " double 1\nLOOKUP_TABLE default\n";
  for (int j = 0; j < grid.ny_cells; ++j)
    for (int i = 0; i < grid.nx_cells; ++i)
      out << format_double(field[grid.flat(i, j)]) << '\n';
}

std::string write_report(const RunReport& rep, const Grid2D& grid,
                         const std::string& dir) {
  fs::create_directories(dir);
  std::vector<std::string> files;

  write_field_csv(dir + "/dose.csv", rep.dose, grid, rep.tag + " dose");
  files.push_back("dose.csv");
  write_field_csv(dir + "/flux.csv", rep.flux, grid,
                  rep.tag + " scalar flux");
  files.push_back("flux.csv");

  {
    auto out = open_out(dir + "/ranks.csv");
    out << "# step,t,component,rank\n";
    for (const auto& r : rep.ranks)
      out << r.step << ',' << format_double(r.t) << ',' << r.component << ','
          << r.rank << '\n';
    files.push_back("ranks.csv");
  }
  {
    auto out = open_out(dir + "/norms.csv");
    out << "# step,t,psi";
    const size_t nlevels = rep.norms.empty() ? 0 : rep.norms[0].levels.size();
    for (size_t l = 0; l < nlevels; ++l) out << ",level" << (l + 1);
    out << ",collided,total\n";
    for (const auto& n : rep.norms) {
      out << n.step << ',' << format_double(n.t) << ','
          << format_double(n.psi);
      for (double lv : n.levels) out << ',' << format_double(lv);
      out << ',' << format_double(n.collided) << ','
          << format_double(n.total) << '\n';
    }
    files.push_back("norms.csv");
  }
  {
    auto out = open_out(dir + "/plot.gp");
    out << "set datafile separator comma\n"
           "set view map\n"
           "set size ratio -1\n"
           "set palette rgbformulae 22,13,-31\n"
           "set title 'scalar flux'\n"
           "splot 'flux.csv' matrix with image notitle\n"
           "pause -1\n"
           "set title 'dose'\n"
           "splot 'dose.csv' matrix with image notitle\n"
           "pause -1\n";
    files.push_back("plot.gp");
  }

  json manifest;
  manifest["tag"] = rep.tag;
  manifest["steps"] = rep.steps;
  manifest["wall_seconds"] = rep.wall_seconds;
  manifest["norm_monotone"] = rep.norm_monotone;
  manifest["aborted"] = rep.aborted;
  if (rep.aborted) manifest["abort_reason"] = rep.abort_reason;
  json arts = json::array();
  for (const auto& f : files)
    arts.push_back({{"file", f},
                    {"bytes", fs::file_size(dir + "/" + f)},
                    {"fnv1a64", hex64(fnv1a64_file(dir + "/" + f))}});
  manifest["artifacts"] = arts;
  const std::string mpath = dir + "/manifest.json";
  auto out = open_out(mpath);
  out << manifest.dump(2) << '\n';
  return mpath;
}

void write_factors(const LowRankFactors& f, const std::string& dir,
                   const std::string& name, int step, double t) {
  fs::create_directories(dir);
  write_matrix_csv(dir + "/" + name + "_X.csv", f.X, name + " spatial basis");
  write_matrix_csv(dir + "/" + name + "_S.csv", f.S, name + " coefficients");
  write_matrix_csv(dir + "/" + name + "_W.csv", f.W,
                   name + " directional basis");
  json meta;
  meta["rank"] = f.rank();
  meta["step"] = step;
  meta["t"] = t;
  auto out = open_out(dir + "/" + name + "_meta.json");
  out << meta.dump(2) << '\n';
}

LowRankFactors read_factors(const std::string& dir, const std::string& name) {
  LowRankFactors f;
  f.X = read_matrix_csv(dir + "/" + name + "_X.csv");
  f.S = read_matrix_csv(dir + "/" + name + "_S.csv");
  f.W = read_matrix_csv(dir + "/" + name + "_W.csv");
  return f;
}

} // namespace radlr
