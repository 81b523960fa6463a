#include "radlr/physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "radlr/angular.hpp"

namespace radlr {

StoppingPower StoppingPower::linear(double s0, double s1) {
  StoppingPower s;
  s.s0_ = s0;
  s.s1_ = s1;
  return s;
}

StoppingPower StoppingPower::tabulated(std::vector<double> energy,
                                       std::vector<double> value) {
  if (energy.size() != value.size() || energy.size() < 2)
    throw std::invalid_argument("StoppingPower: table needs >= 2 rows");
  for (size_t i = 0; i + 1 < energy.size(); ++i)
    if (!(energy[i] < energy[i + 1]))
      throw std::invalid_argument("StoppingPower: energies must increase");
  for (double v : value)
    if (!(v > 0.0))
      throw std::invalid_argument("StoppingPower: values must be positive");
  StoppingPower s;
  s.tabulated_ = true;
  s.e_ = std::move(energy);
  s.v_ = std::move(value);
  return s;
}

double StoppingPower::operator()(double E) const {
  if (!tabulated_) {
    const double v = s0_ + s1_ * E;
    if (!(v > 0.0))
      throw std::domain_error("StoppingPower: non-positive value");
    return v;
  }
  if (E <= e_.front()) return v_.front();
  if (E >= e_.back()) return v_.back();
  const auto it = std::upper_bound(e_.begin(), e_.end(), E);
  const size_t hi = it - e_.begin();
  const double t = (E - e_[hi - 1]) / (e_[hi] - e_[hi - 1]);
  return v_[hi - 1] + t * (v_[hi] - v_[hi - 1]);
}

double HGKernel::operator()(double E, double mu) const {
  const double gg = g(E);
  const double c = magnitude(E);
  const double denom = 1.0 + gg * gg - 2.0 * gg * mu;
  return c / (4.0 * M_PI) * (1.0 - gg * gg) / (denom * std::sqrt(denom));
}

namespace {

// composite 8-point Gauss-Legendre for the 1/S integral
double integral_inv_s(const StoppingPower& s, double a, double b) {
  static const double gx[4] = {0.1834346424956498, 0.5255324099163290,
                               0.7966664774136267, 0.9602898564975363};
  static const double gw[4] = {0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};
  if (b <= a) return 0.0;
  const int panels = 64;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
      acc += gw[i] * (1.0 / s(mid + 0.5 * h * gx[i]) +
                      1.0 / s(mid - 0.5 * h * gx[i]));
    }
    total += 0.5 * h * acc;
  }
  return total;
}

} // namespace

double CrossSectionModel::pseudo_time(double E) const {
  if (E < 0.0 || E > E_max * (1.0 + 1e-12))
    throw std::domain_error("pseudo_time: energy outside [0, E_max]");
  return integral_inv_s(stopping, std::max(E, E_cut), E_max);
}

double CrossSectionModel::energy_of(double t) const {
  const double tmax = t_end();
  if (t < -1e-12 || t > tmax + 1e-12)
    throw std::domain_error("energy_of: pseudo-time outside [0, t_end]");
  double lo = E_cut, hi = E_max; // t decreases in E
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pseudo_time(mid) > t)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, Vector> CrossSectionModel::scatter_diagonal(double t,
                                                              int N) const {
  const double E = energy_of(t);
  Vector sigma = build_scatter_diagonal(
      [&](double mu) { return kernel(E, mu); }, N);
  return {sigma[0], std::move(sigma)};
}

double transform_density(double psi, double E, double rho,
                         const CrossSectionModel& m) {
  return m.stopping(E) * rho * psi;
}

double untransform_density(double psi_t, double E, double rho,
                           const CrossSectionModel& m) {
  return psi_t / (m.stopping(E) * rho);
}

double eval_beam(const BeamModel& b, double E, double x, double y,
                 double omega1) {
  const double d_om = omega1 - b.omega1_mean;
  const double d_e = E - b.e_mean;
  const double d_x = x - b.x_mean;
  const double d_y = y - b.y_mean;
  return b.amplitude * std::exp(-d_om * d_om * b.inv_var_omega1) *
         std::exp(-d_e * d_e * b.inv_var_e) *
         std::exp(-d_x * d_x * b.inv_var_x) *
         std::exp(-d_y * d_y * b.inv_var_y);
}

void accumulate_dose(DoseGrid& dose, const Vector& scalar_flux,
                     const Grid2D& grid, double dt) {
  if (dose.values.size() != grid.cell_count())
    dose.values = Vector::Zero(grid.cell_count());
  dose.values += dt * scalar_flux.cwiseQuotient(grid.rho);
}

Vector ct_to_density(const GrayImage& img, double rho_bone, double rho_min,
                     double air_threshold, double rho_fill) {
  const int w = img.width, h = img.height;
  if (w < 3 || h < 3 || img.pixels.size() != static_cast<size_t>(w) * h)
    throw std::invalid_argument("ct_to_density: bad image dimensions");
  for (double p : img.pixels)
    if (!(p >= 0.0) || !(p <= 1.0))
      throw std::invalid_argument("ct_to_density: gray values must lie in "
                                  "[0,1]");

  // flood fill the border-connected air region
  std::vector<char> air(static_cast<size_t>(w) * h, 0);
  std::vector<int> stack;
  auto push = [&](int r, int c) {
    const int id = r * w + c;
    if (!air[id] && img.pixels[id] <= air_threshold) {
      air[id] = 1;
      stack.push_back(id);
    }
  };
  for (int c = 0; c < w; ++c) {
    push(0, c);
    push(h - 1, c);
  }
  for (int r = 0; r < h; ++r) {
    push(r, 0);
    push(r, w - 1);
  }
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const int r = id / w, c = id % w;
    if (r > 0) push(r - 1, c);
    if (r + 1 < h) push(r + 1, c);
    if (c > 0) push(r, c - 1);
    if (c + 1 < w) push(r, c + 1);
  }

  // image (row, col) -> grid cell (i = col, j = h-1-row)
  Vector rho(static_cast<Eigen::Index>(w) * h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int id = r * w + c;
      const double val =
          air[id] ? rho_fill
                  : rho_min + img.pixels[id] * (rho_bone - rho_min);
      rho[c * h + (h - 1 - r)] = val;
    }
  }
  return rho;
}

} // namespace radlr
