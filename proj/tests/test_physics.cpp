#include <doctest.h>

#include <cmath>

#include "radlr/physics.hpp"

using namespace radlr;

TEST_CASE("pseudo-time transform and its inverse") {
  CrossSectionModel unit;
  unit.stopping = StoppingPower::linear(1.0, 0.0);
  unit.E_max = 1.0;
  CHECK(unit.pseudo_time(unit.E_max) == doctest::Approx(0.0));
  CHECK(unit.pseudo_time(0.25) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(unit.t_end() == doctest::Approx(1.0).epsilon(1e-12));

  // affine stopping power: compare against the analytic antiderivative
  const double a = 0.8, b = 0.35, emax = 12.0;
  CrossSectionModel m;
  m.stopping = StoppingPower::linear(a, b);
  m.E_max = emax;
  m.E_cut = 0.0;
  auto analytic = [&](double e) {
    return (std::log(a + b * emax) - std::log(a + b * e)) / b;
  };
  for (int i = 0; i <= 20; ++i) {
    const double e = emax * i / 20.0;
    CHECK(m.pseudo_time(e) == doctest::Approx(analytic(e)).epsilon(1e-10));
    CHECK(m.energy_of(m.pseudo_time(e)) == doctest::Approx(e).epsilon(1e-9));
  }
  // strictly decreasing in E
  double prev = m.pseudo_time(0.0);
  for (int i = 1; i <= 20; ++i) {
    const double cur = m.pseudo_time(emax * i / 20.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS(m.pseudo_time(-0.5));
  CHECK_THROWS(m.pseudo_time(2.0 * emax));
}

TEST_CASE("tabulated stopping power interpolates") {
  StoppingPower s = StoppingPower::tabulated({0.0, 1.0, 2.0}, {2.0, 4.0, 8.0});
  CHECK(s(0.5) == doctest::Approx(3.0));
  CHECK(s(1.5) == doctest::Approx(6.0));
  CHECK(s(-1.0) == doctest::Approx(2.0)); // clamped
  CHECK(s(5.0) == doctest::Approx(8.0));
  CHECK_THROWS(StoppingPower::tabulated({1.0}, {1.0}));
  CHECK_THROWS(StoppingPower::tabulated({0.0, 1.0}, {1.0, -1.0}));
}

TEST_CASE("density transform is a pointwise scaling") {
  CrossSectionModel m;
  m.stopping = StoppingPower::linear(2.0, 0.0);
  m.E_max = 1.0;
  CHECK(transform_density(1.0, 0.5, 3.0, m) == doctest::Approx(6.0));
  const double fwd = transform_density(0.7, 0.5, 1.6, m);
  CHECK(untransform_density(fwd, 0.5, 1.6, m) == doctest::Approx(0.7));

  // unit stopping power and density leave the density untouched
  CrossSectionModel unit;
  unit.E_max = 1.0;
  CHECK(transform_density(0.37, 0.2, 1.0, unit) == doctest::Approx(0.37));
}

TEST_CASE("beam evaluation") {
  BeamModel b; // table defaults
  CHECK(b.x_mean == doctest::Approx(7.25));
  CHECK(b.y_mean == doctest::Approx(14.5));
  CHECK(b.inv_var_omega1 == doctest::Approx(75.0));
  CHECK(b.inv_var_x == doctest::Approx(20.0));
  CHECK(b.inv_var_y == doctest::Approx(20.0));
  CHECK(b.inv_var_e == doctest::Approx(100.0));

  // at every mean simultaneously the value is the amplitude
  CHECK(eval_beam(b, b.e_mean, b.x_mean, b.y_mean, b.omega1_mean) ==
        doctest::Approx(1e5));
  // even in the direction offset
  const double lo = eval_beam(b, b.e_mean, b.x_mean, b.y_mean,
                              b.omega1_mean - 0.1);
  const double hi = eval_beam(b, b.e_mean, b.x_mean, b.y_mean,
                              b.omega1_mean + 0.1);
  CHECK(lo == doctest::Approx(hi).epsilon(1e-14));
  CHECK(lo < 1e5);
}

TEST_CASE("dose accumulation") {
  Grid2D g = build_grid(3, 3, 1.0, 1.0, 0.0, 0.0, Vector::Ones(9),
                        BoundaryMode::periodic);
  DoseGrid dose(9);

  accumulate_dose(dose, Vector::Zero(9), g, 0.1);
  CHECK(dose.values.norm() == 0.0);

  // single cell carrying scalar flux sqrt(4 pi) (a unit zeroth moment)
  Vector flux = Vector::Zero(9);
  flux[4] = std::sqrt(4.0 * M_PI);
  accumulate_dose(dose, flux, g, 0.1);
  CHECK(dose.values[4] ==
        doctest::Approx(std::sqrt(4.0 * M_PI) * 0.1).epsilon(1e-14));

  // uniform isotropic nodal field of value 1: flux 4 pi, dose dt*4pi/rho
  Grid2D g2 = build_grid(3, 3, 1.0, 1.0, 0.0, 0.0, 2.0 * Vector::Ones(9),
                         BoundaryMode::periodic);
  DoseGrid dose2(9);
  accumulate_dose(dose2, 4.0 * M_PI * Vector::Ones(9), g2, 0.5);
  for (int c = 0; c < 9; ++c)
    CHECK(dose2.values[c] ==
          doctest::Approx(0.5 * 4.0 * M_PI / 2.0).epsilon(1e-14));
}

TEST_CASE("ct grayscale to density") {
  // 5x5 image: bright ring, dark center (not border-connected), dark corner
  // strip connected to the border
  GrayImage img;
  img.width = img.height = 5;
  img.pixels.assign(25, 0.5);
  img.pixels[2 * 5 + 2] = 0.0; // interior hole -> stays at rho_min
  img.pixels[0] = 0.0;         // border air -> filled
  img.pixels[1] = 0.0;
  Vector rho = ct_to_density(img);

  // interior: gray 0.5 -> 0.95
  CHECK(rho[1 * 5 + 1] == doctest::Approx(0.95));
  // interior hole keeps the minimal density
  CHECK(rho[2 * 5 + (5 - 1 - 2)] == doctest::Approx(0.05));
  // border-connected air is filled with tissue-level density
  CHECK(rho[0 * 5 + (5 - 1 - 0)] == doctest::Approx(1.0));

  GrayImage bright = img;
  bright.pixels.assign(25, 1.0);
  CHECK(ct_to_density(bright)[7] == doctest::Approx(1.85));

  GrayImage bad = img;
  bad.pixels[3] = 1.5;
  CHECK_THROWS(ct_to_density(bad));
}
