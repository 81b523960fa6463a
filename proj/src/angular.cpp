#include "radlr/angular.hpp"

#include <cmath>
#include <stdexcept>

namespace radlr {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

// Associated Legendre P_l^k without the Condon-Shortley phase.
double assoc_legendre(int l, int k, double mu) {
  double pkk = 1.0;
  const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  for (int j = 1; j <= k; ++j) pkk *= (2.0 * j - 1.0) * s;
  if (l == k) return pkk;
  double pkk1 = mu * (2.0 * k + 1.0) * pkk;
  if (l == k + 1) return pkk1;
  double plk = 0.0;
  for (int ll = k + 2; ll <= l; ++ll) {
    plk = (mu * (2.0 * ll - 1.0) * pkk1 - (ll + k - 1.0) * pkk) / (ll - k);
    pkk = pkk1;
    pkk1 = plk;
  }
  return plk;
}

double sh_norm(int l, int k) {
  double ratio = 1.0; // (l-k)!/(l+k)!
  for (int j = l - k + 1; j <= l + k; ++j) ratio /= j;
  return std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) * ratio);
}

} // namespace

double legendre_p(int l, double x) {
  if (l == 0) return 1.0;
  double p0 = 1.0, p1 = x;
  for (int j = 1; j < l; ++j) {
    const double p2 = ((2.0 * j + 1.0) * x * p1 - j * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

double eval_real_sh(int l, int k, const Eigen::Vector3d& omega) {
  if (l < 0 || std::abs(k) > l)
    throw std::out_of_range("eval_real_sh: harmonic index out of range");
  const double mu = omega.z();
  const int ka = std::abs(k);
  const double p = assoc_legendre(l, ka, mu);
  if (k == 0) return sh_norm(l, 0) * p;
  const double phi = std::atan2(omega.y(), omega.x());
  const double azi = (k > 0) ? std::cos(ka * phi) : std::sin(ka * phi);
  return std::sqrt(2.0) * sh_norm(l, ka) * azi * p;
}

PnBasis build_pn_basis(int N) {
  if (N < 1) throw std::invalid_argument("build_pn_basis: N must be >= 1");
  PnBasis b;
  b.degree = N;
  b.size = (N + 1) * (N + 1);
  b.lk.reserve(b.size);
  for (int l = 0; l <= N; ++l)
    for (int k = -l; k <= l; ++k) b.lk.emplace_back(l, k);

  // tensor quadrature exact for the degree <= 2N+1 integrands m_a m_b Omega_i
  const int np = N + 2;
  const int nphi = 2 * np;
  std::vector<double> mu, wmu;
  gauss_legendre(np, mu, wmu);

  b.Ax = Matrix::Zero(b.size, b.size);
  b.Ay = Matrix::Zero(b.size, b.size);
  Vector vals(b.size);
  for (int i = 0; i < np; ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - mu[i] * mu[i]));
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * M_PI * (j + 0.5) / nphi;
      const Eigen::Vector3d om(s * std::cos(phi), s * std::sin(phi), mu[i]);
      const double w = wmu[i] * 2.0 * M_PI / nphi;
      for (int a = 0; a < b.size; ++a)
        vals[a] = eval_real_sh(b.lk[a].first, b.lk[a].second, om);
      b.Ax.noalias() += (w * om.x()) * vals * vals.transpose();
      b.Ay.noalias() += (w * om.y()) * vals * vals.transpose();
    }
  }
  b.Ax = 0.5 * (b.Ax + b.Ax.transpose()).eval();
  b.Ay = 0.5 * (b.Ay + b.Ay.transpose()).eval();

  auto decompose = [](const Matrix& a, Matrix& v, Vector& lam, Matrix& roe) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    v = es.eigenvectors();
    lam = es.eigenvalues();
    // deterministic sign: largest-|.| component of each eigenvector positive
    for (int c = 0; c < v.cols(); ++c) {
      int imax = 0;
      for (int r = 1; r < v.rows(); ++r)
        if (std::abs(v(r, c)) > std::abs(v(imax, c))) imax = r;
      if (v(imax, c) < 0.0) v.col(c) = -v.col(c);
    }
    roe = v * lam.cwiseAbs().asDiagonal() * v.transpose();
    roe = 0.5 * (roe + roe.transpose()).eval();
  };
  decompose(b.Ax, b.Vx, b.lamx, b.absAx);
  decompose(b.Ay, b.Vy, b.lamy, b.absAy);
  b.lambda_max = std::max(b.lamx.cwiseAbs().maxCoeff(),
                          b.lamy.cwiseAbs().maxCoeff());
  return b;
}

namespace {

Quadrature finalize(const PnBasis& basis, const std::vector<Eigen::Vector3d>& pts,
                    const std::vector<double>& w) {
  Quadrature q;
  const int n = static_cast<int>(pts.size());
  q.points.resize(n, 3);
  q.weights.resize(n);
  q.moment_map.resize(n, basis.size);
  for (int i = 0; i < n; ++i) {
    q.points.row(i) = pts[i].transpose();
    q.weights[i] = w[i];
    for (int a = 0; a < basis.size; ++a)
      q.moment_map(i, a) =
          w[i] * eval_real_sh(basis.lk[a].first, basis.lk[a].second, pts[i]);
    q.omega_x_max = std::max(q.omega_x_max, std::abs(pts[i].x()));
    q.omega_y_max = std::max(q.omega_y_max, std::abs(pts[i].y()));
  }
  return q;
}

void tensor_nodes(int order, std::vector<Eigen::Vector3d>& pts,
                  std::vector<double>& w) {
  if (order < 2)
    throw std::invalid_argument("build_quadrature: order must be >= 2");
  std::vector<double> mu, wmu;
  gauss_legendre(order, mu, wmu);
  const int nphi = 2 * order;
  for (int i = 0; i < order; ++i) {
    const double s = std::sqrt(std::max(0.0, 1.0 - mu[i] * mu[i]));
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * M_PI * (j + 0.5) / nphi;
      pts.emplace_back(s * std::cos(phi), s * std::sin(phi), mu[i]);
      w.push_back(wmu[i] * 2.0 * M_PI / nphi);
    }
  }
}

} // namespace

Quadrature build_quadrature(int order, const PnBasis& basis) {
  std::vector<Eigen::Vector3d> pts;
  std::vector<double> w;
  tensor_nodes(order, pts, w);
  return finalize(basis, pts, w);
}

Quadrature build_directed_quadrature(int order, const PnBasis& basis,
                                     const Eigen::Vector3d& beam_dir,
                                     double cone_half_angle) {
  if (!(cone_half_angle > 0.0) || cone_half_angle > M_PI)
    throw std::invalid_argument(
        "build_directed_quadrature: cone half-angle must lie in (0, pi]");
  const Eigen::Vector3d dir = beam_dir.normalized();
  const double cmin = std::cos(cone_half_angle);
  std::vector<Eigen::Vector3d> pts, kept;
  std::vector<double> w, wkept;
  tensor_nodes(order, pts, w);
  for (size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].dot(dir) >= cmin) {
      kept.push_back(pts[i]);
      wkept.push_back(w[i]);
    }
  }
  if (kept.empty())
    throw std::invalid_argument(
        "build_directed_quadrature: cone captures no quadrature points");
  return finalize(basis, kept, wkept);
}

Vector build_scatter_diagonal(const std::function<double(double)>& kernel,
                              int N) {
  const int nq = 128;
  std::vector<double> x, w;
  gauss_legendre(nq, x, w);
  std::vector<double> kv(nq);
  for (int i = 0; i < nq; ++i) {
    kv[i] = kernel(x[i]);
    if (!std::isfinite(kv[i]))
      throw std::invalid_argument("build_scatter_diagonal: kernel returned "
                                  "a non-finite value");
  }
  const int m = (N + 1) * (N + 1);
  Vector sigma(m);
  int flat = 0;
  for (int l = 0; l <= N; ++l) {
    double mom = 0.0;
    for (int i = 0; i < nq; ++i) mom += w[i] * legendre_p(l, x[i]) * kv[i];
    mom *= 2.0 * M_PI;
    for (int k = -l; k <= l; ++k) sigma[flat++] = mom;
  }
  const double s00 = sigma[0];
  for (int a = 0; a < m; ++a)
    if (std::abs(sigma[a]) > s00 + 1e-12 * std::max(1.0, std::abs(s00)))
      throw std::invalid_argument(
          "build_scatter_diagonal: inadmissible kernel, |sigma_kk| exceeds "
          "the zero-degree moment");
  return sigma;
}

} // namespace radlr
