#include "radlr/dlra.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace radlr {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    throw std::runtime_error(std::string("dlra: non-finite values in ") +
                             what);
}

// replace column c by a unit vector orthogonal to columns [0, c); the
// canonical direction least represented by those columns seeds the search
void complete_column(Matrix& q, int c) {
  const Eigen::Index n = q.rows();
  Vector row_sq = Vector::Zero(n);
  for (int p = 0; p < c; ++p) row_sq += q.col(p).cwiseAbs2();
  Eigen::Index seed = 0;
  row_sq.minCoeff(&seed);
  if (row_sq[seed] > 1.0 - 1e-10)
    throw std::runtime_error("orthonormalize: no completion direction left");
  Vector v = Vector::Zero(n);
  v[seed] = 1.0;
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int pass = 0; pass < 2; ++pass)
      for (int p = 0; p < c; ++p) v -= q.col(p).dot(v) * q.col(p);
    v /= v.norm();
  }
  q.col(c) = v;
}

// orthonormalize `cols` columns of q starting at column `begin` against all
// previous columns; dependent columns are replaced by completion vectors.
int mgs_block(Matrix& q, int begin, int cols) {
  int deficient = 0;
  for (int c = begin; c < begin + cols; ++c) {
    const double orig = q.col(c).norm();
    for (int pass = 0; pass < 2; ++pass)
      for (int p = 0; p < c; ++p)
        q.col(c) -= q.col(p).dot(q.col(c)) * q.col(p);
    const double nrm = q.col(c).norm();
    if (nrm > std::max(orig, 1.0) * 1e-13) {
      q.col(c) /= nrm;
    } else {
      ++deficient;
      complete_column(q, c);
    }
  }
  return deficient;
}

} // namespace

LowRankFactors LowRankFactors::zero(int n, int m, int r) {
  if (r < 1 || r > std::min(n, m))
    throw std::invalid_argument("LowRankFactors::zero: bad rank");
  LowRankFactors f;
  f.X = Matrix::Identity(n, r);
  f.S = Matrix::Zero(r, r);
  f.W = Matrix::Identity(m, r);
  return f;
}

OrthResult orthonormalize(const Matrix& m) {
  require_finite(m, "orthonormalize input");
  const int cols = static_cast<int>(m.cols());
  OrthResult out;
  out.Q = m;
  out.R = Matrix::Zero(cols, cols);
  for (int c = 0; c < cols; ++c) {
    const double orig = out.Q.col(c).norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (int p = 0; p < c; ++p) {
        const double proj = out.Q.col(p).dot(out.Q.col(c));
        out.Q.col(c) -= proj * out.Q.col(p);
        out.R(p, c) += proj;
      }
    }
    const double nrm = out.Q.col(c).norm();
    if (nrm > std::max(orig, 1.0) * 1e-13) {
      out.Q.col(c) /= nrm;
      out.R(c, c) = nrm;
    } else {
      ++out.deficient_cols;
      out.R(c, c) = 0.0;
      complete_column(out.Q, c);
    }
  }
  return out;
}

Matrix augment_basis(const Matrix& q0, const Matrix& cand, int max_cols) {
  const int r0 = static_cast<int>(q0.cols());
  const int extra =
      std::min<int>(static_cast<int>(cand.cols()), max_cols - r0);
  if (extra <= 0) return q0;
  Matrix q(q0.rows(), r0 + extra);
  q.leftCols(r0) = q0;
  q.rightCols(extra) = cand.leftCols(extra);
  mgs_block(q, r0, extra);
  return q;
}

LowRankFactors truncate(const Matrix& s_aug, const Matrix& x_aug,
                        const Matrix& w_aug, const TruncationPolicy& policy) {
  require_finite(s_aug, "truncate input");
  Eigen::JacobiSVD<Matrix> svd(s_aug,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const int full = static_cast<int>(sv.size());
  const double tol = policy.threshold(s_aug.norm());

  // smallest rank whose discarded tail norm stays within the tolerance
  int r1 = full;
  double tail2 = 0.0;
  for (int r = full; r >= 1; --r) {
    const double next = tail2 + sv[r - 1] * sv[r - 1];
    if (std::sqrt(next) <= tol) {
      tail2 = next;
      r1 = r - 1;
    } else {
      break;
    }
  }
  r1 = std::max(r1, std::min(policy.r_min, full));
  r1 = std::min(r1, policy.r_max);
  r1 = std::max(r1, 1);

  LowRankFactors out;
  out.X = x_aug * svd.matrixU().leftCols(r1);
  out.W = w_aug * svd.matrixV().leftCols(r1);
  out.S = sv.head(r1).asDiagonal();
  return out;
}

LowRankFactors bug_step(const LowRankFactors& f, const FlowSet& flows,
                        double dt) {
  // K-step
  Matrix k = f.X * f.S;
  k += dt * flows.k_flow(k, f.W);
  require_finite(k, "K-step flow");
  const Matrix x1 = orthonormalize(k).Q;
  const Matrix m = x1.transpose() * f.X;

  // L-step
  Matrix l = f.S * f.W.transpose();
  l += dt * flows.l_flow(f.X, f.S * f.W.transpose());
  require_finite(l, "L-step flow");
  const Matrix w1 = orthonormalize(l.transpose()).Q;
  const Matrix n = w1.transpose() * f.W;

  // Galerkin S-step
  LowRankFactors out;
  out.X = x1;
  out.W = w1;
  out.S = m * f.S * n.transpose();
  out.S += dt * flows.s_flow(x1, out.S, w1);
  require_finite(out.S, "S-step flow");
  return out;
}

LowRankFactors adaptive_bug_step(const LowRankFactors& f, const FlowSet& flows,
                                 double dt, const TruncationPolicy& policy) {
  const int r = f.rank();

  Matrix k = f.X * f.S;
  k += dt * flows.k_flow(k, f.W);
  require_finite(k, "K-step flow");
  const Matrix xh = augment_basis(f.X, k, static_cast<int>(f.X.rows()));

  Matrix l = f.S * f.W.transpose();
  l += dt * flows.l_flow(f.X, f.S * f.W.transpose());
  require_finite(l, "L-step flow");
  const Matrix wh =
      augment_basis(f.W, l.transpose(), static_cast<int>(f.W.rows()));

  // leading blocks of xh/wh are exactly X^0/W^0, so the padded S
  // represents u^0 without projection error
  Matrix sh = Matrix::Zero(xh.cols(), wh.cols());
  sh.topLeftCorner(r, r) = f.S;
  sh += dt * flows.s_flow(xh, sh, wh);
  require_finite(sh, "S-step flow");

  return truncate(sh, xh, wh, policy);
}

LowRankFactors psi_l_step_scatter(const LowRankFactors& f, double sigma_t,
                                  const Vector& sigma_diag, double dt) {
  if (sigma_diag.size() != f.W.rows())
    throw std::invalid_argument("psi_l_step_scatter: sigma size mismatch");
  Matrix l = f.S * f.W.transpose(); // r x m
  for (Eigen::Index k = 0; k < sigma_diag.size(); ++k) {
    const double denom = 1.0 + dt * sigma_t - dt * sigma_diag[k];
    if (!(denom > 0.0))
      throw std::runtime_error(
          "psi_l_step_scatter: non-positive scattering denominator");
    l.col(k) /= denom;
  }
  OrthResult qr = orthonormalize(l.transpose());
  LowRankFactors out;
  out.X = f.X;
  out.W = qr.Q;
  out.S = qr.R.transpose();
  return out;
}

} // namespace radlr
