#pragma once

#include <functional>

#include "radlr/types.hpp"

namespace radlr {

/// Rank-r factorization u = X S W^T with column-orthonormal X (n_x x r)
/// and W (m x r); ||u||_F = ||S||_F.
struct LowRankFactors {
  Matrix X, S, W;

  int rank() const { return static_cast<int>(S.cols()); }
  int rows() const { return static_cast<int>(X.rows()); }
  int cols() const { return static_cast<int>(W.rows()); }
  double norm() const { return S.norm(); }
  Matrix dense() const { return X * S * W.transpose(); }
  /// Column k of the represented matrix without forming it.
  Vector dense_col(int k) const { return X * (S * W.row(k).transpose()); }

  /// Zero factors at rank r over canonical basis columns.
  static LowRankFactors zero(int n, int m, int r);
};

struct OrthResult {
  Matrix Q; // column-orthonormal, same shape as the input
  Matrix R; // upper triangular, nonnegative diagonal
  int deficient_cols = 0;
};

/// Modified Gram-Schmidt with reorthogonalization. Columns that are
/// numerically dependent on their predecessors are replaced by completion
/// vectors orthogonal to everything built so far (their R diagonal is 0),
/// so Q always has full column rank and M = Q R holds.
OrthResult orthonormalize(const Matrix& m);

/// [q0 | completion of (cand - q0 q0^T cand)] with exactly
/// min(q0.cols() + cand.cols(), max_cols) columns; q0 must be orthonormal
/// and is kept verbatim as the leading block.
Matrix augment_basis(const Matrix& q0, const Matrix& cand, int max_cols);

struct TruncationPolicy {
  enum class Mode { absolute, relative };
  Mode mode = Mode::relative;
  double theta = 0.1; // relative mode multiplies by ||S_hat||_F
  int r_min = 1;
  int r_max = 1 << 20;

  double threshold(double s_norm) const {
    return mode == Mode::relative ? theta * s_norm : theta;
  }
};

/// SVD truncation of an augmented factorization: picks the smallest rank
/// whose discarded singular-value tail satisfies sqrt(sum sigma_j^2) <=
/// threshold, clamped to [r_min, r_max].
LowRankFactors truncate(const Matrix& s_aug, const Matrix& x_aug,
                        const Matrix& w_aug, const TruncationPolicy& policy);

/// Right-hand-side projections for the basis-update integrators. All three
/// must accept the shapes produced by augmentation (rectangular S).
struct FlowSet {
  // F(K W^T) W, K is n_x x r
  std::function<Matrix(const Matrix& K, const Matrix& W)> k_flow;
  // X^T F(X L), L is r x m
  std::function<Matrix(const Matrix& X, const Matrix& L)> l_flow;
  // X^T F(X S W^T) W
  std::function<Matrix(const Matrix& X, const Matrix& S, const Matrix& W)>
      s_flow;
};

/// One fixed-rank basis-update step (explicit Euler in every substep):
/// parallel K/L basis updates, then the Galerkin S-step from M S^0 N^T.
LowRankFactors bug_step(const LowRankFactors& f, const FlowSet& flows,
                        double dt);

/// Rank-adaptive variant: bases are augmented with the previous ones
/// ([X^0 | new directions], capped per side at min(2r, dim)), the S-step
/// starts from the zero-padded S^0, and the result is truncated.
LowRankFactors adaptive_bug_step(const LowRankFactors& f, const FlowSet& flows,
                                 double dt, const TruncationPolicy& policy);

/// Projector-splitting L-step for stiff self-scattering: columnwise division
/// of L = S W^T by (1 + dt*sigma_t - dt*sigma_kk), then re-orthonormalization
/// of the directional basis. X and the rank stay unchanged. Throws when a
/// denominator is not positive.
LowRankFactors psi_l_step_scatter(const LowRankFactors& f, double sigma_t,
                                  const Vector& sigma_diag, double dt);

} // namespace radlr
