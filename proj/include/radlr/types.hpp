#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace radlr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

} // namespace radlr
