#pragma once

#include <Eigen/Dense>

namespace polyrec {

// Row-major so that row stripes of the similarity graph are contiguous in
// memory and in the binary cache file.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace polyrec
