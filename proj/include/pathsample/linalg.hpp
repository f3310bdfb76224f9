#pragma once

#include <Eigen/Dense>

namespace pathsample {

// Row-major so layer blobs map onto storage without transposition.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace pathsample
