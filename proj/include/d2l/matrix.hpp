#pragma once

#include <Eigen/Core>

namespace d2l {

// Row-major so that each sample (row) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// n points (rows) in d-dimensional space (columns).
using PointSet = Matrix;

}  // namespace d2l
