#pragma once

#include <Eigen/Dense>

namespace opart {

// Row-major so that per-location rows are contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace opart
