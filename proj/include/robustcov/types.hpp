#pragma once

#include <Eigen/Dense>

namespace robustcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace robustcov
