#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace rflaf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

} // namespace rflaf
