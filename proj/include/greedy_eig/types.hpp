#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace geig {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Sizes = std::vector<Index>;

}  // namespace geig
