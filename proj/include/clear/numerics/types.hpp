#pragma once

#include <Eigen/Core>
#include <vector>

namespace clear {

using Index = Eigen::Index;

/// Row-major so that each row is one sample laid out as a flat C*H*W buffer.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Shape = std::vector<Index>;

inline Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index d : s) n *= d;
  return n;
}

}  // namespace clear
