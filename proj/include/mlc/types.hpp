#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mlc {

using Index = Eigen::Index;

/// Row-major dense matrix; one sample (or one weight row) per row.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;
using VectorD = Vector<double>;

using IndexList = std::vector<Index>;
using LabelList = std::vector<int>;

}  // namespace mlc
