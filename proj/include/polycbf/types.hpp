#pragma once

#include <Eigen/Dense>
#include <vector>

namespace polycbf {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

// Sorted, duplicate-free, 0-based indices into a list of affine functions.
using IndexSet = std::vector<int>;

} // namespace polycbf
