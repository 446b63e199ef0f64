#pragma once

#include <Eigen/Dense>

#include <string>

namespace itr {

// Dense column-major value. Vectors are n x 1; scalars are 1 x 1.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

inline std::string shape_string(Index rows, Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

template <typename Derived>
std::string shape_of(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

// Scalar -> Scalar conversion of a whole tensor.
template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  return t.template cast<To>();
}

}  // namespace itr
