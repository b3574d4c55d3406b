#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace nnreach {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Axis-aligned box {x : |x - center| <= half_width componentwise}.
template <typename Scalar>
struct BoxSet {
  VectorX<Scalar> center;
  VectorX<Scalar> half_width;

  BoxSet() = default;
  BoxSet(VectorX<Scalar> c, VectorX<Scalar> h) : center(std::move(c)), half_width(std::move(h)) {}

  Eigen::Index dim() const { return center.size(); }

  bool valid() const {
    return center.size() == half_width.size() && center.allFinite() && half_width.allFinite() &&
           (half_width.array() >= Scalar(0)).all();
  }

  VectorX<Scalar> lower() const { return center - half_width; }
  VectorX<Scalar> upper() const { return center + half_width; }

  bool contains(const VectorX<Scalar>& x, Scalar tol = Scalar(0)) const {
    return ((x - center).cwiseAbs().array() <= half_width.array() + tol).all();
  }

  /// Vertex selected by the bits of `mask` (bit j set: upper bound on axis j).
  VectorX<Scalar> vertex(unsigned long long mask) const {
    VectorX<Scalar> v = center;
    for (Eigen::Index j = 0; j < dim(); ++j)
      v(j) += ((mask >> j) & 1ull) ? half_width(j) : -half_width(j);
    return v;
  }
};

using BoxSetd = BoxSet<double>;

}  // namespace nnreach
