// Copyright 2026 The RALM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "ralm/errors.hpp"

namespace ralm {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Training-side dense matrix. Row-major so that "one row per field / user /
/// centroid" layouts map onto contiguous memory.
using DenseMatrix = MatrixX<double>;
using Vector = VectorX<double>;
using RowVector = RowVectorX<double>;

enum class Activation { kTanh, kRelu, kSigmoid };

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

/// Checked matrix product; Eigen only asserts on mismatched shapes.
template <typename A, typename B>
MatrixX<typename A::Scalar> matmul(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(a) + " and " +
                         shape_string(b));
  }
  return a * b;
}

/// Numerically stable softmax over all coefficients of `v` (row or column).
/// The result has the same shape as the input.
template <typename Derived>
typename Derived::PlainObject softmax(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() == 0) throw ArgumentError("softmax: empty input");
  using Scalar = typename Derived::Scalar;
  const Scalar shift = v.maxCoeff();
  typename Derived::PlainObject e = (v.array() - shift).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
typename Derived::PlainObject activation(const Eigen::MatrixBase<Derived>& x, Activation kind) {
  using Scalar = typename Derived::Scalar;
  switch (kind) {
    case Activation::kTanh:
      return x.array().tanh().matrix();
    case Activation::kRelu:
      return x.array().max(Scalar(0)).matrix();
    case Activation::kSigmoid:
      return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
  }
  return x;
}

/// Cosine of the angle between two vectors of equal length.
template <typename A, typename B>
typename A::Scalar cosine_similarity(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine_similarity: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  using Scalar = typename A::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) {
    throw DegenerateVectorError("cosine_similarity: zero-norm input");
  }
  Scalar dot = Scalar(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) dot += a.coeff(i) * b.coeff(i);
  const Scalar c = dot / (na * nb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace ralm
