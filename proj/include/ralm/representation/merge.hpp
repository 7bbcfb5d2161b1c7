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

#include "ralm/numeric/dense.hpp"

namespace ralm::rep {

template <typename Scalar>
struct AttentionMergeResult {
  RowVectorX<Scalar> merged;   // M, length m
  VectorX<Scalar> weights;     // a, one per field, sums to 1
};

/// Attention-merge over field embeddings H (n x m, one row per field):
/// s_i = w2 . tanh(W1 h_i), a = softmax(s), M = a H.
/// W1 is k_a x m and w2 has length k_a.
template <typename DH, typename DW1, typename DW2>
AttentionMergeResult<typename DH::Scalar> attention_merge(const Eigen::MatrixBase<DH>& fields,
                                                          const Eigen::MatrixBase<DW1>& w1,
                                                          const Eigen::MatrixBase<DW2>& w2) {
  using Scalar = typename DH::Scalar;
  if (fields.rows() < 1) throw ArgumentError("attention_merge: no fields");
  if (w1.cols() != fields.cols() || w2.size() != w1.rows()) {
    throw DimensionError("attention_merge: H " + shape_string(fields) + ", W1 " +
                         shape_string(w1) + ", w2 " + shape_string(w2));
  }
  const MatrixX<Scalar> hidden = (fields * w1.transpose()).array().tanh().matrix();
  const VectorX<Scalar> scores = hidden * w2.reshaped();
  AttentionMergeResult<Scalar> out;
  out.weights = softmax(scores);
  out.merged = out.weights.transpose() * fields;
  return out;
}

/// Row-major concatenation of the field rows.
template <typename DH>
RowVectorX<typename DH::Scalar> concat_merge(const Eigen::MatrixBase<DH>& fields) {
  if (fields.rows() < 1) throw ArgumentError("concat_merge: no fields");
  const MatrixX<typename DH::Scalar> rm = fields;
  return Eigen::Map<const RowVectorX<typename DH::Scalar>>(rm.data(), rm.size());
}

}  // namespace ralm::rep
