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

#include <span>

#include "ralm/numeric/dense.hpp"

namespace ralm::lookalike {

template <typename Scalar>
struct PooledSeeds {
  RowVectorX<Scalar> pooled;  // length h
  VectorX<Scalar> weights;    // one per centroid, sums to 1
};

/// ReLU(x W + b) applied to every row of `x`.
template <typename DX, typename DW, typename DB>
MatrixX<typename DX::Scalar> transform(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DW>& w,
                                       const Eigen::MatrixBase<DB>& b) {
  if (x.cols() != w.rows() || b.size() != w.cols()) {
    throw DimensionError("transform: x " + shape_string(x) + ", W " + shape_string(w) + ", b " +
                         shape_string(b));
  }
  MatrixX<typename DX::Scalar> y = x * w;
  y.rowwise() += b.reshaped().transpose();
  return y.cwiseMax(typename DX::Scalar(0));
}

/// Target-conditioned pooling of centroid rows E_s (k x h):
/// score_i = tanh(e_i W_l E_u^T), weights = softmax(score), E_local = weights^T E_s.
/// E_s W_l is formed explicitly, so the cost is Θ(k h^2).
template <typename DS, typename DU, typename DW>
PooledSeeds<typename DS::Scalar> local_attention(const Eigen::MatrixBase<DS>& seeds,
                                                 const Eigen::MatrixBase<DU>& user,
                                                 const Eigen::MatrixBase<DW>& w_local) {
  using Scalar = typename DS::Scalar;
  if (seeds.rows() < 1) throw ArgumentError("local_attention: no centroids");
  if (w_local.rows() != seeds.cols() || w_local.cols() != user.size()) {
    throw DimensionError("local_attention: E_s " + shape_string(seeds) + ", W_l " +
                         shape_string(w_local) + ", E_u " + shape_string(user));
  }
  // Coefficient-based product: at serving sizes GEMM blocking costs more
  // than the arithmetic.
  const MatrixX<Scalar> projected = seeds.lazyProduct(w_local);
  PooledSeeds<Scalar> out;
  out.weights.noalias() = projected.lazyProduct(user.reshaped());
  out.weights = out.weights.array().tanh();
  out.weights = (out.weights.array() - out.weights.maxCoeff()).exp();
  out.weights /= out.weights.sum();
  out.pooled.noalias() = out.weights.transpose().lazyProduct(seeds);
  return out;
}

/// Target-independent self-attention over centroid rows:
/// score_i = w_g . tanh(W_g e_i), weights = softmax(score), E_global = weights^T E_s.
/// W_g is s_a x h and w_g has length s_a.
template <typename DS, typename DW, typename DV>
PooledSeeds<typename DS::Scalar> global_attention(const Eigen::MatrixBase<DS>& seeds,
                                                  const Eigen::MatrixBase<DW>& w_global,
                                                  const Eigen::MatrixBase<DV>& context) {
  using Scalar = typename DS::Scalar;
  if (seeds.rows() < 1) throw ArgumentError("global_attention: no centroids");
  if (w_global.cols() != seeds.cols() || context.size() != w_global.rows()) {
    throw DimensionError("global_attention: E_s " + shape_string(seeds) + ", W_g " +
                         shape_string(w_global) + ", w_g " + shape_string(context));
  }
  const MatrixX<Scalar> hidden = (seeds * w_global.transpose()).array().tanh().matrix();  // k x s_a
  const VectorX<Scalar> scores = hidden * context.reshaped();
  PooledSeeds<Scalar> out;
  out.weights = softmax(scores);
  out.pooled = out.weights.transpose() * seeds;
  return out;
}

/// Unweighted centroid mean.
template <typename DS>
RowVectorX<typename DS::Scalar> average_pooling_baseline(const Eigen::MatrixBase<DS>& seeds) {
  if (seeds.rows() < 1) throw ArgumentError("average_pooling_baseline: no centroids");
  return seeds.colwise().mean();
}

struct CombineWeights {
  double alpha = 0.3;  // global similarity
  double beta = 0.7;   // local similarity
};

struct SimilarityScore {
  double global_sim = 0.0;
  double local_sim = 0.0;
  double score = 0.0;
};

/// alpha * cosine(E_u, E_global) + beta * cosine(E_u, E_local). A zero-norm
/// pooled seed vector contributes similarity 0; a zero-norm user throws
/// DegenerateVectorError.
template <typename DU, typename DG, typename DL>
SimilarityScore combine_similarities(const Eigen::MatrixBase<DU>& user, const Eigen::MatrixBase<DG>& global,
                                     const Eigen::MatrixBase<DL>& local, const CombineWeights& w) {
  if (!(user.norm() > 0)) throw DegenerateVectorError("serving_score: zero-norm user embedding");
  auto sim = [&](const auto& v) -> double {
    if (!(v.norm() > 0)) return 0.0;
    return static_cast<double>(cosine_similarity(user.reshaped(), v.reshaped()));
  };
  SimilarityScore s;
  s.global_sim = sim(global);
  s.local_sim = sim(local);
  s.score = w.alpha * s.global_sim + w.beta * s.local_sim;
  return s;
}

/// Mean sigmoid cross entropy of probabilities against {0, 1} labels.
/// Probabilities are clamped away from 0 and 1.
double lookalike_loss(std::span<const double> probabilities, std::span<const int> labels);

/// Same loss evaluated from logits: max(z,0) - z y + log(1 + exp(-|z|)).
double lookalike_loss_from_logits(std::span<const double> logits, std::span<const int> labels);

}  // namespace ralm::lookalike
