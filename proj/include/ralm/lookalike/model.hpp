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

#include <random>
#include <string>
#include <vector>

#include "ralm/io/archive.hpp"
#include "ralm/lookalike/attention.hpp"
#include "ralm/numeric/gradcheck.hpp"
#include "ralm/numeric/tape.hpp"

namespace ralm::lookalike {

/// How the seeds tower pools centroid rows.
enum class PoolingMode {
  kAttention,  // alpha * global attention + beta * local attention
  kAverage,    // centroid mean in place of both attention outputs
};

const char* to_string(PoolingMode mode);
PoolingMode pooling_mode_from_string(const std::string& s);

struct LookalikeConfig {
  int universal_dim = 16;   // m
  int lookalike_dim = 16;   // h
  int global_attention_size = 16;  // s_a
  int merge_attention_size = 0;    // k_a of the upstream tower, kept for the model file
  int cluster_k = 20;
  CombineWeights weights;
  PoolingMode pooling = PoolingMode::kAttention;
};

/// Shared transforming matrix plus the local and global attention units.
class LookalikeModel {
 public:
  static constexpr const char* kMagic = "RALMLK";

  LookalikeModel(LookalikeConfig config, std::mt19937_64& rng);

  const LookalikeConfig& config() const { return config_; }

  /// Fixes the per-dimension standardization applied to universal inputs
  /// before the transform (mean 0, unit variance over `universal`).
  /// Not trained. Defaults to the identity.
  void fit_input_normalization(const DenseMatrix& universal);
  const RowVector& input_mean() const { return input_mean_; }
  const RowVector& input_scale() const { return input_scale_; }

  // Taped forward pieces.
  nn::Var transform(nn::Tape& tape, const nn::Var& universal_rows);
  /// Target-independent part: global attention output (1 x h).
  nn::Var global_pool(nn::Tape& tape, const nn::Var& seeds);
  nn::Var local_pool(nn::Tape& tape, const nn::Var& seeds, const nn::Var& user);
  /// alpha * E_global + beta * E_local, or (alpha + beta) * mean for kAverage.
  /// `global` may come from global_pool() to share it across targets.
  nn::Var pooled(nn::Tape& tape, const nn::Var& seeds, const nn::Var& user, const nn::Var* global = nullptr);
  /// pooled . E_u + b; sigmoid of this is the training score. Both towers end
  /// in a ReLU, so the learned offset b is what lets the logit go negative.
  nn::Var training_logit(nn::Tape& tape, const nn::Var& seeds, const nn::Var& user);
  /// training_logit for every row of `users` (b x h, already transformed)
  /// against one candidate's centroids; returns b x 1.
  nn::Var batch_logits(nn::Tape& tape, const nn::Var& seeds, const nn::Var& users,
                       const nn::Var* global = nullptr);

  // Dense inference.
  DenseMatrix transform(const DenseMatrix& universal_rows) const;
  RowVector pooled(const DenseMatrix& seeds, const RowVector& user) const;
  RowVector global_embedding(const DenseMatrix& seeds) const;
  RowVector local_embedding(const DenseMatrix& seeds, const RowVector& user) const;
  double training_score(const DenseMatrix& seeds, const RowVector& user) const;
  SimilarityScore serving_score(const RowVector& user, const DenseMatrix& seeds) const;
  /// Serving score with a precomputed global embedding.
  SimilarityScore serving_score(const RowVector& user, const DenseMatrix& seeds,
                                const RowVector& global) const;

  /// Serving scores of many look-alike embeddings against one candidate.
  /// Rows with zero norm score 0 here instead of throwing.
  Vector score_users(const DenseMatrix& users, const DenseMatrix& seeds) const;

  std::vector<nn::NamedParameter> parameters();

  nn::Parameter& transform_weight() { return transform_w_; }
  nn::Parameter& transform_bias() { return transform_b_; }
  nn::Parameter& local_weight() { return local_w_; }
  nn::Parameter& global_weight() { return global_w_; }
  nn::Parameter& global_context() { return global_v_; }
  nn::Parameter& logit_bias() { return logit_b_; }

  io::ParameterArchive to_archive() const;
  static LookalikeModel from_archive(const io::ParameterArchive& archive);
  void save(const std::string& path) const;
  static LookalikeModel load(const std::string& path);

 private:
  LookalikeConfig config_;
  nn::Parameter transform_w_;  // m x h
  nn::Parameter transform_b_;  // 1 x h
  nn::Parameter local_w_;      // h x h
  nn::Parameter global_w_;     // s_a x h
  nn::Parameter global_v_;     // s_a x 1
  nn::Parameter logit_b_;      // 1 x 1
  RowVector input_mean_;       // 1 x m
  RowVector input_scale_;      // 1 x m, divides the centered input
};

}  // namespace ralm::lookalike
