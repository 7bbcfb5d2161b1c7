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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ralm/io/embedding_store.hpp"
#include "ralm/io/jsonl.hpp"
#include "ralm/numeric/adam.hpp"
#include "ralm/representation/sampling.hpp"
#include "ralm/representation/tower.hpp"

namespace ralm::rep {

struct RepresentationConfig {
  TowerConfig tower;
  nn::AdamConfig adam;
  BatchLimits limits;
  int epochs = 5;
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
  /// Extra test-set evaluations every this many batches (0: epoch ends only).
  std::size_t eval_every_batches = 0;
};

struct Checkpoint {
  std::size_t batches_seen = 0;
  double test_loss = 0.0;
  double test_auc = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  std::size_t batches_seen = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_auc = 0.0;
};

struct RepresentationResult {
  UserTower tower;
  nn::Parameter item_embeddings;
  std::vector<std::string> item_ids;
  /// Mean sampled-softmax loss of the first epoch's examples before any update.
  double initial_train_loss = 0.0;
  std::vector<EpochMetrics> epochs;
  /// Test evaluations, starting with the untrained model at batch 0.
  std::vector<Checkpoint> checkpoints;
  io::EmbeddingStore embeddings{io::EmbeddingSpace::kUniversal, 1};
};

/// -log( exp(x_i.u) / sum_{j in {i} ∪ J} exp(x_j.u) ) for one user embedding,
/// its positive item row and sampled negative rows.
template <typename DU, typename DP, typename DN>
double representation_loss(const Eigen::MatrixBase<DU>& user, const Eigen::MatrixBase<DP>& positive,
                           const Eigen::MatrixBase<DN>& negatives) {
  Vector logits(negatives.rows() + 1);
  logits(0) = user.reshaped().dot(positive.reshaped());
  for (Eigen::Index j = 0; j < negatives.rows(); ++j) {
    logits(j + 1) = negatives.row(j).dot(user.reshaped().transpose());
  }
  const double shift = logits.maxCoeff();
  return shift + std::log((logits.array() - shift).exp().sum()) - logits(0);
}

/// Taped version of representation_loss: user is 1 x m, rows of `items`
/// are gathered as [positive, negatives...].
nn::Var representation_loss(const nn::Var& user, const nn::Var& items, int positive,
                            std::span<const int> negatives);

/// Mean of representation_loss over a batch; row i of `users` belongs to
/// examples[i].
nn::Var representation_batch_loss(const nn::Var& users, const nn::Var& items,
                                  std::span<const TrainingExample> examples);

/// Phase-1 training: minibatch Adam over sampled-softmax loss, with held-out
/// users for test loss / AUC. Throws TrainingDivergenceError on a
/// non-finite loss.
RepresentationResult train_representation(const io::Dataset& dataset,
                                          const RepresentationConfig& config,
                                          const std::function<void(const EpochMetrics&)>& on_epoch = {});

inline constexpr const char* kRepresentationMagic = "RALMREP";

/// Tower parameters plus the item embedding table, as a parameter archive.
void save_representation(const RepresentationResult& result, const std::string& path);

/// Writes epoch,train_loss,test_loss,test_auc rows.
std::string metrics_csv(const std::vector<EpochMetrics>& epochs);

}  // namespace ralm::rep
