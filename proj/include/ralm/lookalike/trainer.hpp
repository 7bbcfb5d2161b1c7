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

#include "ralm/clustering/kmeans.hpp"
#include "ralm/io/embedding_store.hpp"
#include "ralm/lookalike/campaign.hpp"
#include "ralm/lookalike/model.hpp"
#include "ralm/numeric/adam.hpp"

namespace ralm::lookalike {

struct LookalikeTrainConfig {
  LookalikeConfig model;
  nn::AdamConfig adam;
  int epochs = 5;
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;
  int kmeans_max_iters = 100;
  std::vector<std::size_t> prec_k = {10, 50};
  /// prec@K after every epoch; otherwise only after the last one.
  bool prec_every_epoch = true;
};

struct LookalikeEpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_auc = 0.0;
  std::vector<double> prec_at_k;         // aligned with LookalikeTrainConfig::prec_k; empty if skipped
  std::vector<double> random_prec_at_k;  // same K, uniformly random ranking
};

struct LookalikeResult {
  LookalikeModel model;
  /// Loss over the first epoch's examples before any update.
  double initial_train_loss = 0.0;
  std::vector<LookalikeEpochMetrics> epochs;
  /// Per candidate, clustered with the final transform.
  std::vector<DenseMatrix> centroids;
  io::EmbeddingStore embeddings{io::EmbeddingSpace::kLookalike, 1};
};

struct HeldOutMetrics {
  double loss = 0.0;
  double auc = 0.0;
  std::vector<double> prec_at_k;
  std::vector<double> random_prec_at_k;
};

/// Clusters each candidate's transformed seed rows.
std::vector<cluster::KMeansModel> cluster_candidates(const Campaign& campaign, const DenseMatrix& transformed,
                                                     int k, int max_iters, std::uint64_t seed);

std::vector<DenseMatrix> centroids_of(const std::vector<cluster::KMeansModel>& models);

/// For every test user (campaign order), candidate indices ordered by
/// decreasing serving score; ties keep index order.
std::vector<std::vector<int>> rank_candidates(const LookalikeModel& model, const Campaign& campaign,
                                              const DenseMatrix& transformed,
                                              const std::vector<DenseMatrix>& centroids);

/// Test loss and AUC over campaign.test_examples, plus prec@K for every K
/// in `prec_k` ranking all candidates by serving score for each test user.

HeldOutMetrics evaluate_campaign(LookalikeModel& model, const Campaign& campaign,
                                 const DenseMatrix& transformed, const std::vector<DenseMatrix>& centroids,
                                 const std::vector<std::size_t>& prec_k);

/// Iterative Phase-2 training. Each epoch transforms every user, reclusters
/// every candidate's seeds and then runs one pass of Adam. Cluster
/// membership is frozen within the epoch; centroids are recomputed on the
/// tape as member means so the transform is trained through both towers.
/// Throws TrainingDivergenceError on a non-finite loss.
LookalikeResult train_lookalike(const Campaign& campaign, const LookalikeTrainConfig& config,
                                const std::function<void(const LookalikeEpochMetrics&)>& on_epoch = {});

/// epoch,train_loss,test_loss,test_auc,prec@K... rows.
std::string lookalike_metrics_csv(const std::vector<LookalikeEpochMetrics>& epochs,
                                  const std::vector<std::size_t>& prec_k);

}  // namespace ralm::lookalike
