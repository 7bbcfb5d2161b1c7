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

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ralm::rep {

/// Probability of drawing the item at frequency rank k (0 = most frequent)
/// as a negative: (log(k+2) - log(k+1)) / log(D+1). The D values telescope
/// to exactly 1.
std::vector<double> rank_sampling_probabilities(std::size_t max_rank);

/// Per-item probabilities given each item's rank in [0, max_rank).
std::vector<double> negative_sampling_distribution(std::span<const std::size_t> item_ranks,
                                                   std::size_t max_rank);

/// Dense frequency ranks: the most frequent item gets rank 0, ties go to the
/// lower index.
std::vector<std::size_t> frequency_ranks(std::span<const std::size_t> counts);

/// Draws item indices from the rank-based distribution.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::span<const std::size_t> item_counts);

  int draw(std::mt19937_64& rng) { return dist_(rng); }
  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t item_count() const { return probabilities_.size(); }

 private:
  std::vector<double> probabilities_;
  std::discrete_distribution<int> dist_;
};

struct TimedItem {
  int item = 0;
  std::int64_t ts = 0;
};

struct BatchLimits {
  std::size_t max_positives_per_user = 50;
  std::size_t negatives_per_positive = 10;
  std::size_t batch_size = 256;
};

struct TrainingExample {
  std::size_t user = 0;
  int positive = 0;
  std::vector<int> negatives;
};

/// Expands per-user positive histories into (user, positive, negatives)
/// examples. Duplicates of one item keep the latest timestamp; only the most
/// recent `max_positives_per_user` survive. Negatives are redrawn whenever
/// they hit any of the user's positives. Users without positives, or whose
/// positives cover every item, produce nothing.
std::vector<TrainingExample> build_training_examples(
    const std::vector<std::vector<TimedItem>>& positives_by_user, NegativeSampler& sampler,
    const BatchLimits& limits, std::mt19937_64& rng);

/// Shuffles and cuts examples into batches of at most `batch_size`.
std::vector<std::vector<TrainingExample>> build_training_batches(
    std::vector<TrainingExample> examples, std::size_t batch_size, std::mt19937_64& rng);

}  // namespace ralm::rep
