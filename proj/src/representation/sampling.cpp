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

#include "ralm/representation/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ralm/errors.hpp"

namespace ralm::rep {

std::vector<double> rank_sampling_probabilities(std::size_t max_rank) {
  if (max_rank < 1) throw ArgumentError("negative sampling: max rank D must be >= 1");
  const double norm = std::log(static_cast<double>(max_rank) + 1.0);
  std::vector<double> p(max_rank);
  for (std::size_t k = 0; k < max_rank; ++k) {
    // log(k+2) - log(k+1) == log1p(1/(k+1)), without cancellation.
    p[k] = std::log1p(1.0 / (static_cast<double>(k) + 1.0)) / norm;
  }
  return p;
}

std::vector<double> negative_sampling_distribution(std::span<const std::size_t> item_ranks,
                                                   std::size_t max_rank) {
  const std::vector<double> by_rank = rank_sampling_probabilities(max_rank);
  std::vector<double> out;
  out.reserve(item_ranks.size());
  for (std::size_t r : item_ranks) {
    if (r >= max_rank) throw ArgumentError("negative sampling: rank outside [0, D)");
    out.push_back(by_rank[r]);
  }
  return out;
}

std::vector<std::size_t> frequency_ranks(std::span<const std::size_t> counts) {
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  std::vector<std::size_t> ranks(counts.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = r;
  return ranks;
}

NegativeSampler::NegativeSampler(std::span<const std::size_t> item_counts) {
  if (item_counts.empty()) throw ArgumentError("NegativeSampler: no items");
  const auto ranks = frequency_ranks(item_counts);
  probabilities_ = negative_sampling_distribution(ranks, item_counts.size());
  dist_ = std::discrete_distribution<int>(probabilities_.begin(), probabilities_.end());
}

std::vector<TrainingExample> build_training_examples(
    const std::vector<std::vector<TimedItem>>& positives_by_user, NegativeSampler& sampler,
    const BatchLimits& limits, std::mt19937_64& rng) {
  std::vector<TrainingExample> out;
  const std::size_t items = sampler.item_count();
  for (std::size_t u = 0; u < positives_by_user.size(); ++u) {
    std::vector<TimedItem> pos = positives_by_user[u];
    if (pos.empty()) continue;
    // Latest first; equal timestamps ordered by item index.
    std::sort(pos.begin(), pos.end(), [](const TimedItem& a, const TimedItem& b) {
      return a.ts != b.ts ? a.ts > b.ts : a.item < b.item;
    });
    std::unordered_set<int> all;
    std::vector<TimedItem> kept;
    for (const TimedItem& t : pos) {
      if (all.insert(t.item).second) kept.push_back(t);
    }
    if (all.size() >= items) continue;
    if (kept.size() > limits.max_positives_per_user) kept.resize(limits.max_positives_per_user);
    for (const TimedItem& t : kept) {
      TrainingExample ex;
      ex.user = u;
      ex.positive = t.item;
      ex.negatives.reserve(limits.negatives_per_positive);
      while (ex.negatives.size() < limits.negatives_per_positive) {
        const int j = sampler.draw(rng);
        if (!all.count(j)) ex.negatives.push_back(j);
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<std::vector<TrainingExample>> build_training_batches(
    std::vector<TrainingExample> examples, std::size_t batch_size, std::mt19937_64& rng) {
  if (batch_size == 0) throw ArgumentError("batch size must be >= 1");
  std::shuffle(examples.begin(), examples.end(), rng);
  std::vector<std::vector<TrainingExample>> batches;
  for (std::size_t i = 0; i < examples.size(); i += batch_size) {
    const std::size_t end = std::min(examples.size(), i + batch_size);
    batches.emplace_back(std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(i)),
                         std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(end)));
  }
  return batches;
}

}  // namespace ralm::rep
