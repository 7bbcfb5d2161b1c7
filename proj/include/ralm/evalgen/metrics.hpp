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

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ralm/errors.hpp"
#include "ralm/io/jsonl.hpp"

namespace ralm::eval {

struct EvalSample {
  std::string user_id;
  std::string item_id;
  int label = 0;
  double score = 0.0;
};

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Throws UndefinedMetricError unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);
double auc(std::span<const EvalSample> samples);

/// Mean over users with a non-empty read set of
/// |top-K recommendations ∩ read set| / min(K, |read set|).
/// `recommendations[i]` is ordered by decreasing score.
template <typename Id>
double prec_at_k(const std::vector<std::vector<Id>>& recommendations,
                 const std::vector<std::vector<Id>>& read_sets, std::size_t k) {
  if (recommendations.size() != read_sets.size()) {
    throw ArgumentError("prec_at_k: one recommendation list per read set required");
  }
  if (k == 0) throw ArgumentError("prec_at_k: K must be >= 1");
  double total = 0.0;
  std::size_t users = 0;
  for (std::size_t i = 0; i < read_sets.size(); ++i) {
    std::unordered_set<Id> read(read_sets[i].begin(), read_sets[i].end());
    if (read.empty()) continue;
    const std::size_t top = std::min(k, recommendations[i].size());
    std::unordered_set<Id> seen;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < top; ++r) {
      const Id& id = recommendations[i][r];
      if (seen.insert(id).second && read.count(id)) ++hits;
    }
    total += static_cast<double>(hits) / static_cast<double>(std::min(k, read.size()));
    ++users;
  }
  if (users == 0) throw UndefinedMetricError("prec_at_k: no user has a non-empty read set");
  return total / static_cast<double>(users);
}

/// Expected prec@K when each user's ranking over `candidate_count` items is a
/// uniformly random permutation.
double random_prec_at_k(std::span<const std::size_t> read_set_sizes, std::size_t candidate_count,
                        std::size_t k);

struct ReadEvent {
  std::string user_id;
  std::string item_id;
  std::int64_t ts = 0;  // unix seconds
};

struct DiversityReport {
  double categories_per_user_day = 0.0;
  double tags_per_user_day = 0.0;
  std::size_t user_days = 0;
};

/// Distinct categories and tags read per user per UTC day, averaged over all
/// (user, day) pairs with at least one read. Items missing from the taxonomy
/// contribute nothing.
DiversityReport diversity(std::span<const ReadEvent> reads, std::span<const io::ItemRecord> taxonomy);

/// Gini coefficient of a click distribution, from the sorted cumulative-share
/// form. Throws UndefinedMetricError for empty or all-zero input.
double gini(std::span<const double> counts);

/// Deterministic, order-independent hold-out assignment of a user id.
bool is_holdout_user(const std::string& user_id, double fraction, std::uint64_t seed);

}  // namespace ralm::eval
