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
#include <string>
#include <vector>

#include "ralm/io/embedding_store.hpp"
#include "ralm/io/jsonl.hpp"

namespace ralm::lookalike {

struct CampaignOptions {
  /// Fraction of users held out for testing (same hash split as Phase 1).
  double test_fraction = 0.2;
  /// Fraction of the remaining users whose clicks form candidate seeds.
  double seed_fraction = 0.5;
  /// Candidates need at least this many seed clickers.
  std::size_t min_seeds = 5;
  int negative_ratio = 10;
  std::uint64_t seed = 1;
};

/// Phase-2 data in user-index space. Users are split three ways: seed-pool
/// users supply the seeds, target-pool users are training audience members,
/// test users are scored only at evaluation.
struct Campaign {
  std::vector<std::string> user_ids;
  DenseMatrix universal;  // one row per user, m columns
  std::vector<std::string> candidate_ids;
  std::vector<std::vector<int>> seeds;            // per candidate
  std::vector<std::vector<int>> train_positives;  // per candidate, target-pool clickers
  std::vector<std::vector<int>> test_positives;   // per candidate, test-user clickers
  std::vector<int> target_pool;
  std::vector<int> test_users;
  int negative_ratio = 10;

  struct Example {
    int candidate = 0;
    int user = 0;
    double label = 0.0;
  };
  /// Fixed test examples: each test positive plus negative_ratio test users
  /// who did not click that candidate.
  std::vector<Example> test_examples;
};

/// Builds a campaign from clicks (is_click == 1) of users present in the
/// universal store. Throws SchemaError on a store from the wrong space.
Campaign build_campaign(const io::Dataset& dataset, const io::EmbeddingStore& universal,
                        const CampaignOptions& options);

}  // namespace ralm::lookalike
