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

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ralm/clustering/kmeans.hpp"
#include "ralm/io/config.hpp"
#include "ralm/io/embedding_store.hpp"
#include "ralm/lookalike/model.hpp"
#include "ralm/serving/seed_set.hpp"

namespace ralm::serving {

struct ServingConfig {
  std::size_t seed_cap = 10000;
  int cluster_k = 20;
  std::int64_t recluster_cadence_ms = 300000;
  lookalike::CombineWeights weights;
  /// Candidates with fewer seeds are still scored but flagged.
  std::size_t confidence_floor = 5;
  cluster::KMeansOptions kmeans;
  std::string embeddings_path;
  std::string model_path;

  /// Reads seed_cap, cluster_k, recluster_cadence_ms, alpha, beta,
  /// confidence_floor, lookalike_embeddings and lookalike_model.
  static ServingConfig from(const io::KeyValueConfig& config);
  void validate() const;
};

struct ClickEvent {
  std::string user_id;
  std::string candidate_id;
  std::int64_t ts = 0;  // seconds
};

/// One published candidate: centroids plus the user-independent global
/// pooling, computed once at clustering time.
struct CandidateEntry {
  cluster::SeedsRepresentation seeds;
  RowVector global;
  std::size_t seed_count = 0;
  bool low_confidence = false;
};

/// Immutable once published.
struct ServingSnapshot {
  std::uint64_t version = 0;
  std::map<std::string, std::shared_ptr<const CandidateEntry>> candidates;
};

struct ScoredCandidate {
  std::string candidate_id;
  double score = 0.0;
  double global_sim = 0.0;
  double local_sim = 0.0;
  std::uint64_t seeds_version = 0;
  bool low_confidence = false;
};

struct ScoreResponse {
  std::vector<ScoredCandidate> results;
  /// Requested candidates that have no seeds representation yet.
  std::vector<std::string> skipped;
  std::uint64_t snapshot_version = 0;
};

struct CandidateInfo {
  std::string candidate_id;
  std::size_t seed_count = 0;
  std::optional<std::int64_t> last_clustered_ms;
  int k = 0;
  bool low_confidence = true;
};

struct ServiceStats {
  std::uint64_t events_accepted = 0;
  std::uint64_t events_rejected = 0;
  std::uint64_t ticks = 0;
  std::uint64_t reclustered = 0;
  std::uint64_t recluster_skipped = 0;
  std::uint64_t score_requests = 0;
  std::uint64_t snapshot_version = 0;
  std::size_t candidates = 0;
  std::size_t total_seeds = 0;
};

/// Seed stores, re-clustering and scoring. Ingestion and ticks form the
/// single writer path; any number of threads may call score() and
/// snapshot() concurrently with it.
class SeedService {
 public:
  SeedService(ServingConfig config, std::shared_ptr<const lookalike::LookalikeModel> model,
              std::shared_ptr<const io::EmbeddingStore> embeddings);

  /// False (and counted) for events with an empty user or candidate id.
  bool ingest_click(const ClickEvent& event);
  /// Re-clusters every candidate whose seeds changed and whose last
  /// clustering is at least one cadence old, then publishes a new snapshot
  /// if anything changed. Returns the number of candidates re-clustered.
  std::size_t recluster_tick(std::int64_t now_ms);

  std::shared_ptr<const ServingSnapshot> snapshot() const;
  /// top_n == 0 returns every scored candidate. An empty filter means all
  /// published candidates.
  ScoreResponse score(const std::string& user_id, std::size_t top_n,
                      const std::vector<std::string>& filter = {}) const;
  ScoreResponse score(const RowVector& user, std::size_t top_n,
                      const std::vector<std::string>& filter = {}) const;

  std::optional<CandidateInfo> candidate_info(const std::string& candidate_id) const;
  /// Current seed members, oldest first.
  std::vector<std::string> seed_members(const std::string& candidate_id) const;
  std::vector<std::string> candidate_ids() const;
  ServiceStats stats() const;

  const ServingConfig& config() const { return config_; }
  const io::EmbeddingStore& embeddings() const { return *embeddings_; }

 private:
  struct Record {
    explicit Record(std::size_t cap) : seeds(cap) {}
    SeedSet seeds;
    bool dirty = false;
    std::optional<std::int64_t> last_clustered_ms;
  };

  void publish(std::shared_ptr<const ServingSnapshot> next);

  ServingConfig config_;
  std::shared_ptr<const lookalike::LookalikeModel> model_;
  std::shared_ptr<const io::EmbeddingStore> embeddings_;

  mutable std::mutex writer_mu_;
  std::mutex tick_mu_;
  std::map<std::string, Record> records_;
  ServiceStats counters_;

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const ServingSnapshot> snapshot_;
  mutable std::atomic<std::uint64_t> score_requests_{0};
};

}  // namespace ralm::serving
