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


#include "ralm/serving/service.hpp"

#include <algorithm>

#include "ralm/errors.hpp"

namespace ralm::serving {

ServingConfig ServingConfig::from(const io::KeyValueConfig& config) {
  ServingConfig c;
  const std::int64_t cap = config.get_int("seed_cap", static_cast<std::int64_t>(c.seed_cap));
  const std::int64_t floor =
      config.get_int("confidence_floor", static_cast<std::int64_t>(c.confidence_floor));
  if (cap < 1) throw ConfigError("seed_cap must be >= 1");
  if (floor < 0) throw ConfigError("confidence_floor must be >= 0");
  c.seed_cap = static_cast<std::size_t>(cap);
  c.confidence_floor = static_cast<std::size_t>(floor);
  c.cluster_k = static_cast<int>(config.get_int("cluster_k", c.cluster_k));
  c.recluster_cadence_ms = config.get_int("recluster_cadence_ms", c.recluster_cadence_ms);
  c.weights.alpha = config.get_double("alpha", c.weights.alpha);
  c.weights.beta = config.get_double("beta", c.weights.beta);
  c.kmeans.max_iters = static_cast<int>(config.get_int("kmeans_max_iters", c.kmeans.max_iters));
  c.kmeans.seed = static_cast<std::uint64_t>(config.get_int("seed", 1));
  c.embeddings_path = config.get_string("lookalike_embeddings", c.embeddings_path);
  c.model_path = config.get_string("lookalike_model", c.model_path);
  c.validate();
  return c;
}

void ServingConfig::validate() const {
  if (seed_cap < 1) throw ConfigError("seed_cap must be >= 1");
  if (cluster_k < 1) throw ConfigError("cluster_k must be >= 1");
  if (recluster_cadence_ms < 0) throw ConfigError("recluster_cadence_ms must be >= 0");
  if (!(weights.alpha >= 0) || !(weights.beta >= 0)) throw ConfigError("alpha and beta must be >= 0");
  if (kmeans.max_iters < 1) throw ConfigError("kmeans_max_iters must be >= 1");
}

SeedService::SeedService(ServingConfig config, std::shared_ptr<const lookalike::LookalikeModel> model,
                         std::shared_ptr<const io::EmbeddingStore> embeddings)
    : config_(std::move(config)),
      model_(std::move(model)),
      embeddings_(std::move(embeddings)),
      snapshot_(std::make_shared<const ServingSnapshot>()) {
  config_.validate();
  if (!model_ || !embeddings_) throw ArgumentError("SeedService: model and embeddings are required");
  if (embeddings_->space() != io::EmbeddingSpace::kLookalike) {
    throw SchemaError("SeedService: embedding store is not in look-alike space");
  }
  if (static_cast<int>(embeddings_->dim()) != model_->config().lookalike_dim) {
    throw DimensionError("SeedService: embeddings have dim " + std::to_string(embeddings_->dim()) +
                         ", model expects " + std::to_string(model_->config().lookalike_dim));
  }
}

bool SeedService::ingest_click(const ClickEvent& event) {
  std::lock_guard lock(writer_mu_);
  if (event.user_id.empty() || event.candidate_id.empty()) {
    ++counters_.events_rejected;
    return false;
  }
  auto it = records_.try_emplace(event.candidate_id, config_.seed_cap).first;
  it->second.seeds.insert(event.user_id);
  it->second.dirty = true;
  ++counters_.events_accepted;
  return true;
}

std::size_t SeedService::recluster_tick(std::int64_t now_ms) {
  std::lock_guard tick(tick_mu_);
  struct Job {
    std::string id;
    std::vector<std::string> members;
  };
  std::vector<Job> jobs;
  {
    std::lock_guard lock(writer_mu_);
    ++counters_.ticks;
    for (auto& [id, rec] : records_) {
      if (!rec.dirty) continue;
      if (rec.last_clustered_ms && now_ms - *rec.last_clustered_ms < config_.recluster_cadence_ms) {
        continue;
      }
      jobs.push_back({id, rec.seeds.members()});
      rec.dirty = false;
      rec.last_clustered_ms = now_ms;
    }
  }
  if (jobs.empty()) return 0;

  const cluster::EmbeddingLookup lookup = [this](const std::string& id) {
    return embeddings_->lookup(id);
  };
  auto next = std::make_shared<ServingSnapshot>(*snapshot());
  std::size_t done = 0, skipped = 0;
  for (const Job& job : jobs) {
    auto entry = std::make_shared<CandidateEntry>();
    try {
      entry->seeds = cluster::seeds_to_representation(job.id, job.members, lookup, config_.cluster_k,
                                                      now_ms, config_.kmeans);
    } catch (const NoSeedsError&) {
      ++skipped;
      continue;
    }
    entry->global = model_->global_embedding(entry->seeds.centroids);
    entry->seed_count = job.members.size();
    entry->low_confidence = job.members.size() < config_.confidence_floor;
    next->candidates[job.id] = std::move(entry);
    ++done;
  }
  {
    std::lock_guard lock(writer_mu_);
    counters_.reclustered += done;
    counters_.recluster_skipped += skipped;
  }
  if (done > 0) {
    ++next->version;
    publish(std::move(next));
  }
  return done;
}

void SeedService::publish(std::shared_ptr<const ServingSnapshot> next) {
  std::lock_guard lock(snapshot_mu_);
  snapshot_.swap(next);
}

std::shared_ptr<const ServingSnapshot> SeedService::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

ScoreResponse SeedService::score(const std::string& user_id, std::size_t top_n,
                                 const std::vector<std::string>& filter) const {
  auto user = embeddings_->lookup(user_id);
  if (!user) throw UserNotFoundError("user " + user_id + " has no look-alike embedding");
  return score(*user, top_n, filter);
}

ScoreResponse SeedService::score(const RowVector& user, std::size_t top_n,
                                 const std::vector<std::string>& filter) const {
  if (!(user.norm() > 0)) throw DegenerateVectorError("serving_score: zero-norm user embedding");
  if (user.size() != model_->config().lookalike_dim) {
    throw DimensionError("score: user embedding has dim " + std::to_string(user.size()));
  }
  ++score_requests_;
  const std::shared_ptr<const ServingSnapshot> snap = snapshot();
  ScoreResponse out;
  out.snapshot_version = snap->version;
  auto score_one = [&](const std::string& id, const CandidateEntry& e) {
    const RowVector local = model_->local_embedding(e.seeds.centroids, user);
    const auto s = lookalike::combine_similarities(user, e.global, local, config_.weights);
    out.results.push_back({id, s.score, s.global_sim, s.local_sim, snap->version, e.low_confidence});
  };
  if (filter.empty()) {
    out.results.reserve(snap->candidates.size());
    for (const auto& [id, e] : snap->candidates) score_one(id, *e);
  } else {
    std::vector<std::string> ids = filter;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (const auto& id : ids) {
      auto it = snap->candidates.find(id);
      if (it == snap->candidates.end()) {
        out.skipped.push_back(id);
      } else {
        score_one(id, *it->second);
      }
    }
  }
  // Results arrive in candidate_id order, so a stable sort breaks ties by id.
  std::stable_sort(out.results.begin(), out.results.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) { return a.score > b.score; });
  if (top_n > 0 && out.results.size() > top_n) out.results.resize(top_n);
  return out;
}

std::optional<CandidateInfo> SeedService::candidate_info(const std::string& candidate_id) const {
  CandidateInfo info;
  info.candidate_id = candidate_id;
  {
    std::lock_guard lock(writer_mu_);
    auto it = records_.find(candidate_id);
    if (it == records_.end()) return std::nullopt;
    info.seed_count = it->second.seeds.size();
    info.last_clustered_ms = it->second.last_clustered_ms;
  }
  const auto snap = snapshot();
  if (auto it = snap->candidates.find(candidate_id); it != snap->candidates.end()) {
    info.k = it->second->seeds.k;
  }
  info.low_confidence = info.seed_count < config_.confidence_floor;
  return info;
}

std::vector<std::string> SeedService::seed_members(const std::string& candidate_id) const {
  std::lock_guard lock(writer_mu_);
  auto it = records_.find(candidate_id);
  if (it == records_.end()) return {};
  return it->second.seeds.members();
}

std::vector<std::string> SeedService::candidate_ids() const {
  std::lock_guard lock(writer_mu_);
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [id, rec] : records_) out.push_back(id);
  return out;
}

ServiceStats SeedService::stats() const {
  ServiceStats s;
  {
    std::lock_guard lock(writer_mu_);
    s = counters_;
    s.candidates = records_.size();
    for (const auto& [id, rec] : records_) s.total_seeds += rec.seeds.size();
  }
  s.score_requests = score_requests_.load();
  s.snapshot_version = snapshot()->version;
  return s;
}

}  // namespace ralm::serving
