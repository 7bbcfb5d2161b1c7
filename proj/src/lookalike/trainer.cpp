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

#include "ralm/lookalike/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ralm/evalgen/metrics.hpp"

namespace ralm::lookalike {

namespace {

using Example = Campaign::Example;

DenseMatrix gather(const DenseMatrix& m, std::span<const int> rows) {
  DenseMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

/// Groups example indices by candidate, keeping first-seen order.
std::map<int, std::vector<std::size_t>> by_candidate(std::span<const Example> examples) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) groups[examples[i].candidate].push_back(i);
  return groups;
}

/// Logits of `examples` with centroids held fixed, without recording.
Vector dense_logits(LookalikeModel& model, const DenseMatrix& transformed,
                    const std::vector<DenseMatrix>& centroids, std::span<const Example> examples) {
  Vector out(static_cast<Eigen::Index>(examples.size()));
  for (const auto& [cand, idx] : by_candidate(examples)) {
    std::vector<int> users;
    for (std::size_t i : idx) users.push_back(examples[i].user);
    nn::Tape tape(false);
    nn::Var seeds = tape.constant(centroids[static_cast<std::size_t>(cand)]);
    nn::Var u = tape.constant(gather(transformed, users));
    const DenseMatrix z = model.batch_logits(tape, seeds, u).value();
    for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Eigen::Index>(idx[j])) = z(static_cast<Eigen::Index>(j), 0);
  }
  return out;
}

double mean_bce(const Vector& logits, std::span<const Example> examples) {
  std::vector<double> z(logits.data(), logits.data() + logits.size());
  std::vector<int> y;
  for (const auto& e : examples) y.push_back(e.label > 0.5 ? 1 : 0);
  return lookalike_loss_from_logits(z, y);
}

/// k x n matrix whose product with the member rows gives the cluster means.
DenseMatrix averaging_matrix(const cluster::KMeansModel& m) {
  DenseMatrix a = DenseMatrix::Zero(m.k, static_cast<Eigen::Index>(m.assignments.size()));
  std::vector<double> count(static_cast<std::size_t>(m.k), 0.0);
  for (int j : m.assignments) count[static_cast<std::size_t>(j)] += 1.0;
  for (std::size_t i = 0; i < m.assignments.size(); ++i) {
    const int j = m.assignments[i];
    a(j, static_cast<Eigen::Index>(i)) = 1.0 / count[static_cast<std::size_t>(j)];
  }
  return a;
}

/// One epoch of examples. Each candidate's examples are shuffled and cut
/// into pieces of a quarter batch; the pieces are shuffled, so a batch
/// touches only a handful of candidates and their seed clusters.
std::vector<Example> sample_epoch(const Campaign& c, std::size_t batch_size, std::mt19937_64& rng) {
  std::vector<std::vector<Example>> pieces;
  if (c.target_pool.empty()) return {};
  const std::size_t piece = std::max<std::size_t>(1, batch_size / 4);
  std::uniform_int_distribution<std::size_t> pick(0, c.target_pool.size() - 1);
  for (std::size_t cand = 0; cand < c.candidate_ids.size(); ++cand) {
    const auto& pos = c.train_positives[cand];
    if (pos.size() >= c.target_pool.size()) continue;
    const std::set<int> clicked(pos.begin(), pos.end());
    std::vector<Example> ex;
    for (int u : pos) {
      ex.push_back({static_cast<int>(cand), u, 1.0});
      for (int j = 0; j < c.negative_ratio; ++j) {
        int v;
        do {
          v = c.target_pool[pick(rng)];
        } while (clicked.count(v));
        ex.push_back({static_cast<int>(cand), v, 0.0});
      }
    }
    std::shuffle(ex.begin(), ex.end(), rng);
    for (std::size_t i = 0; i < ex.size(); i += piece) {
      pieces.emplace_back(ex.begin() + static_cast<std::ptrdiff_t>(i),
                          ex.begin() + static_cast<std::ptrdiff_t>(std::min(ex.size(), i + piece)));
    }
  }
  std::shuffle(pieces.begin(), pieces.end(), rng);
  std::vector<Example> out;
  for (const auto& p : pieces) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

std::vector<cluster::KMeansModel> cluster_candidates(const Campaign& c, const DenseMatrix& transformed, int k,
                                                     int max_iters, std::uint64_t seed) {
  std::vector<cluster::KMeansModel> out;
  out.reserve(c.seeds.size());
  for (std::size_t cand = 0; cand < c.seeds.size(); ++cand) {
    cluster::KMeansOptions opt;
    opt.max_iters = max_iters;
    opt.seed = seed + 0x9e3779b97f4a7c15ULL * (cand + 1);
    out.push_back(cluster::kmeans_fit(gather(transformed, c.seeds[cand]), k, opt));
  }
  return out;
}

std::vector<DenseMatrix> centroids_of(const std::vector<cluster::KMeansModel>& models) {
  std::vector<DenseMatrix> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(m.centroids);
  return out;
}

std::vector<std::vector<int>> rank_candidates(const LookalikeModel& model, const Campaign& c,
                                              const DenseMatrix& transformed,
                                              const std::vector<DenseMatrix>& centroids) {
  const DenseMatrix test_rows = gather(transformed, c.test_users);
  DenseMatrix scores(test_rows.rows(), static_cast<Eigen::Index>(c.candidate_ids.size()));
  for (std::size_t cand = 0; cand < c.candidate_ids.size(); ++cand) {
    scores.col(static_cast<Eigen::Index>(cand)) = model.score_users(test_rows, centroids[cand]);
  }
  std::vector<std::vector<int>> recs(c.test_users.size());
  for (std::size_t i = 0; i < c.test_users.size(); ++i) {
    auto& r = recs[i];
    r.resize(c.candidate_ids.size());
    std::iota(r.begin(), r.end(), 0);
    const auto row = scores.row(static_cast<Eigen::Index>(i));
    std::stable_sort(r.begin(), r.end(), [&](int a, int b) { return row(a) > row(b); });
  }
  return recs;
}

HeldOutMetrics evaluate_campaign(LookalikeModel& model, const Campaign& c, const DenseMatrix& transformed,
                                 const std::vector<DenseMatrix>& centroids,
                                 const std::vector<std::size_t>& prec_k) {
  HeldOutMetrics m;
  if (c.test_examples.empty()) throw UndefinedMetricError("evaluate_campaign: empty test set");
  const Vector z = dense_logits(model, transformed, centroids, c.test_examples);
  m.loss = mean_bce(z, c.test_examples);
  std::vector<int> labels;
  for (const auto& e : c.test_examples) labels.push_back(e.label > 0.5 ? 1 : 0);
  m.auc = eval::auc(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), labels);
  if (prec_k.empty()) return m;

  std::vector<std::vector<int>> read(c.test_users.size());
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < c.test_users.size(); ++i) slot[c.test_users[i]] = i;
  for (std::size_t cand = 0; cand < c.candidate_ids.size(); ++cand) {
    for (int u : c.test_positives[cand]) read[slot.at(u)].push_back(static_cast<int>(cand));
  }
  const auto recs = rank_candidates(model, c, transformed, centroids);
  std::vector<std::size_t> read_sizes;
  for (const auto& r : read) {
    if (!r.empty()) read_sizes.push_back(r.size());
  }
  for (std::size_t k : prec_k) {
    m.prec_at_k.push_back(eval::prec_at_k(recs, read, k));
    m.random_prec_at_k.push_back(eval::random_prec_at_k(read_sizes, c.candidate_ids.size(), k));
  }
  return m;
}

LookalikeResult train_lookalike(const Campaign& c, const LookalikeTrainConfig& cfg,
                                const std::function<void(const LookalikeEpochMetrics&)>& on_epoch) {
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (c.candidate_ids.empty()) throw NoSeedsError("train_lookalike: campaign has no candidates");
  if (c.universal.cols() != cfg.model.universal_dim) {
    throw DimensionError("train_lookalike: universal embeddings have " + std::to_string(c.universal.cols()) +
                         " columns, model expects " + std::to_string(cfg.model.universal_dim));
  }
  std::mt19937_64 rng(cfg.seed);
  LookalikeResult result{LookalikeModel(cfg.model, rng), 0.0, {}, {}, io::EmbeddingStore(io::EmbeddingSpace::kLookalike, 1)};
  LookalikeModel& model = result.model;
  model.fit_input_normalization(c.universal);
  const int k = cfg.model.cluster_k;

  DenseMatrix transformed = model.transform(c.universal);
  std::vector<cluster::KMeansModel> clusters = cluster_candidates(c, transformed, k, cfg.kmeans_max_iters, cfg.seed);
  std::vector<DenseMatrix> centroids = centroids_of(clusters);
  std::vector<DenseMatrix> seed_rows;
  for (const auto& s : c.seeds) seed_rows.push_back(gather(c.universal, s));
  std::vector<nn::Parameter*> params;
  for (auto& np : model.parameters()) params.push_back(np.parameter);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<DenseMatrix> averaging;
    for (const auto& m : clusters) averaging.push_back(averaging_matrix(m));
    const std::vector<Example> examples = sample_epoch(c, cfg.batch_size, rng);
    if (examples.empty()) throw UndefinedMetricError("train_lookalike: no training examples");
    if (epoch == 1) {
      // Start from the base rate: offset = logit(positive share) - mean raw logit.
      const Vector z = dense_logits(model, transformed, centroids, examples);
      double positives = 0.0;
      for (const auto& e : examples) positives += e.label;
      const double rate = std::clamp(positives / static_cast<double>(examples.size()), 1e-6, 1.0 - 1e-6);
      model.logit_bias().value(0, 0) += std::log(rate / (1.0 - rate)) - z.mean();
      result.initial_train_loss = mean_bce(dense_logits(model, transformed, centroids, examples), examples);
    }

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < examples.size(); start += cfg.batch_size) {
      const std::span<const Example> batch(examples.data() + start,
                                           std::min(cfg.batch_size, examples.size() - start));
      nn::Tape tape;
      std::vector<nn::Var> terms;
      for (const auto& [cand, idx] : by_candidate(batch)) {
        std::vector<int> users;
        std::vector<double> labels;
        for (std::size_t i : idx) {
          users.push_back(batch[i].user);
          labels.push_back(batch[i].label);
        }
        const auto ci = static_cast<std::size_t>(cand);
        nn::Var members = model.transform(tape, tape.constant(seed_rows[ci]));
        nn::Var seeds = nn::matmul(tape.constant(averaging[ci]), members);
        nn::Var u = model.transform(tape, tape.constant(gather(c.universal, users)));
        nn::Var loss = nn::mean_sigmoid_bce_with_logits(model.batch_logits(tape, seeds, u), labels);
        terms.push_back(nn::scale(loss, static_cast<double>(idx.size()) / static_cast<double>(batch.size())));
      }
      nn::Var total = nn::sum(terms);
      if (!std::isfinite(total.scalar())) {
        throw TrainingDivergenceError("train_lookalike: non-finite loss at epoch " + std::to_string(epoch));
      }
      tape.backward(total);
      for (nn::Parameter* p : params) nn::adam_step(*p, cfg.adam);
      loss_sum += total.scalar();
      ++batches;
    }

    transformed = model.transform(c.universal);
    clusters = cluster_candidates(c, transformed, k, cfg.kmeans_max_iters, cfg.seed + static_cast<std::uint64_t>(epoch));
    centroids = centroids_of(clusters);
    const bool with_prec = cfg.prec_every_epoch || epoch == cfg.epochs;
    const HeldOutMetrics h = evaluate_campaign(model, c, transformed, centroids,
                                               with_prec ? cfg.prec_k : std::vector<std::size_t>{});
    LookalikeEpochMetrics em{epoch, loss_sum / static_cast<double>(batches), h.loss, h.auc, h.prec_at_k,
                             h.random_prec_at_k};
    result.epochs.push_back(em);
    if (on_epoch) on_epoch(em);
  }

  result.centroids = centroids;
  result.embeddings = io::EmbeddingStore(io::EmbeddingSpace::kLookalike,
                                         static_cast<std::uint32_t>(cfg.model.lookalike_dim));
  for (std::size_t i = 0; i < c.user_ids.size(); ++i) {
    result.embeddings.add(c.user_ids[i], transformed.row(static_cast<Eigen::Index>(i)));
  }
  return result;
}

std::string lookalike_metrics_csv(const std::vector<LookalikeEpochMetrics>& epochs,
                                  const std::vector<std::size_t>& prec_k) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,train_loss,test_loss,test_auc";
  for (std::size_t k : prec_k) os << ",prec@" << k;
  os << '\n';
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.train_loss << ',' << e.test_loss << ',' << e.test_auc;
    for (std::size_t i = 0; i < prec_k.size(); ++i) {
      os << ',';
      if (i < e.prec_at_k.size()) os << e.prec_at_k[i];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace ralm::lookalike
