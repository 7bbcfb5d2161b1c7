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

#include "ralm/representation/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>
#include <unordered_map>

#include "ralm/evalgen/metrics.hpp"
#include "ralm/io/archive.hpp"

namespace ralm::rep {

nn::Var representation_loss(const nn::Var& user, const nn::Var& items, int positive,
                            std::span<const int> negatives) {
  std::vector<int> rows;
  rows.reserve(negatives.size() + 1);
  rows.push_back(positive);
  rows.insert(rows.end(), negatives.begin(), negatives.end());
  nn::Var candidates = nn::gather_rows(items, rows);
  nn::Var logits = nn::matmul(candidates, nn::transpose(user));
  return nn::softmax_cross_entropy(logits, 0);
}

nn::Var representation_batch_loss(const nn::Var& users, const nn::Var& items,
                                  std::span<const TrainingExample> examples) {
  if (examples.empty()) throw ArgumentError("representation_batch_loss: no examples");
  if (users.rows() != static_cast<Eigen::Index>(examples.size())) {
    throw DimensionError("representation_batch_loss: one user row per example expected");
  }
  std::vector<int> rows, owner;
  std::vector<Eigen::Index> offsets{0};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    rows.push_back(examples[i].positive);
    rows.insert(rows.end(), examples[i].negatives.begin(), examples[i].negatives.end());
    owner.resize(rows.size(), static_cast<int>(i));
    offsets.push_back(static_cast<Eigen::Index>(rows.size()));
  }
  nn::Var logits = nn::row_dot(nn::gather_rows(items, rows), nn::gather_rows(users, owner));
  return nn::grouped_softmax_cross_entropy(logits, offsets);
}

namespace {

DenseMatrix embed_users(const UserTower& tower, const io::Dataset& ds,
                        const std::vector<std::size_t>& users) {
  constexpr std::size_t kChunk = 512;
  DenseMatrix out(static_cast<Eigen::Index>(users.size()), tower.config().embedding_dim);
  std::vector<const UserFeatureRecord*> recs;
  for (std::size_t lo = 0; lo < users.size(); lo += kChunk) {
    recs.clear();
    for (std::size_t i = lo; i < std::min(users.size(), lo + kChunk); ++i) {
      recs.push_back(&ds.users[users[i]]);
    }
    out.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(recs.size())) =
        tower.embed_batch(recs);
  }
  return out;
}

double mean_dense_loss(const DenseMatrix& emb, const nn::Parameter& items,
                       const std::vector<TrainingExample>& examples) {
  DenseMatrix negs;
  double loss = 0.0;
  for (const auto& ex : examples) {
    negs.resize(static_cast<Eigen::Index>(ex.negatives.size()), items.cols());
    for (std::size_t j = 0; j < ex.negatives.size(); ++j) {
      negs.row(static_cast<Eigen::Index>(j)) = items.value.row(ex.negatives[j]);
    }
    loss += representation_loss(emb.row(static_cast<Eigen::Index>(ex.user)),
                                items.value.row(ex.positive), negs);
  }
  return loss / static_cast<double>(examples.size());
}

struct PreparedData {
  std::vector<std::string> item_ids;
  std::vector<std::size_t> train_users;  // indices into dataset.users
  std::vector<std::size_t> test_users;
  std::vector<std::vector<TimedItem>> train_positives;  // parallel to train_users
  std::vector<std::vector<TimedItem>> test_positives;   // parallel to test_users
  std::vector<std::size_t> item_counts;
  // Test AUC: (test slot, item, label).
  std::vector<std::tuple<std::size_t, int, int>> test_pairs;
};

PreparedData prepare(const io::Dataset& ds, const RepresentationConfig& cfg) {
  PreparedData pd;
  std::map<std::string, int> items;
  for (const auto& it : ds.items) items.emplace(it.item_id, 0);
  for (const auto& e : ds.events) items.emplace(e.item_id, 0);
  for (auto& [id, idx] : items) {
    idx = static_cast<int>(pd.item_ids.size());
    pd.item_ids.push_back(id);
  }
  if (pd.item_ids.size() < 2) throw ArgumentError("train_representation: need at least two items");

  std::unordered_map<std::string, std::pair<bool, std::size_t>> slot;  // user -> (test?, slot)
  for (std::size_t u = 0; u < ds.users.size(); ++u) {
    const bool test = eval::is_holdout_user(ds.users[u].user_id, cfg.test_fraction, cfg.seed);
    auto& list = test ? pd.test_users : pd.train_users;
    slot[ds.users[u].user_id] = {test, list.size()};
    list.push_back(u);
  }
  pd.train_positives.resize(pd.train_users.size());
  pd.test_positives.resize(pd.test_users.size());
  pd.item_counts.assign(pd.item_ids.size(), 0);

  std::map<std::pair<std::size_t, int>, int> test_labels;
  for (const auto& e : ds.events) {
    auto s = slot.find(e.user_id);
    if (s == slot.end()) continue;
    const int item = items.at(e.item_id);
    const auto [test, idx] = s->second;
    if (test) {
      int& label = test_labels[{idx, item}];
      label = std::max(label, e.is_click);
      if (e.is_click) pd.test_positives[idx].push_back({item, e.ts});
    } else if (e.is_click) {
      pd.train_positives[idx].push_back({item, e.ts});
      ++pd.item_counts[static_cast<std::size_t>(item)];
    }
  }
  for (const auto& [key, label] : test_labels) pd.test_pairs.emplace_back(key.first, key.second, label);
  return pd;
}

struct TestEval {
  double loss = 0.0;
  double auc = 0.5;
};

TestEval evaluate_test(const UserTower& tower, const nn::Parameter& items, const io::Dataset& ds,
                       const PreparedData& pd, const std::vector<TrainingExample>& test_examples) {
  TestEval out;
  if (pd.test_users.empty()) return out;
  const DenseMatrix emb = embed_users(tower, ds, pd.test_users);
  if (!test_examples.empty()) out.loss = mean_dense_loss(emb, items, test_examples);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& [u, item, label] : pd.test_pairs) {
    scores.push_back(emb.row(static_cast<Eigen::Index>(u)).dot(items.value.row(item)));
    labels.push_back(label);
  }
  try {
    out.auc = eval::auc(scores, labels);
  } catch (const UndefinedMetricError&) {
    out.auc = 0.5;
  }
  return out;
}

std::vector<nn::Parameter*> trainable(UserTower& tower, nn::Parameter& items) {
  std::vector<nn::Parameter*> out;
  for (auto& np : tower.parameters()) out.push_back(np.parameter);
  out.push_back(&items);
  return out;
}

}  // namespace

RepresentationResult train_representation(const io::Dataset& ds, const RepresentationConfig& cfg,
                                          const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  const PreparedData pd = prepare(ds, cfg);
  std::mt19937_64 rng(cfg.seed);
  RepresentationResult result{UserTower(ds.schema, cfg.tower, rng),
                              nn::Parameter(nn::glorot_uniform(
                                  static_cast<Eigen::Index>(pd.item_ids.size()),
                                  cfg.tower.embedding_dim, rng)),
                              pd.item_ids, 0.0, {}, {}};
  UserTower& tower = result.tower;
  nn::Parameter& items = result.item_embeddings;
  const auto params = trainable(tower, items);

  NegativeSampler sampler(pd.item_counts);
  std::mt19937_64 test_rng(cfg.seed ^ 0x7e57c0deULL);
  const auto test_examples = build_training_examples(pd.test_positives, sampler, cfg.limits, test_rng);

  auto checkpoint = [&](std::size_t batches) {
    const TestEval te = evaluate_test(tower, items, ds, pd, test_examples);
    result.checkpoints.push_back({batches, te.loss, te.auc});
    return te;
  };
  checkpoint(0);

  std::size_t batches_seen = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto examples = build_training_examples(pd.train_positives, sampler, cfg.limits, rng);
    if (examples.empty()) throw ArgumentError("train_representation: no training positives");
    if (epoch == 1) {
      result.initial_train_loss =
          mean_dense_loss(embed_users(tower, ds, pd.train_users), items, examples);
    }
    auto batches = build_training_batches(std::move(examples), cfg.limits.batch_size, rng);
    double epoch_loss = 0.0;
    std::size_t epoch_examples = 0;
    for (const auto& batch : batches) {
      nn::Tape tape;
      nn::Var item_table = tape.param(items);
      std::vector<const UserFeatureRecord*> recs;
      recs.reserve(batch.size());
      for (const auto& ex : batch) recs.push_back(&ds.users[pd.train_users[ex.user]]);
      nn::Var loss = representation_batch_loss(tower.forward_batch(tape, recs), item_table, batch);
      const double value = loss.scalar();
      if (!std::isfinite(value)) {
        throw TrainingDivergenceError("train_representation: non-finite loss at epoch " +
                                      std::to_string(epoch) + ", batch " +
                                      std::to_string(batches_seen + 1));
      }
      tape.backward(loss);
      for (nn::Parameter* p : params) nn::adam_step(*p, cfg.adam);
      epoch_loss += value * static_cast<double>(batch.size());
      epoch_examples += batch.size();
      ++batches_seen;
      if (cfg.eval_every_batches > 0 && batches_seen % cfg.eval_every_batches == 0) {
        checkpoint(batches_seen);
      }
    }
    TestEval te;
    if (result.checkpoints.back().batches_seen == batches_seen) {
      te = {result.checkpoints.back().test_loss, result.checkpoints.back().test_auc};
    } else {
      te = checkpoint(batches_seen);
    }
    EpochMetrics em{epoch, batches_seen, epoch_loss / static_cast<double>(epoch_examples), te.loss,
                    te.auc};
    result.epochs.push_back(em);
    if (on_epoch) on_epoch(em);
  }

  result.embeddings = io::EmbeddingStore(io::EmbeddingSpace::kUniversal,
                                         static_cast<std::uint32_t>(cfg.tower.embedding_dim));
  std::vector<std::size_t> all(ds.users.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const DenseMatrix emb = all.empty() ? DenseMatrix() : embed_users(tower, ds, all);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const RowVector e = emb.row(static_cast<Eigen::Index>(i));
    if (!e.allFinite()) {
      throw TrainingDivergenceError("non-finite embedding for " + ds.users[i].user_id);
    }
    result.embeddings.add(ds.users[i].user_id, e);
  }
  return result;
}

void save_representation(const RepresentationResult& result, const std::string& path) {
  io::ParameterArchive archive;
  archive.magic = kRepresentationMagic;
  result.tower.export_to(archive);
  archive.matrices.emplace_back("items/embeddings", result.item_embeddings.value);
  io::write_archive(path, archive);
}

std::string metrics_csv(const std::vector<EpochMetrics>& epochs) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,train_loss,test_loss,test_auc\n";
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.train_loss << ',' << e.test_loss << ',' << e.test_auc << '\n';
  }
  return os.str();
}

}  // namespace ralm::rep
