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


#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "ralm/evalgen/world.hpp"
#include "ralm/io/archive.hpp"
#include "ralm/representation/merge.hpp"
#include "ralm/representation/sampling.hpp"
#include "ralm/representation/tower.hpp"
#include "ralm/representation/trainer.hpp"
#include "test_util.hpp"

using namespace ralm;

namespace {

rep::FeatureSchema mixed_schema() {
  return rep::FeatureSchema({{0, "gender", rep::FieldKind::kUnivalent, 3},
                             {1, "tags", rep::FieldKind::kMultivalent, 12},
                             {2, "activity", rep::FieldKind::kContinuous, 1},
                             {3, "topics", rep::FieldKind::kMultivalent, 6}});
}

std::vector<rep::UserFeatureRecord> mixed_users() {
  return {
      {"a", {1, std::vector<int>{0, 5, 5}, 0.3, std::vector<int>{2}}},
      {"b", {std::monostate{}, std::vector<int>{}, std::monostate{}, std::vector<int>{1, 4}}},
      {"c", {2, std::vector<int>{11}, -1.5, std::monostate{}}},
  };
}

}  // namespace

TEST_SUITE("representation") {

TEST_CASE("attention merge weights sum to one and pick a convex combination") {
  std::mt19937_64 rng(1);
  DenseMatrix h = nn::glorot_uniform(4, 5, rng);
  DenseMatrix w1 = nn::glorot_uniform(3, 5, rng);
  DenseMatrix w2 = nn::glorot_uniform(3, 1, rng);
  auto r = rep::attention_merge(h, w1, w2);
  CHECK(r.weights.sum() == doctest::Approx(1.0));
  CHECK((r.weights.array() > 0).all());
  RowVector expected = RowVector::Zero(5);
  for (int f = 0; f < 4; ++f) expected += r.weights(f) * h.row(f);
  CHECK((r.merged - expected).norm() < 1e-12);
  CHECK_THROWS_AS(rep::attention_merge(h, w1.leftCols(4), w2), DimensionError);
  CHECK_THROWS_AS(rep::attention_merge(DenseMatrix(0, 5), w1, w2), ArgumentError);
  CHECK(rep::concat_merge(h).size() == 20);
  CHECK(rep::concat_merge(h)(6) == h(1, 1));
}

TEST_CASE("tower forward, inference and batch agree") {
  for (auto mode : {rep::MergeMode::kAttention, rep::MergeMode::kConcat}) {
    std::mt19937_64 rng(5);
    rep::TowerConfig cfg;
    cfg.embedding_dim = 6;
    cfg.attention_size = 4;
    cfg.merge = mode;
    rep::UserTower tower(mixed_schema(), cfg, rng);
    auto users = mixed_users();
    std::vector<const rep::UserFeatureRecord*> ptrs;
    for (auto& u : users) ptrs.push_back(&u);
    DenseMatrix batch = tower.embed_batch(ptrs);
    REQUIRE(batch.rows() == 3);
    REQUIRE(batch.cols() == 6);
    nn::Tape tape;
    nn::Var taped = tower.forward_batch(tape, ptrs);
    for (std::size_t i = 0; i < users.size(); ++i) {
      nn::Tape t;
      RowVector single = tower.forward(t, users[i]).value();
      CHECK((single - tower.embed(users[i])).norm() < 1e-12);
      CHECK((single - batch.row(static_cast<Eigen::Index>(i))).norm() < 1e-10);
      CHECK((single - taped.value().row(static_cast<Eigen::Index>(i))).norm() < 1e-10);
    }
  }
}

TEST_CASE("tower rejects bad input") {
  std::mt19937_64 rng(5);
  rep::UserTower tower(mixed_schema(), {}, rng);
  rep::UserFeatureRecord short_rec{"x", {1}};
  nn::Tape t;
  CHECK_THROWS_AS(tower.forward(t, short_rec), SchemaError);
  std::vector<const rep::UserFeatureRecord*> none;
  CHECK_THROWS_AS(tower.embed_batch(none), ArgumentError);
  std::vector<const rep::UserFeatureRecord*> bad{&short_rec};
  CHECK_THROWS_AS(tower.embed_batch(bad), SchemaError);
  CHECK_THROWS_AS(rep::UserTower(rep::FeatureSchema{}, {}, rng), SchemaError);
  rep::TowerConfig zero;
  zero.embedding_dim = 0;
  CHECK_THROWS_AS(rep::UserTower(mixed_schema(), zero, rng), ConfigError);
  CHECK_THROWS_AS(rep::merge_mode_from_string("sum"), ConfigError);
}

TEST_CASE("tower archive round trip") {
  std::mt19937_64 rng(8);
  rep::UserTower a(mixed_schema(), {}, rng);
  rep::UserTower b(mixed_schema(), {}, rng);
  io::ParameterArchive ar;
  a.export_to(ar);
  b.import_from(ar);
  for (const auto& u : mixed_users()) CHECK((a.embed(u) - b.embed(u)).norm() == 0.0);
}

TEST_CASE("tower gradients") {
  std::mt19937_64 rng(11);
  rep::TowerConfig cfg;
  cfg.embedding_dim = 4;
  cfg.attention_size = 3;
  cfg.hidden = {5};
  rep::UserTower tower(mixed_schema(), cfg, rng);
  auto users = mixed_users();
  std::vector<const rep::UserFeatureRecord*> ptrs;
  for (auto& u : users) ptrs.push_back(&u);
  auto report = nn::finite_difference_check(
      [&](nn::Tape& t) {
        nn::Var y = tower.forward_batch(t, ptrs);
        return nn::dot(nn::tanh(y), y);
      },
      tower.parameters());
  CHECK(report.passed);
  CHECK(report.groups.size() == 3);
}

TEST_CASE("rank sampling probabilities") {
  CHECK_THROWS_AS(rep::rank_sampling_probabilities(0), ArgumentError);
  auto one = rep::rank_sampling_probabilities(1);
  CHECK(one.size() == 1);
  CHECK(one[0] == doctest::Approx(1.0));
  auto p = rep::rank_sampling_probabilities(50);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] < p[i - 1]);
  CHECK(p[0] == doctest::Approx(std::log(2.0) / std::log(51.0)));
}

TEST_CASE("frequency ranks and sampler") {
  std::vector<std::size_t> counts{5, 50, 5, 0};
  auto ranks = rep::frequency_ranks(counts);
  CHECK(ranks == std::vector<std::size_t>{1, 0, 2, 3});
  rep::NegativeSampler sampler(counts);
  CHECK(sampler.probabilities()[1] > sampler.probabilities()[0]);
  std::mt19937_64 rng(3);
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 20000; ++i) ++hits[static_cast<std::size_t>(sampler.draw(rng))];
  CHECK(hits[1] > hits[0]);
  CHECK(hits[0] > hits[3]);
  CHECK_THROWS_AS(rep::NegativeSampler(std::vector<std::size_t>{}), ArgumentError);
  std::vector<std::size_t> bad_rank{7};
  CHECK_THROWS_AS(rep::negative_sampling_distribution(bad_rank, 3), ArgumentError);
}

TEST_CASE("training examples respect limits and exclude positives from negatives") {
  std::vector<std::size_t> counts(20, 1);
  rep::NegativeSampler sampler(counts);
  std::vector<std::vector<rep::TimedItem>> pos(3);
  for (int i = 0; i < 8; ++i) pos[0].push_back({i, 100 + i});
  pos[0].push_back({3, 500});  // repeat click
  for (int i = 0; i < 20; ++i) pos[2].push_back({i, i});  // clicked everything
  rep::BatchLimits lim;
  lim.max_positives_per_user = 5;
  lim.negatives_per_positive = 4;
  std::mt19937_64 rng(2);
  auto ex = rep::build_training_examples(pos, sampler, lim, rng);
  REQUIRE(ex.size() == 5);
  std::set<int> kept;
  for (const auto& e : ex) {
    CHECK(e.user == 0);
    CHECK(e.negatives.size() == 4);
    for (int n : e.negatives) CHECK(n >= 8);
    kept.insert(e.positive);
  }
  CHECK(kept.count(3) == 1);  // most recent
  CHECK(kept.count(7) == 1);
  CHECK(kept.count(0) == 0);

  auto batches = rep::build_training_batches(ex, 2, rng);
  CHECK(batches.size() == 3);
  CHECK(batches.back().size() == 1);
  CHECK_THROWS_AS(rep::build_training_batches(ex, 0, rng), ArgumentError);
}

TEST_CASE("representation loss: dense, taped and batched agree") {
  std::mt19937_64 rng(4);
  DenseMatrix items = nn::glorot_uniform(10, 4, rng);
  DenseMatrix users = nn::glorot_uniform(2, 4, rng);
  std::vector<rep::TrainingExample> ex{{0, 3, {1, 7, 9}}, {1, 5, {0, 2, 4}}};
  double dense = 0.0;
  for (const auto& e : ex) {
    DenseMatrix neg(3, 4);
    for (int j = 0; j < 3; ++j) neg.row(j) = items.row(e.negatives[static_cast<std::size_t>(j)]);
    dense += rep::representation_loss(users.row(static_cast<Eigen::Index>(e.user)), items.row(e.positive), neg);
  }
  dense /= 2.0;
  nn::Tape t(false);
  nn::Var it = t.constant(items);
  nn::Var us = t.constant(users);
  const double batched = rep::representation_batch_loss(us, it, ex).scalar();
  CHECK(batched == doctest::Approx(dense).epsilon(1e-12));
  nn::Var u0 = t.constant(users.row(0));
  const double single = rep::representation_loss(u0, it, 3, ex[0].negatives).scalar();
  DenseMatrix neg0(3, 4);
  for (int j = 0; j < 3; ++j) neg0.row(j) = items.row(ex[0].negatives[static_cast<std::size_t>(j)]);
  CHECK(single == doctest::Approx(rep::representation_loss(users.row(0), items.row(3), neg0)).epsilon(1e-12));
}

TEST_CASE("short training run lowers the loss and exports embeddings") {
  eval::SyntheticWorldSpec spec;
  spec.users = 400;
  spec.items = 40;
  spec.topics = 4;
  spec.seed = 3;
  auto world = eval::generate_world(spec);
  rep::RepresentationConfig cfg;
  cfg.tower.embedding_dim = 8;
  cfg.tower.attention_size = 8;
  cfg.epochs = 3;
  cfg.adam.learning_rate = 0.003;
  cfg.limits.batch_size = 64;
  int seen = 0;
  auto res = rep::train_representation(world.dataset, cfg, [&](const rep::EpochMetrics&) { ++seen; });
  CHECK(seen == 3);
  CHECK(res.epochs.size() == 3);
  CHECK(res.epochs.back().train_loss < res.initial_train_loss);
  CHECK(res.checkpoints.front().batches_seen == 0);
  CHECK(res.embeddings.size() == world.dataset.users.size());
  CHECK(res.embeddings.dim() == 8);
  CHECK(rep::metrics_csv(res.epochs).find('\n') != std::string::npos);

  testing::TempDir dir;
  rep::save_representation(res, dir.file("rep.bin"));
  auto ar = io::read_archive(dir.file("rep.bin"), rep::kRepresentationMagic);
  CHECK(ar.matrix("items/embeddings").rows() == spec.items);
}

}  // TEST_SUITE
