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

#include <random>
#include <span>
#include <string>
#include <vector>

#include "ralm/io/archive.hpp"
#include "ralm/numeric/gradcheck.hpp"
#include "ralm/numeric/tape.hpp"
#include "ralm/representation/schema.hpp"

namespace ralm::rep {

enum class MergeMode { kAttention, kConcat };

const char* to_string(MergeMode mode);
MergeMode merge_mode_from_string(const std::string& s);

struct TowerConfig {
  int embedding_dim = 16;   // m
  int attention_size = 16;  // k_a
  /// Hidden ReLU widths; empty means {4m, 2m}.
  std::vector<int> hidden;
  MergeMode merge = MergeMode::kAttention;
};

struct DenseLayer {
  nn::Parameter weight;  // in x out
  nn::Parameter bias;    // 1 x out
};

struct FieldEmbedding {
  RowVector vector;
  bool empty = false;  // multivalent field without members
};

/// Dense (non-tape) field embedding: row lookup, mean of rows, or
/// value x projection row for continuous fields.
FieldEmbedding embed_field(const UserFeatureRecord& record, const FeatureFieldSchema& field,
                           const DenseMatrix& table);

/// Multi-field user tower: field embeddings -> merge -> MLP -> m-dim
/// universal embedding.
class UserTower {
 public:
  UserTower(FeatureSchema schema, TowerConfig config, std::mt19937_64& rng);

  nn::Var embed_field(nn::Tape& tape, const UserFeatureRecord& record, int field_id);
  /// H: one row per field (n x m).
  nn::Var field_matrix(nn::Tape& tape, const UserFeatureRecord& record);
  /// Attention-merge (1 x m) or concatenation (1 x n*m) of field rows.
  nn::Var merge(nn::Tape& tape, std::span<const nn::Var> fields);
  nn::Var forward(nn::Tape& tape, const UserFeatureRecord& record);
  /// One row per record; row i equals forward(*records[i]).
  nn::Var forward_batch(nn::Tape& tape, std::span<const UserFeatureRecord* const> records);

  /// Inference; same numbers as forward().
  RowVector embed(const UserFeatureRecord& record) const;
  DenseMatrix embed_batch(std::span<const UserFeatureRecord* const> records) const;

  std::vector<nn::NamedParameter> parameters();

  const FeatureSchema& schema() const { return schema_; }
  const TowerConfig& config() const { return config_; }
  int merged_width() const;

  std::vector<nn::Parameter>& field_tables() { return field_tables_; }
  nn::Parameter& attention_w1() { return attn_w1_; }
  nn::Parameter& attention_w2() { return attn_w2_; }
  std::vector<DenseLayer>& mlp() { return mlp_; }

  void export_to(io::ParameterArchive& archive) const;
  void import_from(const io::ParameterArchive& archive);

 private:
  template <typename Self>
  static std::vector<nn::Var> field_vectors(Self& self, nn::Tape& tape,
                                            const UserFeatureRecord& record);
  template <typename Self>
  static nn::Var merge_impl(Self& self, nn::Tape& tape, std::span<const nn::Var> fields);
  template <typename Self>
  static nn::Var batch_impl(Self& self, nn::Tape& tape,
                            std::span<const UserFeatureRecord* const> records);
  template <typename Self>
  static nn::Var forward_impl(Self& self, nn::Tape& tape, const UserFeatureRecord& record);

  FeatureSchema schema_;
  TowerConfig config_;
  std::vector<nn::Parameter> field_tables_;
  nn::Parameter attn_w1_;
  nn::Parameter attn_w2_;
  std::vector<DenseLayer> mlp_;
};

}  // namespace ralm::rep
