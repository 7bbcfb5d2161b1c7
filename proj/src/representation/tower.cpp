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

#include "ralm/representation/tower.hpp"

#include <variant>

#include "ralm/errors.hpp"
#include "ralm/numeric/adam.hpp"

namespace ralm::rep {

const char* to_string(MergeMode mode) {
  return mode == MergeMode::kAttention ? "attention" : "concat";
}

MergeMode merge_mode_from_string(const std::string& s) {
  if (s == "attention") return MergeMode::kAttention;
  if (s == "concat") return MergeMode::kConcat;
  throw ConfigError("merge mode must be 'attention' or 'concat', got '" + s + "'");
}

FieldEmbedding embed_field(const UserFeatureRecord& record, const FeatureFieldSchema& field,
                           const DenseMatrix& table) {
  const auto& v = record.values.at(static_cast<std::size_t>(field.field_id));
  FieldEmbedding out{RowVector::Zero(table.cols()), false};
  auto row = [&](int idx) {
    if (idx < 0 || idx >= table.rows()) {
      throw SchemaError("field " + field.name + ": index " + std::to_string(idx) +
                        " outside vocabulary");
    }
    return table.row(idx);
  };
  switch (field.kind) {
    case FieldKind::kUnivalent:
      if (const int* idx = std::get_if<int>(&v)) out.vector = row(*idx);
      break;
    case FieldKind::kMultivalent: {
      const auto* idx = std::get_if<std::vector<int>>(&v);
      if (idx == nullptr || idx->empty()) {
        out.empty = true;
        break;
      }
      for (int i : *idx) out.vector += row(i);
      out.vector /= static_cast<double>(idx->size());
      break;
    }
    case FieldKind::kContinuous:
      if (const double* x = std::get_if<double>(&v)) out.vector = *x * table.row(0);
      break;
  }
  return out;
}

UserTower::UserTower(FeatureSchema schema, TowerConfig config, std::mt19937_64& rng)
    : schema_(std::move(schema)), config_(std::move(config)) {
  const int m = config_.embedding_dim;
  if (m < 1) throw ConfigError("embedding dim m must be >= 1");
  if (config_.attention_size < 1) throw ConfigError("attention size k_a must be >= 1");
  if (schema_.size() == 0) throw SchemaError("user tower needs at least one field");
  if (config_.hidden.empty()) config_.hidden = {4 * m, 2 * m};
  for (const auto& f : schema_.fields()) {
    const int rows = f.kind == FieldKind::kContinuous ? 1 : f.vocabulary_size;
    field_tables_.emplace_back(nn::glorot_uniform(rows, m, rng));
  }
  attn_w1_ = nn::Parameter(nn::glorot_uniform(config_.attention_size, m, rng));
  attn_w2_ = nn::Parameter(nn::glorot_uniform(config_.attention_size, 1, rng));
  int in = merged_width();
  for (int width : config_.hidden) {
    mlp_.push_back({nn::Parameter(nn::glorot_uniform(in, width, rng)),
                    nn::Parameter(DenseMatrix::Zero(1, width))});
    in = width;
  }
  mlp_.push_back({nn::Parameter(nn::glorot_uniform(in, m, rng)),
                  nn::Parameter(DenseMatrix::Zero(1, m))});
}

int UserTower::merged_width() const {
  const int m = config_.embedding_dim;
  return config_.merge == MergeMode::kAttention ? m : m * static_cast<int>(schema_.size());
}

template <typename Self>
std::vector<nn::Var> UserTower::field_vectors(Self& self, nn::Tape& tape,
                                              const UserFeatureRecord& record) {
  if (record.values.size() != self.schema_.size()) {
    throw SchemaError("user " + record.user_id + ": field count does not match schema");
  }
  const int m = self.config_.embedding_dim;
  std::vector<nn::Var> out;
  out.reserve(self.schema_.size());
  for (const auto& field : self.schema_.fields()) {
    const auto& v = record.values[static_cast<std::size_t>(field.field_id)];
    nn::Var table = tape.param(self.field_tables_[static_cast<std::size_t>(field.field_id)]);
    switch (field.kind) {
      case FieldKind::kUnivalent:
        if (const int* idx = std::get_if<int>(&v)) {
          const int one[1] = {*idx};
          out.push_back(nn::gather_rows(table, one));
        } else {
          out.push_back(tape.constant(DenseMatrix::Zero(1, m)));
        }
        break;
      case FieldKind::kMultivalent:
        if (const auto* idx = std::get_if<std::vector<int>>(&v)) {
          out.push_back(nn::gather_mean(table, *idx));
        } else {
          out.push_back(tape.constant(DenseMatrix::Zero(1, m)));
        }
        break;
      case FieldKind::kContinuous: {
        const double* x = std::get_if<double>(&v);
        out.push_back(nn::scale(table, x != nullptr ? *x : 0.0));
        break;
      }
    }
  }
  return out;
}

template <typename Self>
nn::Var UserTower::merge_impl(Self& self, nn::Tape& tape, std::span<const nn::Var> fields) {
  if (self.config_.merge == MergeMode::kConcat) return nn::hconcat(fields);
  nn::Var h = nn::vstack(fields);
  nn::Var hidden = nn::tanh(nn::matmul(h, nn::transpose(tape.param(self.attn_w1_))));
  nn::Var weights = nn::softmax(nn::matmul(hidden, tape.param(self.attn_w2_)));
  return nn::matmul(nn::transpose(weights), h);
}

template <typename Self>
nn::Var UserTower::forward_impl(Self& self, nn::Tape& tape, const UserFeatureRecord& record) {
  const std::vector<nn::Var> fields = field_vectors(self, tape, record);
  nn::Var x = merge_impl(self, tape, fields);
  for (std::size_t i = 0; i < self.mlp_.size(); ++i) {
    x = nn::add(nn::matmul(x, tape.param(self.mlp_[i].weight)), tape.param(self.mlp_[i].bias));
    if (i + 1 < self.mlp_.size()) x = nn::relu(x);
  }
  return x;
}

template <typename Self>
nn::Var UserTower::batch_impl(Self& self, nn::Tape& tape,
                              std::span<const UserFeatureRecord* const> records) {
  if (records.empty()) throw ArgumentError("forward_batch: no records");
  const auto b = static_cast<Eigen::Index>(records.size());
  for (const UserFeatureRecord* r : records) {
    if (r->values.size() != self.schema_.size()) {
      throw SchemaError("user " + r->user_id + ": field count does not match schema");
    }
  }
  std::vector<nn::Var> fields;
  fields.reserve(self.schema_.size());
  std::vector<std::vector<int>> bags(records.size());
  for (const auto& field : self.schema_.fields()) {
    const auto f = static_cast<std::size_t>(field.field_id);
    nn::Var table = tape.param(self.field_tables_[f]);
    if (field.kind == FieldKind::kContinuous) {
      DenseMatrix x = DenseMatrix::Zero(b, 1);
      for (Eigen::Index i = 0; i < b; ++i) {
        if (const double* v = std::get_if<double>(&records[static_cast<std::size_t>(i)]->values[f])) {
          x(i, 0) = *v;
        }
      }
      fields.push_back(nn::matmul(tape.constant(std::move(x)), table));
      continue;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      bags[i].clear();
      const auto& v = records[i]->values[f];
      if (field.kind == FieldKind::kUnivalent) {
        if (const int* idx = std::get_if<int>(&v)) bags[i].push_back(*idx);
      } else if (const auto* idx = std::get_if<std::vector<int>>(&v)) {
        bags[i] = *idx;
      }
    }
    fields.push_back(nn::embedding_bag(table, bags));
  }
  nn::Var x;
  if (self.config_.merge == MergeMode::kConcat) {
    x = nn::hconcat(fields);
  } else {
    nn::Var w1t = nn::transpose(tape.param(self.attn_w1_));
    nn::Var w2 = tape.param(self.attn_w2_);
    std::vector<nn::Var> scores;
    scores.reserve(fields.size());
    for (const nn::Var& h : fields) scores.push_back(nn::matmul(nn::tanh(nn::matmul(h, w1t)), w2));
    nn::Var weights = nn::softmax_rows(nn::hconcat(scores));
    std::vector<nn::Var> parts;
    parts.reserve(fields.size());
    for (std::size_t f = 0; f < fields.size(); ++f) {
      parts.push_back(nn::scale_rows(fields[f], nn::column(weights, static_cast<Eigen::Index>(f))));
    }
    x = nn::sum(parts);
  }
  for (std::size_t i = 0; i < self.mlp_.size(); ++i) {
    x = nn::add_rowwise(nn::matmul(x, tape.param(self.mlp_[i].weight)),
                        tape.param(self.mlp_[i].bias));
    if (i + 1 < self.mlp_.size()) x = nn::relu(x);
  }
  return x;
}

nn::Var UserTower::forward_batch(nn::Tape& tape,
                                 std::span<const UserFeatureRecord* const> records) {
  return batch_impl(*this, tape, records);
}

DenseMatrix UserTower::embed_batch(std::span<const UserFeatureRecord* const> records) const {
  nn::Tape tape(false);
  return batch_impl(*this, tape, records).value();
}

nn::Var UserTower::embed_field(nn::Tape& tape, const UserFeatureRecord& record, int field_id) {
  if (field_id < 0 || static_cast<std::size_t>(field_id) >= schema_.size()) {
    throw SchemaError("embed_field: unknown field id " + std::to_string(field_id));
  }
  return field_vectors(*this, tape, record)[static_cast<std::size_t>(field_id)];
}

nn::Var UserTower::field_matrix(nn::Tape& tape, const UserFeatureRecord& record) {
  return nn::vstack(field_vectors(*this, tape, record));
}

nn::Var UserTower::merge(nn::Tape& tape, std::span<const nn::Var> fields) {
  return merge_impl(*this, tape, fields);
}

nn::Var UserTower::forward(nn::Tape& tape, const UserFeatureRecord& record) {
  return forward_impl(*this, tape, record);
}

RowVector UserTower::embed(const UserFeatureRecord& record) const {
  nn::Tape tape(false);
  return forward_impl(*this, tape, record).value();
}

std::vector<nn::NamedParameter> UserTower::parameters() {
  std::vector<nn::NamedParameter> out;
  for (auto& t : field_tables_) out.push_back({"field_embeddings", &t});
  if (config_.merge == MergeMode::kAttention) {
    out.push_back({"attention_merge", &attn_w1_});
    out.push_back({"attention_merge", &attn_w2_});
  }
  for (auto& layer : mlp_) {
    out.push_back({"mlp", &layer.weight});
    out.push_back({"mlp", &layer.bias});
  }
  return out;
}

void UserTower::export_to(io::ParameterArchive& archive) const {
  archive.config["m"] = config_.embedding_dim;
  archive.config["k_a"] = config_.attention_size;
  archive.config["merge"] = config_.merge == MergeMode::kAttention ? 0 : 1;
  archive.config["hidden_layers"] = static_cast<double>(config_.hidden.size());
  for (std::size_t i = 0; i < config_.hidden.size(); ++i) {
    archive.config["hidden/" + std::to_string(i)] = config_.hidden[i];
  }
  for (const auto& f : schema_.fields()) {
    archive.matrices.emplace_back("field/" + f.name,
                                  field_tables_[static_cast<std::size_t>(f.field_id)].value);
  }
  archive.matrices.emplace_back("attention/w1", attn_w1_.value);
  archive.matrices.emplace_back("attention/w2", attn_w2_.value);
  for (std::size_t i = 0; i < mlp_.size(); ++i) {
    archive.matrices.emplace_back("mlp/" + std::to_string(i) + "/weight", mlp_[i].weight.value);
    archive.matrices.emplace_back("mlp/" + std::to_string(i) + "/bias", mlp_[i].bias.value);
  }
}

void UserTower::import_from(const io::ParameterArchive& archive) {
  auto load = [&](nn::Parameter& p, const std::string& name) {
    const DenseMatrix& m = archive.matrix(name);
    if (m.rows() != p.rows() || m.cols() != p.cols()) {
      throw FormatError("tower import: shape mismatch for " + name);
    }
    p = nn::Parameter(m);
  };
  for (const auto& f : schema_.fields()) {
    load(field_tables_[static_cast<std::size_t>(f.field_id)], "field/" + f.name);
  }
  load(attn_w1_, "attention/w1");
  load(attn_w2_, "attention/w2");
  for (std::size_t i = 0; i < mlp_.size(); ++i) {
    load(mlp_[i].weight, "mlp/" + std::to_string(i) + "/weight");
    load(mlp_[i].bias, "mlp/" + std::to_string(i) + "/bias");
  }
}

}  // namespace ralm::rep
