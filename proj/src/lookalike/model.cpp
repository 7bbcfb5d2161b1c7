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

#include "ralm/lookalike/model.hpp"

#include <algorithm>
#include <cmath>

#include "ralm/io/binary.hpp"
#include "ralm/numeric/adam.hpp"

namespace ralm::lookalike {

const char* to_string(PoolingMode mode) {
  return mode == PoolingMode::kAttention ? "attention" : "average";
}

PoolingMode pooling_mode_from_string(const std::string& s) {
  if (s == "attention") return PoolingMode::kAttention;
  if (s == "average") return PoolingMode::kAverage;
  throw ConfigError("pooling must be 'attention' or 'average', got '" + s + "'");
}

double lookalike_loss(std::span<const double> probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw ArgumentError("lookalike_loss: need equally many (>= 1) predictions and labels");
  }
  constexpr double kEps = 1e-15;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], kEps, 1.0 - kEps);
    total += labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return -total / static_cast<double>(labels.size());
}

double lookalike_loss_from_logits(std::span<const double> logits, std::span<const int> labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw ArgumentError("lookalike_loss: need equally many (>= 1) logits and labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double z = logits[i];
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(labels.size());
}

LookalikeModel::LookalikeModel(LookalikeConfig config, std::mt19937_64& rng) : config_(config) {
  const int m = config_.universal_dim, h = config_.lookalike_dim, s = config_.global_attention_size;
  if (m < 1 || h < 1 || s < 1) throw ConfigError("look-alike dims m, h, s_a must be >= 1");
  if (config_.cluster_k < 1) throw ConfigError("cluster_k must be >= 1");
  if (config_.weights.alpha < 0 || config_.weights.beta < 0) {
    throw ConfigError("alpha and beta must be >= 0");
  }
  transform_w_ = nn::Parameter(nn::glorot_uniform(m, h, rng));
  transform_b_ = nn::Parameter(DenseMatrix::Zero(1, h));
  local_w_ = nn::Parameter(nn::glorot_uniform(h, h, rng) * 0.1);
  global_w_ = nn::Parameter(nn::glorot_uniform(s, h, rng));
  global_v_ = nn::Parameter(nn::glorot_uniform(s, 1, rng));
  logit_b_ = nn::Parameter(DenseMatrix::Zero(1, 1));
  input_mean_ = RowVector::Zero(m);
  input_scale_ = RowVector::Ones(m);
}

void LookalikeModel::fit_input_normalization(const DenseMatrix& universal) {
  if (universal.cols() != config_.universal_dim || universal.rows() < 1) {
    throw DimensionError("fit_input_normalization: got " + shape_string(universal));
  }
  input_mean_ = universal.colwise().mean();
  const DenseMatrix centered = universal.rowwise() - input_mean_;
  const RowVector sd = (centered.colwise().squaredNorm() / static_cast<double>(universal.rows())).cwiseSqrt();
  input_scale_ = (sd.array() > 1e-12).select(sd, RowVector::Ones(sd.size()));
}

nn::Var LookalikeModel::transform(nn::Tape& tape, const nn::Var& universal_rows) {
  nn::Var centered = nn::add_rowwise(universal_rows, tape.constant(-input_mean_));
  nn::Var scaled = nn::matmul(centered, tape.constant(input_scale_.cwiseInverse().asDiagonal().toDenseMatrix()));
  return nn::relu(nn::add_rowwise(nn::matmul(scaled, tape.param(transform_w_)),
                                  tape.param(transform_b_)));
}

nn::Var LookalikeModel::global_pool(nn::Tape& tape, const nn::Var& seeds) {
  nn::Var hidden = nn::tanh(nn::matmul(seeds, nn::transpose(tape.param(global_w_))));
  nn::Var weights = nn::softmax(nn::matmul(hidden, tape.param(global_v_)));
  return nn::matmul(nn::transpose(weights), seeds);
}

nn::Var LookalikeModel::local_pool(nn::Tape& tape, const nn::Var& seeds, const nn::Var& user) {
  nn::Var projected = nn::matmul(seeds, tape.param(local_w_));
  nn::Var weights = nn::softmax(nn::tanh(nn::matmul(projected, nn::transpose(user))));
  return nn::matmul(nn::transpose(weights), seeds);
}

nn::Var LookalikeModel::pooled(nn::Tape& tape, const nn::Var& seeds, const nn::Var& user,
                               const nn::Var* global) {
  const auto& w = config_.weights;
  if (config_.pooling == PoolingMode::kAverage) {
    const Eigen::Index k = seeds.rows();
    nn::Var mean_row = tape.constant(DenseMatrix::Constant(1, k, 1.0 / static_cast<double>(k)));
    return nn::scale(nn::matmul(mean_row, seeds), w.alpha + w.beta);
  }
  nn::Var g = global != nullptr ? *global : global_pool(tape, seeds);
  return nn::add(nn::scale(g, w.alpha), nn::scale(local_pool(tape, seeds, user), w.beta));
}

nn::Var LookalikeModel::training_logit(nn::Tape& tape, const nn::Var& seeds, const nn::Var& user) {
  return nn::add(nn::dot(pooled(tape, seeds, user), user), tape.param(logit_b_));
}

nn::Var LookalikeModel::batch_logits(nn::Tape& tape, const nn::Var& seeds, const nn::Var& users,
                                     const nn::Var* global) {
  const auto& w = config_.weights;
  if (config_.pooling == PoolingMode::kAverage) {
    const Eigen::Index k = seeds.rows();
    nn::Var mean_row = tape.constant(DenseMatrix::Constant(1, k, (w.alpha + w.beta) / static_cast<double>(k)));
    return nn::add_rowwise(nn::matmul(users, nn::transpose(nn::matmul(mean_row, seeds))), tape.param(logit_b_));
  }
  nn::Var projected = nn::matmul(seeds, tape.param(local_w_));                       // k x h
  nn::Var weights = nn::softmax_rows(nn::tanh(nn::matmul(users, nn::transpose(projected))));  // b x k
  nn::Var local = nn::scale(nn::matmul(weights, seeds), w.beta);
  nn::Var g = global != nullptr ? *global : global_pool(tape, seeds);
  return nn::add_rowwise(nn::row_dot(nn::add_rowwise(local, nn::scale(g, w.alpha)), users),
                         tape.param(logit_b_));
}

DenseMatrix LookalikeModel::transform(const DenseMatrix& universal_rows) const {
  if (universal_rows.cols() != input_mean_.size()) {
    throw DimensionError("transform: expected " + std::to_string(input_mean_.size()) + " columns, got " +
                         shape_string(universal_rows));
  }
  const DenseMatrix scaled = (universal_rows.rowwise() - input_mean_).array().rowwise() / input_scale_.array();
  return lookalike::transform(scaled, transform_w_.value, transform_b_.value);
}

RowVector LookalikeModel::global_embedding(const DenseMatrix& seeds) const {
  if (config_.pooling == PoolingMode::kAverage) return average_pooling_baseline(seeds);
  return global_attention(seeds, global_w_.value, global_v_.value).pooled;
}

RowVector LookalikeModel::local_embedding(const DenseMatrix& seeds, const RowVector& user) const {
  if (config_.pooling == PoolingMode::kAverage) return average_pooling_baseline(seeds);
  return local_attention(seeds, user, local_w_.value).pooled;
}

RowVector LookalikeModel::pooled(const DenseMatrix& seeds, const RowVector& user) const {
  const auto& w = config_.weights;
  return w.alpha * global_embedding(seeds) + w.beta * local_embedding(seeds, user);
}

double LookalikeModel::training_score(const DenseMatrix& seeds, const RowVector& user) const {
  const double z = pooled(seeds, user).dot(user) + logit_b_.value(0, 0);
  return 1.0 / (1.0 + std::exp(-z));
}

SimilarityScore LookalikeModel::serving_score(const RowVector& user, const DenseMatrix& seeds) const {
  if (seeds.rows() < 1) throw NoSeedsError("serving_score: empty seeds representation");
  return serving_score(user, seeds, global_embedding(seeds));
}

SimilarityScore LookalikeModel::serving_score(const RowVector& user, const DenseMatrix& seeds,
                                              const RowVector& global) const {
  if (seeds.rows() < 1) throw NoSeedsError("serving_score: empty seeds representation");
  if (!(user.norm() > 0)) throw DegenerateVectorError("serving_score: zero-norm user embedding");
  return combine_similarities(user, global, local_embedding(seeds, user), config_.weights);
}

Vector LookalikeModel::score_users(const DenseMatrix& users, const DenseMatrix& seeds) const {
  if (seeds.rows() < 1) throw NoSeedsError("score_users: empty seeds representation");
  if (users.cols() != seeds.cols()) {
    throw DimensionError("score_users: users " + shape_string(users) + ", seeds " + shape_string(seeds));
  }
  const auto& w = config_.weights;
  const RowVector global = global_embedding(seeds);
  DenseMatrix local;
  if (config_.pooling == PoolingMode::kAverage) {
    local = global.replicate(users.rows(), 1);
  } else {
    const DenseMatrix projected = seeds * local_w_.value;
    DenseMatrix scores = (users * projected.transpose()).array().tanh().matrix();
    for (Eigen::Index r = 0; r < scores.rows(); ++r) scores.row(r) = ralm::softmax(scores.row(r));
    local = scores * seeds;
  }
  const Vector user_norm = users.rowwise().norm();
  const Vector local_norm = local.rowwise().norm();
  const double global_norm = global.norm();
  Vector out(users.rows());
  for (Eigen::Index r = 0; r < users.rows(); ++r) {
    if (!(user_norm(r) > 0)) {
      out(r) = 0.0;
      continue;
    }
    const double g = global_norm > 0 ? std::clamp(users.row(r).dot(global) / (user_norm(r) * global_norm), -1.0, 1.0) : 0.0;
    const double l = local_norm(r) > 0
                         ? std::clamp(users.row(r).dot(local.row(r)) / (user_norm(r) * local_norm(r)), -1.0, 1.0)
                         : 0.0;
    out(r) = w.alpha * g + w.beta * l;
  }
  return out;
}

std::vector<nn::NamedParameter> LookalikeModel::parameters() {
  std::vector<nn::NamedParameter> out{
      {"transform", &transform_w_}, {"transform", &transform_b_}, {"output", &logit_b_}};
  if (config_.pooling == PoolingMode::kAttention) {
    out.push_back({"local_attention", &local_w_});
    out.push_back({"global_attention", &global_w_});
    out.push_back({"global_attention", &global_v_});
  }
  return out;
}

io::ParameterArchive LookalikeModel::to_archive() const {
  io::ParameterArchive a;
  a.magic = kMagic;
  a.config = {{"m", config_.universal_dim},
              {"h", config_.lookalike_dim},
              {"k_a", config_.merge_attention_size},
              {"s_a", config_.global_attention_size},
              {"cluster_k", config_.cluster_k},
              {"alpha", config_.weights.alpha},
              {"beta", config_.weights.beta},
              {"pooling", config_.pooling == PoolingMode::kAttention ? 0.0 : 1.0}};
  a.matrices = {{"transform/weight", transform_w_.value},
                {"transform/bias", transform_b_.value},
                {"local/w", local_w_.value},
                {"global/w", global_w_.value},
                {"global/context", global_v_.value},
                {"output/bias", logit_b_.value},
                {"input/mean", input_mean_},
                {"input/scale", input_scale_}};
  return a;
}

LookalikeModel LookalikeModel::from_archive(const io::ParameterArchive& a) {
  LookalikeConfig c;
  c.universal_dim = static_cast<int>(a.config_value("m"));
  c.lookalike_dim = static_cast<int>(a.config_value("h"));
  c.merge_attention_size = static_cast<int>(a.config_value("k_a"));
  c.global_attention_size = static_cast<int>(a.config_value("s_a"));
  c.cluster_k = static_cast<int>(a.config_value("cluster_k"));
  c.weights = {a.config_value("alpha"), a.config_value("beta")};
  c.pooling = a.config_value("pooling") == 0.0 ? PoolingMode::kAttention : PoolingMode::kAverage;
  std::mt19937_64 rng(0);
  LookalikeModel model(c, rng);
  auto load = [&](nn::Parameter& p, const std::string& name) {
    const DenseMatrix& m = a.matrix(name);
    if (m.rows() != p.rows() || m.cols() != p.cols()) {
      throw FormatError("look-alike model: shape mismatch for " + name);
    }
    p = nn::Parameter(m);
  };
  load(model.transform_w_, "transform/weight");
  load(model.transform_b_, "transform/bias");
  load(model.local_w_, "local/w");
  load(model.global_w_, "global/w");
  load(model.global_v_, "global/context");
  load(model.logit_b_, "output/bias");
  for (auto [name, target] : {std::pair{"input/mean", &model.input_mean_}, std::pair{"input/scale", &model.input_scale_}}) {
    const DenseMatrix& v = a.matrix(name);
    if (v.rows() != 1 || v.cols() != target->size()) throw FormatError(std::string("look-alike model: bad ") + name);
    *target = v;
  }
  return model;
}

void LookalikeModel::save(const std::string& path) const { io::write_archive(path, to_archive()); }

LookalikeModel LookalikeModel::load(const std::string& path) {
  return from_archive(io::read_archive(path, kMagic));
}

}  // namespace ralm::lookalike
