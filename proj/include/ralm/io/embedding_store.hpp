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
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ralm/numeric/dense.hpp"

namespace ralm::io {

enum class EmbeddingSpace : std::uint8_t { kUniversal = 0, kLookalike = 1 };

/// Id-keyed table of float32 embeddings of one fixed dimension.
///
/// On disk: "RALM", u32 version, u64 count, u32 dim, u8 space tag, followed by
/// `count` records of {u32 byte length, UTF-8 id, dim little-endian float32}.
class EmbeddingStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  EmbeddingStore(EmbeddingSpace space, std::uint32_t dim) : space_(space), dim_(dim) {}

  template <typename Derived>
  void add(const std::string& id, const Eigen::MatrixBase<Derived>& v) {
    if (v.size() != static_cast<Eigen::Index>(dim_)) {
      throw DimensionError("EmbeddingStore::add: expected dim " + std::to_string(dim_) +
                           ", got " + std::to_string(v.size()));
    }
    auto [it, fresh] = index_.try_emplace(id, ids_.size());
    if (!fresh) throw ArgumentError("EmbeddingStore::add: duplicate id " + id);
    ids_.push_back(id);
    for (Eigen::Index i = 0; i < v.size(); ++i) data_.push_back(static_cast<float>(v.coeff(i)));
  }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Eigen::Map<const RowVectorX<float>> row(std::size_t i) const {
    return Eigen::Map<const RowVectorX<float>>(data_.data() + i * dim_, dim_);
  }

  /// Row as double, or nullopt if the id is unknown.
  std::optional<RowVector> lookup(const std::string& id) const {
    auto i = find(id);
    if (!i) return std::nullopt;
    return row(*i).cast<double>();
  }

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  std::uint32_t dim() const { return dim_; }
  EmbeddingSpace space() const { return space_; }

  std::string serialize() const;
  static EmbeddingStore deserialize(const std::string& bytes);

  void write(const std::string& path) const;
  static EmbeddingStore read(const std::string& path);

 private:
  EmbeddingSpace space_;
  std::uint32_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace ralm::io
