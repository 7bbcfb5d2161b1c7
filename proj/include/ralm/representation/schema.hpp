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
#include <variant>
#include <vector>

namespace ralm::rep {

enum class FieldKind { kUnivalent, kMultivalent, kContinuous };

const char* to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& s);

struct FeatureFieldSchema {
  int field_id = 0;
  std::string name;
  FieldKind kind = FieldKind::kUnivalent;
  /// Number of category indices; unused (1) for continuous fields.
  int vocabulary_size = 1;
};

/// Ordered list of feature fields; field ids are dense 0..n-1.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureFieldSchema> fields);

  const std::vector<FeatureFieldSchema>& fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  const FeatureFieldSchema& operator[](std::size_t i) const { return fields_[i]; }
  /// Field id for `name`, or -1.
  int find(const std::string& name) const;

 private:
  std::vector<FeatureFieldSchema> fields_;
};

/// Missing (monostate), univalent index, multivalent index set, or a
/// continuous value already scaled to [0, 1].
using FieldValue = std::variant<std::monostate, int, std::vector<int>, double>;

struct UserFeatureRecord {
  std::string user_id;
  std::vector<FieldValue> values;  // indexed by field id
};

/// Throws SchemaError if a value does not fit its field.
void validate_record(const UserFeatureRecord& record, const FeatureSchema& schema);

/// One line of events.jsonl.
struct InteractionEvent {
  std::string user_id;
  std::string item_id;
  int is_click = 0;
  std::int64_t ts = 0;
};

}  // namespace ralm::rep
