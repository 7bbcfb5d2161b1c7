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

#include "ralm/representation/schema.hpp"

#include "ralm/errors.hpp"

namespace ralm::rep {

const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kUnivalent:
      return "univalent";
    case FieldKind::kMultivalent:
      return "multivalent";
    case FieldKind::kContinuous:
      return "continuous";
  }
  return "?";
}

FieldKind field_kind_from_string(const std::string& s) {
  if (s == "univalent") return FieldKind::kUnivalent;
  if (s == "multivalent") return FieldKind::kMultivalent;
  if (s == "continuous") return FieldKind::kContinuous;
  throw SchemaError("unknown field kind: " + s);
}

FeatureSchema::FeatureSchema(std::vector<FeatureFieldSchema> fields) : fields_(std::move(fields)) {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].field_id != static_cast<int>(i)) {
      throw SchemaError("field ids must be dense 0..n-1; field " + fields_[i].name + " has id " +
                        std::to_string(fields_[i].field_id));
    }
    if (fields_[i].vocabulary_size < 1) {
      throw SchemaError("field " + fields_[i].name + ": vocabulary_size must be >= 1");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (fields_[j].name == fields_[i].name) throw SchemaError("duplicate field " + fields_[i].name);
    }
  }
}

int FeatureSchema::find(const std::string& name) const {
  for (const auto& f : fields_) {
    if (f.name == name) return f.field_id;
  }
  return -1;
}

void validate_record(const UserFeatureRecord& record, const FeatureSchema& schema) {
  if (record.values.size() != schema.size()) {
    throw SchemaError("user " + record.user_id + ": expected " + std::to_string(schema.size()) +
                      " field values");
  }
  for (const auto& field : schema.fields()) {
    const FieldValue& v = record.values[static_cast<std::size_t>(field.field_id)];
    auto check_index = [&](int idx) {
      if (idx < 0 || idx >= field.vocabulary_size) {
        throw SchemaError("user " + record.user_id + ", field " + field.name + ": index " +
                          std::to_string(idx) + " outside vocabulary of " +
                          std::to_string(field.vocabulary_size));
      }
    };
    if (std::holds_alternative<std::monostate>(v)) continue;
    switch (field.kind) {
      case FieldKind::kUnivalent:
        if (!std::holds_alternative<int>(v)) throw SchemaError(field.name + ": expected one index");
        check_index(std::get<int>(v));
        break;
      case FieldKind::kMultivalent:
        if (!std::holds_alternative<std::vector<int>>(v)) {
          throw SchemaError(field.name + ": expected an index list");
        }
        for (int idx : std::get<std::vector<int>>(v)) check_index(idx);
        break;
      case FieldKind::kContinuous: {
        if (!std::holds_alternative<double>(v)) throw SchemaError(field.name + ": expected a real");
        const double x = std::get<double>(v);
        if (!(x >= 0.0 && x <= 1.0)) {
          throw SchemaError("user " + record.user_id + ", field " + field.name +
                            ": continuous value outside [0, 1]");
        }
        break;
      }
    }
  }
}

}  // namespace ralm::rep
