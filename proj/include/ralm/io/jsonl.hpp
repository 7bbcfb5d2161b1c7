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

#include <cstddef>
#include <string>
#include <vector>

#include "ralm/representation/schema.hpp"

namespace ralm::io {

/// items.jsonl record.
struct ItemRecord {
  std::string item_id;
  std::vector<std::string> categories;
  std::vector<std::string> tags;
};

struct Dataset {
  rep::FeatureSchema schema;
  std::vector<rep::UserFeatureRecord> users;
  std::vector<rep::InteractionEvent> events;
  std::vector<ItemRecord> items;
  std::size_t malformed_lines = 0;
};

rep::FeatureSchema read_schema(const std::string& path);
std::string schema_to_json(const rep::FeatureSchema& schema);

std::string user_to_json(const rep::UserFeatureRecord& user, const rep::FeatureSchema& schema);
std::string event_to_json(const rep::InteractionEvent& event);
std::string item_to_json(const ItemRecord& item);

/// Parses one events.jsonl line; returns false on malformed input.
bool parse_event(const std::string& line, rep::InteractionEvent& out);

/// Each reader skips blank lines and counts malformed ones in `malformed`.
std::vector<rep::UserFeatureRecord> read_users(const std::string& path,
                                               const rep::FeatureSchema& schema,
                                               std::size_t& malformed);
std::vector<rep::InteractionEvent> read_events(const std::string& path, std::size_t& malformed);
std::vector<ItemRecord> read_items(const std::string& path, std::size_t& malformed);

/// Loads schema.json, users.jsonl, events.jsonl and (if present) items.jsonl
/// from `dir`.
Dataset load_dataset(const std::string& dir);

}  // namespace ralm::io
