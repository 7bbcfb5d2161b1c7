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

#include "ralm/io/jsonl.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "ralm/errors.hpp"
#include "ralm/io/binary.hpp"

namespace ralm::io {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream is(path);
  if (!is) throw DependencyError("missing file: " + path);
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(line);
  }
}

}  // namespace

rep::FeatureSchema read_schema(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError("schema " + path + ": " + e.what());
  }
  std::vector<rep::FeatureFieldSchema> fields;
  try {
    for (const auto& f : j.at("fields")) {
      rep::FeatureFieldSchema fs;
      fs.field_id = static_cast<int>(fields.size());
      fs.name = f.at("name").get<std::string>();
      fs.kind = rep::field_kind_from_string(f.at("kind").get<std::string>());
      fs.vocabulary_size = f.value("vocabulary_size", 1);
      fields.push_back(fs);
    }
  } catch (const json::exception& e) {
    throw FormatError("schema " + path + ": " + e.what());
  }
  return rep::FeatureSchema(std::move(fields));
}

std::string schema_to_json(const rep::FeatureSchema& schema) {
  json fields = json::array();
  for (const auto& f : schema.fields()) {
    fields.push_back({{"name", f.name},
                      {"kind", rep::to_string(f.kind)},
                      {"vocabulary_size", f.vocabulary_size}});
  }
  return json{{"fields", fields}}.dump(2) + "\n";
}

std::string user_to_json(const rep::UserFeatureRecord& user, const rep::FeatureSchema& schema) {
  json fields = json::object();
  for (const auto& f : schema.fields()) {
    const auto& v = user.values[static_cast<std::size_t>(f.field_id)];
    if (std::holds_alternative<int>(v)) {
      fields[f.name] = std::get<int>(v);
    } else if (std::holds_alternative<std::vector<int>>(v)) {
      fields[f.name] = std::get<std::vector<int>>(v);
    } else if (std::holds_alternative<double>(v)) {
      fields[f.name] = std::get<double>(v);
    }
  }
  return json{{"user_id", user.user_id}, {"fields", fields}}.dump();
}

std::string event_to_json(const rep::InteractionEvent& e) {
  return json{{"user_id", e.user_id}, {"item_id", e.item_id}, {"is_click", e.is_click}, {"ts", e.ts}}
      .dump();
}

std::string item_to_json(const ItemRecord& item) {
  return json{{"item_id", item.item_id}, {"categories", item.categories}, {"tags", item.tags}}.dump();
}

bool parse_event(const std::string& line, rep::InteractionEvent& out) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  auto uid = j.find("user_id");
  auto iid = j.find("item_id");
  auto ts = j.find("ts");
  if (uid == j.end() || !uid->is_string() || iid == j.end() || !iid->is_string() ||
      ts == j.end() || !ts->is_number_integer()) {
    return false;
  }
  out.user_id = uid->get<std::string>();
  out.item_id = iid->get<std::string>();
  out.ts = ts->get<std::int64_t>();
  out.is_click = 1;
  if (auto c = j.find("is_click"); c != j.end()) {
    if (!c->is_number_integer()) return false;
    const int v = c->get<int>();
    if (v != 0 && v != 1) return false;
    out.is_click = v;
  }
  return !out.user_id.empty() && !out.item_id.empty();
}

std::vector<rep::UserFeatureRecord> read_users(const std::string& path,
                                               const rep::FeatureSchema& schema,
                                               std::size_t& malformed) {
  std::vector<rep::UserFeatureRecord> users;
  for_each_line(path, [&](const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("user_id") ||
        !j["user_id"].is_string()) {
      ++malformed;
      return;
    }
    rep::UserFeatureRecord rec;
    rec.user_id = j["user_id"].get<std::string>();
    rec.values.assign(schema.size(), std::monostate{});
    const json fields = j.value("fields", json::object());
    try {
      for (const auto& f : schema.fields()) {
        auto it = fields.find(f.name);
        if (it == fields.end() || it->is_null()) continue;
        auto& slot = rec.values[static_cast<std::size_t>(f.field_id)];
        switch (f.kind) {
          case rep::FieldKind::kUnivalent:
            slot = it->get<int>();
            break;
          case rep::FieldKind::kMultivalent:
            slot = it->get<std::vector<int>>();
            break;
          case rep::FieldKind::kContinuous:
            slot = it->get<double>();
            break;
        }
      }
      rep::validate_record(rec, schema);
    } catch (const std::exception&) {
      ++malformed;
      return;
    }
    users.push_back(std::move(rec));
  });
  return users;
}

std::vector<rep::InteractionEvent> read_events(const std::string& path, std::size_t& malformed) {
  std::vector<rep::InteractionEvent> events;
  for_each_line(path, [&](const std::string& line) {
    rep::InteractionEvent e;
    if (parse_event(line, e)) {
      events.push_back(std::move(e));
    } else {
      ++malformed;
    }
  });
  return events;
}

std::vector<ItemRecord> read_items(const std::string& path, std::size_t& malformed) {
  std::vector<ItemRecord> items;
  for_each_line(path, [&](const std::string& line) {
    json j = json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw FormatError("bad json");
      ItemRecord item;
      item.item_id = j.at("item_id").get<std::string>();
      item.categories = j.value("categories", std::vector<std::string>{});
      item.tags = j.value("tags", std::vector<std::string>{});
      items.push_back(std::move(item));
    } catch (const std::exception&) {
      ++malformed;
    }
  });
  return items;
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.schema = read_schema((fs::path(dir) / "schema.json").string());
  ds.users = read_users((fs::path(dir) / "users.jsonl").string(), ds.schema, ds.malformed_lines);
  ds.events = read_events((fs::path(dir) / "events.jsonl").string(), ds.malformed_lines);
  const auto items = fs::path(dir) / "items.jsonl";
  if (fs::exists(items)) ds.items = read_items(items.string(), ds.malformed_lines);
  return ds;
}

}  // namespace ralm::io
