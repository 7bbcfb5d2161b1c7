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

#include "ralm/evalgen/world.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "json.hpp"
#include "ralm/errors.hpp"
#include "ralm/io/binary.hpp"

namespace ralm::eval {

namespace {

std::string padded(const char* prefix, int i, int width) {
  std::string n = std::to_string(i);
  if (static_cast<int>(n.size()) < width) n.insert(0, static_cast<std::size_t>(width) - n.size(), '0');
  return prefix + n;
}

void validate(const SyntheticWorldSpec& s) {
  if (s.users < 0 || s.items < 0) throw ConfigError("users and items must be >= 0");
  if (s.topics < 2) throw ConfigError("topics must be >= 2");
  if (s.tokens_per_topic < 1) throw ConfigError("tokens_per_topic must be >= 1");
  if (s.max_item_topics < 1 || s.max_item_topics > s.topics) {
    throw ConfigError("max_item_topics must be in [1, topics]");
  }
  if (s.strong_fields < 0 || s.weak_fields < 0 || s.strong_fields + s.weak_fields < 1) {
    throw ConfigError("field count must be >= 1");
  }
  if (!(s.strong_coef > s.weak_coef && s.weak_coef > 0 && s.strong_coef <= 1)) {
    throw ConfigError("need 1 >= strong_coef > weak_coef > 0");
  }
  auto unit = [](double v) { return v >= 0 && v <= 1; };
  if (!unit(s.missing_rate) || !unit(s.multi_topic_rate)) {
    throw ConfigError("missing_rate and multi_topic_rate must be in [0, 1]");
  }
  if (s.impressions_per_user < 0 || s.duration_s < 1) {
    throw ConfigError("impressions_per_user must be >= 0 and duration_s >= 1");
  }
}

/// Field layout: strong multivalent fields, then weak fields cycling through
/// univalent, multivalent and continuous kinds.
rep::FeatureSchema make_schema(const SyntheticWorldSpec& s) {
  std::vector<rep::FeatureFieldSchema> fields;
  const int vocab = s.topics * s.tokens_per_topic;
  for (int i = 0; i < s.strong_fields; ++i) {
    fields.push_back({static_cast<int>(fields.size()), "strong_" + std::to_string(i),
                      rep::FieldKind::kMultivalent, vocab});
  }
  static constexpr rep::FieldKind kWeakKinds[] = {rep::FieldKind::kUnivalent, rep::FieldKind::kMultivalent,
                                                  rep::FieldKind::kContinuous};
  for (int i = 0; i < s.weak_fields; ++i) {
    const rep::FieldKind kind = kWeakKinds[i % 3];
    fields.push_back({static_cast<int>(fields.size()), "weak_" + std::to_string(i), kind,
                      kind == rep::FieldKind::kContinuous ? 1 : vocab});
  }
  return rep::FeatureSchema(std::move(fields));
}

}  // namespace

SyntheticWorld generate_world(const SyntheticWorldSpec& s) {
  validate(s);
  SyntheticWorld w;
  w.dataset.schema = make_schema(s);
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> topic_of(0, s.topics - 1);
  std::uniform_int_distribution<int> slot_of(0, s.tokens_per_topic - 1);
  const int vocab = s.topics * s.tokens_per_topic;
  std::uniform_int_distribution<int> any_token(0, vocab - 1);

  // Items: 1..max_item_topics topics; categories and tags derive from them.
  for (int i = 0; i < s.items; ++i) {
    std::vector<int> t{topic_of(rng)};
    for (int extra = 1; extra < s.max_item_topics; ++extra) {
      if (unif(rng) >= s.multi_topic_rate) continue;
      int next;
      do {
        next = topic_of(rng);
      } while (std::find(t.begin(), t.end(), next) != t.end());
      t.push_back(next);
    }
    io::ItemRecord rec{padded("i", i, 4), {}, {}};
    for (int topic : t) {
      rec.categories.push_back("topic_" + std::to_string(topic));
      rec.tags.push_back("tag_" + std::to_string(topic) + "_" + std::to_string(slot_of(rng)));
    }
    w.item_topics.push_back(std::move(t));
    w.dataset.items.push_back(std::move(rec));
  }

  auto leak = [&](int topic, double coef) {
    return unif(rng) < coef ? topic * s.tokens_per_topic + slot_of(rng) : any_token(rng);
  };
  for (int u = 0; u < s.users; ++u) {
    UserTruth t{padded("u", u, 5), topic_of(rng), 0, unif(rng)};
    do {
      t.secondary_topic = topic_of(rng);
    } while (t.secondary_topic == t.primary_topic);
    rep::UserFeatureRecord rec{t.user_id, {}};
    for (const auto& f : w.dataset.schema.fields()) {
      const bool strong = f.field_id < s.strong_fields;
      const int topic = strong ? t.primary_topic : t.secondary_topic;
      const double coef = strong ? s.strong_coef : s.weak_coef;
      if (unif(rng) < s.missing_rate) {
        rec.values.emplace_back(std::monostate{});
        continue;
      }
      switch (f.kind) {
        case rep::FieldKind::kUnivalent: rec.values.emplace_back(leak(topic, coef)); break;
        case rep::FieldKind::kMultivalent: {
          std::vector<int> tokens;
          for (int j = 0; j < 3; ++j) tokens.push_back(leak(topic, coef));
          std::sort(tokens.begin(), tokens.end());
          tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
          rec.values.emplace_back(std::move(tokens));
          break;
        }
        case rep::FieldKind::kContinuous: {
          const double noisy = t.activity + (1.0 - coef) * (unif(rng) - 0.5);
          rec.values.emplace_back(std::clamp(noisy, 0.0, 1.0));
          break;
        }
      }
    }
    w.dataset.users.push_back(std::move(rec));
    w.truth.push_back(t);
  }

  // Impressions follow a Zipf popularity; clicks follow a logistic model of
  // topic affinity (best match over the item's topics) and user activity.
  std::vector<double> popularity;
  for (int i = 0; i < s.items; ++i) popularity.push_back(std::pow(1.0 + i, -s.popularity_exponent));
  if (s.items > 0 && s.users > 0) {
    std::discrete_distribution<int> impress(popularity.begin(), popularity.end());
    std::uniform_int_distribution<std::int64_t> when(0, s.duration_s - 1);
    for (const UserTruth& t : w.truth) {
      for (int j = 0; j < s.impressions_per_user; ++j) {
        const int item = impress(rng);
        const auto& topics = w.item_topics[static_cast<std::size_t>(item)];
        double affinity = 0.0;
        for (int topic : topics) {
          if (topic == t.primary_topic) affinity = std::max(affinity, 1.0);
          if (topic == t.secondary_topic) affinity = std::max(affinity, s.secondary_weight);
        }
        const double logit = s.click_bias + s.click_scale * affinity + s.activity_scale * (t.activity - 0.5);
        const int click = unif(rng) < 1.0 / (1.0 + std::exp(-logit)) ? 1 : 0;
        w.dataset.events.push_back({t.user_id, w.dataset.items[static_cast<std::size_t>(item)].item_id, click,
                                    s.start_ts + when(rng)});
      }
    }
  }
  std::stable_sort(w.dataset.events.begin(), w.dataset.events.end(),
                   [](const auto& a, const auto& b) { return a.ts < b.ts; });
  return w;
}

void write_world(const SyntheticWorld& w, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
  io::atomic_write(path("schema.json"), io::schema_to_json(w.dataset.schema) + "\n");
  std::ostringstream users, items, events, truth;
  for (const auto& u : w.dataset.users) users << io::user_to_json(u, w.dataset.schema) << '\n';
  for (const auto& i : w.dataset.items) items << io::item_to_json(i) << '\n';
  for (const auto& e : w.dataset.events) events << io::event_to_json(e) << '\n';
  for (const auto& t : w.truth) {
    nlohmann::json j{{"user_id", t.user_id},
                     {"primary_topic", t.primary_topic},
                     {"secondary_topic", t.secondary_topic},
                     {"activity", t.activity}};
    truth << j.dump() << '\n';
  }
  io::atomic_write(path("users.jsonl"), users.str());
  io::atomic_write(path("items.jsonl"), items.str());
  io::atomic_write(path("events.jsonl"), events.str());
  io::atomic_write(path("ground_truth.jsonl"), truth.str());
}

}  // namespace ralm::eval
