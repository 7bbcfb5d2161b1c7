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
#include <vector>

#include "ralm/io/jsonl.hpp"

namespace ralm::eval {

/// Knobs of the planted synthetic world. Every user has a primary and a
/// secondary interest topic; strong fields leak the primary topic with
/// probability `strong_coef`, weak fields leak the secondary topic with
/// probability `weak_coef`.
struct SyntheticWorldSpec {
  int users = 6000;
  int items = 200;
  int topics = 8;
  int strong_fields = 2;
  int weak_fields = 3;
  /// Field vocabulary is topics * tokens_per_topic.
  int tokens_per_topic = 12;
  double strong_coef = 0.8;
  double weak_coef = 0.4;
  /// Weight of the secondary topic in a user's interest vector.
  double secondary_weight = 0.7;
  /// Probability that a field is missing for a user.
  double missing_rate = 0.15;
  /// Items cover 1..max_item_topics topics; each extra topic is added with
  /// probability multi_topic_rate.
  int max_item_topics = 2;
  double multi_topic_rate = 0.5;
  int impressions_per_user = 40;
  /// Logistic click model: sigmoid(click_bias + click_scale * affinity + activity_scale * (activity - 0.5)).
  double click_bias = -3.0;
  double click_scale = 5.0;
  double activity_scale = 1.0;
  /// Zipf exponent of item popularity for impressions.
  double popularity_exponent = 0.6;
  std::int64_t start_ts = 1700000000;
  std::int64_t duration_s = 7 * 86400;
  std::uint64_t seed = 1;
};

struct UserTruth {
  std::string user_id;
  int primary_topic = 0;
  int secondary_topic = 0;
  double activity = 0.0;
};

struct SyntheticWorld {
  io::Dataset dataset;  // events sorted by ts
  std::vector<UserTruth> truth;
  std::vector<std::vector<int>> item_topics;
};

/// Deterministic under spec.seed. Throws ConfigError on an invalid spec.
SyntheticWorld generate_world(const SyntheticWorldSpec& spec);

/// Writes schema.json, users.jsonl, items.jsonl, events.jsonl and
/// ground_truth.jsonl into `dir`, creating it if needed.
void write_world(const SyntheticWorld& world, const std::string& dir);

}  // namespace ralm::eval
