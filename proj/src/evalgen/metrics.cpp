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

#include "ralm/evalgen/metrics.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace ralm::eval {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with average ranks over tie blocks.
  double rank_sum_pos = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum_pos += avg_rank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetricError("auc: needs both positive and negative samples");
  const double np = static_cast<double>(pos);
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(neg));
}

double auc(std::span<const EvalSample> samples) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(samples.size());
  labels.reserve(samples.size());
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw ArgumentError("auc: non-finite score");
    scores.push_back(s.score);
    labels.push_back(s.label);
  }
  return auc(scores, labels);
}

double random_prec_at_k(std::span<const std::size_t> read_set_sizes, std::size_t candidate_count,
                        std::size_t k) {
  if (candidate_count == 0) throw ArgumentError("random_prec_at_k: no candidates");
  double total = 0.0;
  std::size_t users = 0;
  const double top = static_cast<double>(std::min(k, candidate_count));
  for (std::size_t s : read_set_sizes) {
    if (s == 0) continue;
    const double expected_hits = top * static_cast<double>(s) / static_cast<double>(candidate_count);
    total += expected_hits / static_cast<double>(std::min(k, s));
    ++users;
  }
  if (users == 0) throw UndefinedMetricError("random_prec_at_k: no user has a non-empty read set");
  return total / static_cast<double>(users);
}

DiversityReport diversity(std::span<const ReadEvent> reads, std::span<const io::ItemRecord> taxonomy) {
  std::unordered_map<std::string, const io::ItemRecord*> by_id;
  for (const auto& item : taxonomy) by_id[item.item_id] = &item;
  struct DaySets {
    std::set<std::string> categories;
    std::set<std::string> tags;
  };
  std::map<std::pair<std::string, std::int64_t>, DaySets> days;
  for (const auto& r : reads) {
    const std::int64_t day = r.ts >= 0 ? r.ts / 86400 : -((-r.ts + 86399) / 86400);
    DaySets& ds = days[{r.user_id, day}];
    auto it = by_id.find(r.item_id);
    if (it == by_id.end()) continue;
    ds.categories.insert(it->second->categories.begin(), it->second->categories.end());
    ds.tags.insert(it->second->tags.begin(), it->second->tags.end());
  }
  DiversityReport report;
  report.user_days = days.size();
  if (days.empty()) return report;
  for (const auto& [key, ds] : days) {
    report.categories_per_user_day += static_cast<double>(ds.categories.size());
    report.tags_per_user_day += static_cast<double>(ds.tags.size());
  }
  report.categories_per_user_day /= static_cast<double>(days.size());
  report.tags_per_user_day /= static_cast<double>(days.size());
  return report;
}

double gini(std::span<const double> counts) {
  if (counts.empty()) throw UndefinedMetricError("gini: no items");
  std::vector<double> x(counts.begin(), counts.end());
  for (double c : x) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ArgumentError("gini: counts must be finite and >= 0");
  }
  std::sort(x.begin(), x.end());
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  if (total <= 0.0) throw UndefinedMetricError("gini: all counts are zero");
  const double n = static_cast<double>(x.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) weighted += static_cast<double>(i + 1) * x[i];
  return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

bool is_holdout_user(const std::string& user_id, double fraction, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : user_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  const std::uint64_t mixed = splitmix64(h ^ splitmix64(seed));
  const double u = static_cast<double>(mixed >> 11) * 0x1.0p-53;
  return u < fraction;
}

}  // namespace ralm::eval
