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

#include "ralm/lookalike/campaign.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "ralm/evalgen/metrics.hpp"

namespace ralm::lookalike {

namespace {

constexpr std::uint64_t kSeedPoolSalt = 0x5eed9001ULL;

std::vector<Campaign::Example> sample_test_examples(const Campaign& c, std::uint64_t seed) {
  std::vector<Campaign::Example> out;
  if (c.test_users.empty()) return out;
  std::mt19937_64 rng(seed ^ 0x7e57ULL);
  std::uniform_int_distribution<std::size_t> pick(0, c.test_users.size() - 1);
  for (std::size_t cand = 0; cand < c.candidate_ids.size(); ++cand) {
    const auto& pos = c.test_positives[cand];
    if (pos.size() >= c.test_users.size()) continue;
    const std::set<int> clicked(pos.begin(), pos.end());
    for (int u : pos) {
      out.push_back({static_cast<int>(cand), u, 1.0});
      for (int j = 0; j < c.negative_ratio; ++j) {
        int v;
        do {
          v = c.test_users[pick(rng)];
        } while (clicked.count(v));
        out.push_back({static_cast<int>(cand), v, 0.0});
      }
    }
  }
  return out;
}

}  // namespace

Campaign build_campaign(const io::Dataset& ds, const io::EmbeddingStore& universal,
                        const CampaignOptions& opt) {
  if (universal.space() != io::EmbeddingSpace::kUniversal) {
    throw SchemaError("build_campaign: expected a universal embedding store");
  }
  if (opt.negative_ratio < 1) throw ConfigError("negative_ratio must be >= 1");
  if (opt.test_fraction < 0 || opt.test_fraction >= 1 || opt.seed_fraction <= 0 || opt.seed_fraction >= 1) {
    throw ConfigError("test_fraction must be in [0, 1) and seed_fraction in (0, 1)");
  }
  Campaign c;
  c.negative_ratio = opt.negative_ratio;
  c.user_ids = universal.ids();
  std::sort(c.user_ids.begin(), c.user_ids.end());
  c.universal.resize(static_cast<Eigen::Index>(c.user_ids.size()), universal.dim());
  std::unordered_map<std::string, int> user_index;
  enum class Role { kSeed, kTarget, kTest };
  std::vector<Role> role(c.user_ids.size());
  for (std::size_t i = 0; i < c.user_ids.size(); ++i) {
    const std::string& id = c.user_ids[i];
    user_index.emplace(id, static_cast<int>(i));
    c.universal.row(static_cast<Eigen::Index>(i)) = universal.row(*universal.find(id)).cast<double>();
    if (eval::is_holdout_user(id, opt.test_fraction, opt.seed)) {
      role[i] = Role::kTest;
      c.test_users.push_back(static_cast<int>(i));
    } else if (eval::is_holdout_user(id, opt.seed_fraction, opt.seed ^ kSeedPoolSalt)) {
      role[i] = Role::kSeed;
    } else {
      role[i] = Role::kTarget;
      c.target_pool.push_back(static_cast<int>(i));
    }
  }

  struct Clickers {
    std::set<int> seed, target, test;
  };
  std::map<std::string, Clickers> by_item;
  for (const auto& e : ds.events) {
    if (e.is_click != 1) continue;
    auto it = user_index.find(e.user_id);
    if (it == user_index.end()) continue;
    Clickers& cl = by_item[e.item_id];
    switch (role[static_cast<std::size_t>(it->second)]) {
      case Role::kSeed: cl.seed.insert(it->second); break;
      case Role::kTarget: cl.target.insert(it->second); break;
      case Role::kTest: cl.test.insert(it->second); break;
    }
  }
  for (auto& [item, cl] : by_item) {
    if (cl.seed.size() < std::max<std::size_t>(opt.min_seeds, 1)) continue;
    c.candidate_ids.push_back(item);
    c.seeds.emplace_back(cl.seed.begin(), cl.seed.end());
    c.train_positives.emplace_back(cl.target.begin(), cl.target.end());
    c.test_positives.emplace_back(cl.test.begin(), cl.test.end());
  }
  c.test_examples = sample_test_examples(c, opt.seed);
  return c;
}

}  // namespace ralm::lookalike
