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


#include "ralm/serving/seed_set.hpp"

#include "ralm/errors.hpp"

namespace ralm::serving {

SeedSet::SeedSet(std::size_t cap) : cap_(cap) {
  if (cap_ == 0) throw ConfigError("seed_cap must be >= 1");
}

void SeedSet::insert(const std::string& user_id) {
  if (auto it = index_.find(user_id); it != index_.end()) {
    order_.splice(order_.end(), order_, it->second);
    return;
  }
  order_.push_back(user_id);
  index_.emplace(user_id, std::prev(order_.end()));
  if (order_.size() > cap_) {
    index_.erase(order_.front());
    order_.pop_front();
  }
}

}  // namespace ralm::serving
