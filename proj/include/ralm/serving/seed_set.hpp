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
#include <list>
#include <string>
#include <unordered_map>
#include <vector>

namespace ralm::serving {

/// Distinct user ids in click order, capped. A repeat click moves the user
/// to the newest position; overflow evicts the oldest.
class SeedSet {
 public:
  explicit SeedSet(std::size_t cap);

  void insert(const std::string& user_id);
  bool contains(const std::string& user_id) const { return index_.count(user_id) > 0; }
  /// Oldest first.
  std::vector<std::string> members() const { return {order_.begin(), order_.end()}; }
  std::size_t size() const { return order_.size(); }
  std::size_t cap() const { return cap_; }

 private:
  std::size_t cap_;
  std::list<std::string> order_;
  std::unordered_map<std::string, std::list<std::string>::iterator> index_;
};

}  // namespace ralm::serving
