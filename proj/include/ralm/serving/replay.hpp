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
#include <istream>
#include <string>
#include <vector>

#include "ralm/serving/service.hpp"

namespace ralm::serving {

struct ReplayOptions {
  /// Simulated re-cluster cadence; 0 takes the service's cadence.
  std::int64_t tick_every_ms = 0;
  /// Issue one score request after this many clicks; 0 disables scoring.
  std::size_t score_every = 500;
  std::size_t score_top_n = 10;
  /// Simulated seconds per wall second; 0 replays as fast as possible.
  double speed_factor = 0.0;
  std::uint64_t seed = 1;
};

struct GrowthPoint {
  std::size_t events = 0;
  std::size_t candidates = 0;
  std::size_t total_seeds = 0;
  std::uint64_t snapshot_version = 0;
};

struct ReplayReport {
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t clicks = 0;
  std::size_t non_clicks = 0;
  std::size_t rejected = 0;
  std::size_t ticks = 0;
  std::size_t reclustered = 0;
  std::uint64_t final_version = 0;
  std::size_t candidates = 0;
  std::size_t total_seeds = 0;
  std::size_t score_requests = 0;
  std::size_t score_failures = 0;
  /// Wall-clock scoring latency, milliseconds.
  double latency_p50_ms = 0.0;
  double latency_p95_ms = 0.0;
  double latency_p99_ms = 0.0;
  double latency_max_ms = 0.0;
  std::vector<GrowthPoint> growth;

  /// Latencies are included only when `with_latency` is set; everything
  /// else is a deterministic function of the input and options.
  std::string to_json(bool with_latency = true) const;
};

/// Feeds an events.jsonl stream through the service. Clicks are ingested in
/// arrival order; a tick fires whenever simulated time (event ts) has moved
/// one cadence past the previous tick, and once more after the last event.
ReplayReport replay(SeedService& service, std::istream& events, const ReplayOptions& options = {});
ReplayReport replay_file(SeedService& service, const std::string& path, const ReplayOptions& options = {});

/// Nearest-rank percentile of unsorted samples; 0 for an empty set.
double percentile(std::vector<double> samples, double q);

}  // namespace ralm::serving
