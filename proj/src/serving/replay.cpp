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


#include "ralm/serving/replay.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "json.hpp"
#include "ralm/errors.hpp"
#include "ralm/io/jsonl.hpp"

namespace ralm::serving {

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) return 0.0;
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("percentile: q must lie in [0, 1]");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  return samples[std::max<std::size_t>(rank, 1) - 1];
}

std::string ReplayReport::to_json(bool with_latency) const {
  nlohmann::ordered_json j;
  j["lines"] = lines;
  j["malformed"] = malformed;
  j["clicks"] = clicks;
  j["non_clicks"] = non_clicks;
  j["rejected"] = rejected;
  j["ticks"] = ticks;
  j["reclustered"] = reclustered;
  j["final_version"] = final_version;
  j["candidates"] = candidates;
  j["total_seeds"] = total_seeds;
  j["score_requests"] = score_requests;
  j["score_failures"] = score_failures;
  if (with_latency) {
    j["latency_ms"] = {{"p50", latency_p50_ms}, {"p95", latency_p95_ms},
                       {"p99", latency_p99_ms}, {"max", latency_max_ms}};
  }
  auto& g = j["growth"] = nlohmann::ordered_json::array();
  for (const auto& p : growth) {
    g.push_back({{"events", p.events}, {"candidates", p.candidates},
                 {"total_seeds", p.total_seeds}, {"snapshot_version", p.snapshot_version}});
  }
  return j.dump(2);
}

ReplayReport replay(SeedService& service, std::istream& events, const ReplayOptions& options) {
  if (options.speed_factor < 0) throw ConfigError("speed_factor must be >= 0");
  const std::int64_t cadence =
      options.tick_every_ms > 0 ? options.tick_every_ms : service.config().recluster_cadence_ms;
  ReplayReport report;
  std::vector<double> latencies;
  std::mt19937_64 rng(options.seed);
  const auto& users = service.embeddings().ids();

  std::optional<std::int64_t> last_tick, first_ts;
  const auto wall_start = std::chrono::steady_clock::now();
  auto tick = [&](std::int64_t now_ms) {
    report.reclustered += service.recluster_tick(now_ms);
    ++report.ticks;
    last_tick = now_ms;
  };
  auto sample = [&] {
    const ServiceStats s = service.stats();
    report.growth.push_back({report.clicks, s.candidates, s.total_seeds, s.snapshot_version});
  };

  std::string line;
  while (std::getline(events, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++report.lines;
    rep::InteractionEvent ev;
    if (!io::parse_event(line, ev)) {
      ++report.malformed;
      continue;
    }
    const std::int64_t now_ms = ev.ts * 1000;
    if (!first_ts) first_ts = ev.ts;
    if (options.speed_factor > 0) {
      const auto due = wall_start + std::chrono::duration<double>(
                                        static_cast<double>(ev.ts - *first_ts) / options.speed_factor);
      std::this_thread::sleep_until(due);
    }
    if (!last_tick) {
      last_tick = now_ms;
    } else if (now_ms - *last_tick >= cadence) {
      tick(now_ms);
    }
    if (ev.is_click != 1) {
      ++report.non_clicks;
      continue;
    }
    if (!service.ingest_click({ev.user_id, ev.item_id, ev.ts})) {
      ++report.rejected;
      continue;
    }
    ++report.clicks;
    if (options.score_every > 0 && report.clicks % options.score_every == 0) {
      sample();
      if (!users.empty()) {
        const std::string& uid = users[std::uniform_int_distribution<std::size_t>(0, users.size() - 1)(rng)];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          service.score(uid, options.score_top_n);
          latencies.push_back(
              std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        } catch (const Error&) {
          ++report.score_failures;
        }
        ++report.score_requests;
      }
    }
  }
  if (last_tick) tick(*last_tick + cadence);
  sample();

  const ServiceStats s = service.stats();
  report.final_version = s.snapshot_version;
  report.candidates = s.candidates;
  report.total_seeds = s.total_seeds;
  report.latency_p50_ms = percentile(latencies, 0.50);
  report.latency_p95_ms = percentile(latencies, 0.95);
  report.latency_p99_ms = percentile(latencies, 0.99);
  report.latency_max_ms = percentile(latencies, 1.0);
  return report;
}

ReplayReport replay_file(SeedService& service, const std::string& path, const ReplayOptions& options) {
  std::ifstream in(path);
  if (!in) throw DependencyError("cannot open events file " + path);
  return replay(service, in, options);
}

}  // namespace ralm::serving
