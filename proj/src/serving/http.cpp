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


#include "ralm/serving/http.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "ralm/errors.hpp"

namespace ralm::serving {
namespace {

using nlohmann::json;

HttpReply error_reply(int status, const std::string& code, const std::string& message) {
  return {status, json{{"error", code}, {"message", message}}.dump()};
}

}  // namespace

std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

HttpReply handle_score(const SeedService& service, const std::string& body) {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    return error_reply(400, "bad_request", e.what());
  }
  if (!req.is_object() || !req.contains("user_id") || !req["user_id"].is_string()) {
    return error_reply(400, "bad_request", "user_id (string) is required");
  }
  std::size_t top_n = 0;
  if (req.contains("top_n")) {
    if (!req["top_n"].is_number_integer() || req["top_n"].get<std::int64_t>() < 0) {
      return error_reply(400, "bad_request", "top_n must be a non-negative integer");
    }
    top_n = req["top_n"].get<std::size_t>();
  }
  std::vector<std::string> filter;
  if (req.contains("candidates")) {
    if (!req["candidates"].is_array()) return error_reply(400, "bad_request", "candidates must be a list");
    for (const auto& c : req["candidates"]) {
      if (!c.is_string()) return error_reply(400, "bad_request", "candidate ids must be strings");
      filter.push_back(c.get<std::string>());
    }
  }
  ScoreResponse res;
  try {
    res = service.score(req["user_id"].get<std::string>(), top_n, filter);
  } catch (const UserNotFoundError& e) {
    return error_reply(404, "user_not_found", e.what());
  } catch (const DegenerateVectorError& e) {
    return error_reply(422, "degenerate_user", e.what());
  }
  json out{{"results", json::array()}, {"skipped", res.skipped}};
  for (const auto& r : res.results) {
    out["results"].push_back({{"candidate_id", r.candidate_id},
                              {"score", r.score},
                              {"global_sim", r.global_sim},
                              {"local_sim", r.local_sim},
                              {"seeds_version", r.seeds_version},
                              {"low_confidence", r.low_confidence}});
  }
  return {200, out.dump()};
}

HttpReply handle_event(SeedService& service, const std::string& body) {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    return error_reply(400, "bad_request", e.what());
  }
  ClickEvent ev;
  bool ok = req.is_object() && req.contains("user_id") && req["user_id"].is_string() &&
            req.contains("candidate_id") && req["candidate_id"].is_string() &&
            (!req.contains("ts") || req["ts"].is_number_integer());
  if (ok) {
    ev.user_id = req["user_id"].get<std::string>();
    ev.candidate_id = req["candidate_id"].get<std::string>();
    ev.ts = req.value("ts", std::int64_t{0});
    ok = service.ingest_click(ev);
  }
  return {200, json{{"accepted", ok}}.dump()};
}

HttpReply handle_candidate(const SeedService& service, const std::string& candidate_id) {
  const auto info = service.candidate_info(candidate_id);
  if (!info) return error_reply(404, "candidate_not_found", "unknown candidate " + candidate_id);
  json out{{"candidate_id", info->candidate_id},
           {"seed_count", info->seed_count},
           {"last_clustered_ts", nullptr},
           {"k", info->k},
           {"low_confidence", info->low_confidence}};
  if (info->last_clustered_ms) out["last_clustered_ts"] = *info->last_clustered_ms;
  return {200, out.dump()};
}

HttpReply handle_healthz(const SeedService& service) {
  const ServiceStats s = service.stats();
  return {200, json{{"status", "ok"},
                    {"snapshot_version", s.snapshot_version},
                    {"candidates", s.candidates}}
                   .dump()};
}

HttpServer::HttpServer(SeedService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server_->Post("/score", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_score(service_, req.body));
  });
  server_->Post("/event", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_event(service_, req.body));
  });
  server_->Get(R"(/candidates/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_candidate(service_, req.matches[1]));
  });
  server_->Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_healthz(service_));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::run(std::int64_t tick_every_ms, std::function<std::int64_t()> clock) {
  if (tick_every_ms <= 0) tick_every_ms = service_.config().recluster_cadence_ms;
  tick_every_ms = std::max<std::int64_t>(tick_every_ms, 10);
  std::thread ticker([&] {
    std::unique_lock lock(mu_);
    while (!stop_) {
      lock.unlock();
      service_.recluster_tick(clock());
      lock.lock();
      cv_.wait_for(lock, std::chrono::milliseconds(tick_every_ms), [&] { return stop_.load(); });
    }
    lock.unlock();
    server_->wait_until_ready();
    server_->stop();
  });
  server_->listen_after_bind();
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  ticker.join();
}

void HttpServer::stop() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace ralm::serving
