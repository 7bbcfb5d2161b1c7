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

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "ralm/serving/service.hpp"

namespace httplib {
class Server;
}

namespace ralm::serving {

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// Transport-independent handlers; the server below only routes to them.
HttpReply handle_score(const SeedService& service, const std::string& body);
HttpReply handle_event(SeedService& service, const std::string& body);
HttpReply handle_candidate(const SeedService& service, const std::string& candidate_id);
HttpReply handle_healthz(const SeedService& service);

std::int64_t wall_clock_ms();

/// JSON over HTTP plus a background re-cluster loop.
class HttpServer {
 public:
  explicit HttpServer(SeedService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Ticks run every `tick_every_ms` (the service
  /// cadence when 0, at least 10 ms).
  void run(std::int64_t tick_every_ms = 0, std::function<std::int64_t()> clock = wall_clock_ms);
  /// Safe from any thread, including before run() starts.
  void stop();
  bool running() const;
  /// Blocks until the listener is up (or has already shut down).
  void wait_until_ready() const;

 private:
  SeedService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::atomic<bool> stop_{false};
};

}  // namespace ralm::serving
