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
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ralm/evalgen/metrics.hpp"
#include "ralm/evalgen/world.hpp"
#include "ralm/io/config.hpp"
#include "ralm/lookalike/campaign.hpp"
#include "ralm/lookalike/trainer.hpp"
#include "ralm/representation/trainer.hpp"
#include "ralm/serving/replay.hpp"
#include "ralm/serving/service.hpp"

namespace ralm::cli {

/// Every setting of the pipeline, merged from defaults, a key = value file
/// and command-line overrides (in that order of precedence, lowest first).
struct RunConfig {
  std::uint64_t seed = 1;
  std::string data_dir = "data";
  std::string model_dir = "artifacts";

  eval::SyntheticWorldSpec world;
  rep::RepresentationConfig rep;
  lookalike::CampaignOptions campaign;
  lookalike::LookalikeTrainConfig lookalike;
  std::vector<std::size_t> prec_k{10, 50};
  serving::ServingConfig serving;
  serving::ReplayOptions replay;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string events_path;
  std::string universal_path;
  std::string representation_path;
  std::string report_path;

  /// Throws ConfigError on unknown keys or invalid values.
  static RunConfig from(const io::KeyValueConfig& config);
  static const std::vector<std::string>& known_keys();
};

struct TrainRepSummary {
  double initial_train_loss = 0.0;
  std::vector<rep::EpochMetrics> epochs;
};

struct TrainLookalikeSummary {
  double initial_train_loss = 0.0;
  std::vector<lookalike::LookalikeEpochMetrics> epochs;
};

struct EvalReport {
  double auc = 0.0;
  double test_loss = 0.0;
  std::vector<std::size_t> prec_k;
  std::vector<double> prec_at_k;
  std::vector<double> random_prec_at_k;
  /// Over the top-K recommendations of every held-out user, read on one day.
  eval::DiversityReport diversity;
  double gini = 0.0;
  /// Same two metrics over the held-out users' logged clicks.
  eval::DiversityReport log_diversity;
  double log_gini = 0.0;
  std::size_t test_users = 0;
  std::size_t candidates = 0;

  std::string to_csv() const;
};

void cmd_gen(const RunConfig& cfg, std::ostream& out);
TrainRepSummary cmd_train_rep(const RunConfig& cfg, std::ostream& out);
TrainLookalikeSummary cmd_train_lookalike(const RunConfig& cfg, std::ostream& out);
EvalReport cmd_eval(const RunConfig& cfg, std::ostream& out);

struct ServeHooks {
  /// Runs on a helper thread once the server listens; the server stops
  /// when it returns. Unset means serve until SIGTERM or SIGINT.
  std::function<void(int port)> on_ready;
};
/// Bootstraps seed sets from the event log (if present), serves HTTP and
/// prints final stats on shutdown.
serving::ServiceStats cmd_serve(const RunConfig& cfg, std::ostream& out, const ServeHooks& hooks = {});
serving::ReplayReport cmd_replay(const RunConfig& cfg, std::ostream& out);

/// Parses arguments, runs one subcommand and maps failures to exit codes:
/// 0 success, 1 runtime failure, 2 usage or configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ralm::cli
