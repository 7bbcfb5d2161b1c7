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


#include "ralm/cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ralm/errors.hpp"
#include "ralm/evalgen/metrics.hpp"
#include "ralm/io/binary.hpp"
#include "ralm/io/jsonl.hpp"
#include "ralm/serving/http.hpp"

namespace ralm::cli {
namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    io::KeyValueConfig one;
    one.set(key, part);
    const std::int64_t v = one.get_int(key, 0);
    if (v < 1) throw ConfigError("config key " + key + ": entries must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("config key " + key + ": empty list");
  return out;
}

std::vector<int> to_ints(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

int get_int(const io::KeyValueConfig& c, const std::string& key, int fallback, int min) {
  const std::int64_t v = c.get_int(key, fallback);
  if (v < min || v > std::numeric_limits<int>::max()) {
    throw ConfigError("config key " + key + " must be >= " + std::to_string(min));
  }
  return static_cast<int>(v);
}

std::size_t get_size(const io::KeyValueConfig& c, const std::string& key, std::size_t fallback, std::size_t min) {
  const std::int64_t v = c.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < static_cast<std::int64_t>(min)) {
    throw ConfigError("config key " + key + " must be >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(v);
}

double get_positive(const io::KeyValueConfig& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v > 0)) throw ConfigError("config key " + key + " must be > 0");
  return v;
}

void require_file(const std::string& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw DependencyError("missing prerequisite " + path + " (run " + producer + " first)");
  }
}

io::Dataset load_data(const RunConfig& cfg) {
  require_file(join(cfg.data_dir, "schema.json"), "gen");
  require_file(join(cfg.data_dir, "users.jsonl"), "gen");
  require_file(join(cfg.data_dir, "events.jsonl"), "gen");
  return io::load_dataset(cfg.data_dir);
}

lookalike::LookalikeModel load_model(const RunConfig& cfg) {
  require_file(cfg.serving.model_path, "train-lookalike");
  return lookalike::LookalikeModel::load(cfg.serving.model_path);
}

io::EmbeddingStore load_store(const std::string& path, io::EmbeddingSpace space, const std::string& producer) {
  require_file(path, producer);
  io::EmbeddingStore store = io::EmbeddingStore::read(path);
  if (store.space() != space) throw SchemaError(path + ": embedding store is in the wrong space");
  return store;
}

std::atomic<bool> g_terminate{false};

extern "C" void on_terminate_signal(int) { g_terminate = true; }

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = {
      "seed", "data_dir", "model_dir",
      // world
      "users", "items", "topics", "strong_fields", "weak_fields", "tokens_per_topic", "strong_coef",
      "weak_coef", "secondary_weight", "missing_rate", "max_item_topics", "multi_topic_rate",
      "impressions_per_user", "click_bias", "click_scale", "activity_scale", "popularity_exponent",
      "start_ts", "duration_s",
      // shared training defaults
      "lr", "batch", "epochs",
      // representation
      "m", "k_a", "hidden", "merge", "rep_lr", "rep_batch", "rep_epochs", "negatives",
      "max_positives", "test_fraction",
      // look-alike
      "h", "s_a", "cluster_k", "alpha", "beta", "pooling", "lookalike_lr", "lookalike_batch",
      "lookalike_epochs", "kmeans_max_iters", "seed_fraction", "min_seeds", "negative_ratio",
      "prec_k",
      // serving
      "seed_cap", "recluster_cadence_ms", "confidence_floor", "lookalike_embeddings",
      "lookalike_model", "host", "port", "events", "universal_embeddings", "representation_model",
      "replay_report", "replay_score_every", "replay_top_n", "replay_speed", "replay_tick_ms"};
  return keys;
}

RunConfig RunConfig::from(const io::KeyValueConfig& c) {
  const std::set<std::string> known(known_keys().begin(), known_keys().end());
  for (const auto& [key, value] : c.values()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig r;
  const std::int64_t seed = c.get_int("seed", 1);
  if (seed < 0) throw ConfigError("seed must be >= 0");
  r.seed = static_cast<std::uint64_t>(seed);
  r.data_dir = c.get_string("data_dir", r.data_dir);
  r.model_dir = c.get_string("model_dir", r.model_dir);

  auto& w = r.world;
  w.users = get_int(c, "users", w.users, 0);
  w.items = get_int(c, "items", w.items, 0);
  w.topics = get_int(c, "topics", w.topics, 1);
  w.strong_fields = get_int(c, "strong_fields", w.strong_fields, 0);
  w.weak_fields = get_int(c, "weak_fields", w.weak_fields, 0);
  w.tokens_per_topic = get_int(c, "tokens_per_topic", w.tokens_per_topic, 1);
  w.strong_coef = c.get_double("strong_coef", w.strong_coef);
  w.weak_coef = c.get_double("weak_coef", w.weak_coef);
  w.secondary_weight = c.get_double("secondary_weight", w.secondary_weight);
  w.missing_rate = c.get_double("missing_rate", w.missing_rate);
  w.max_item_topics = get_int(c, "max_item_topics", w.max_item_topics, 1);
  w.multi_topic_rate = c.get_double("multi_topic_rate", w.multi_topic_rate);
  w.impressions_per_user = get_int(c, "impressions_per_user", w.impressions_per_user, 0);
  w.click_bias = c.get_double("click_bias", w.click_bias);
  w.click_scale = c.get_double("click_scale", w.click_scale);
  w.activity_scale = c.get_double("activity_scale", w.activity_scale);
  w.popularity_exponent = c.get_double("popularity_exponent", w.popularity_exponent);
  w.start_ts = c.get_int("start_ts", w.start_ts);
  w.duration_s = c.get_int("duration_s", w.duration_s);
  w.seed = r.seed;

  const double lr = get_positive(c, "lr", 0.001);
  const std::size_t batch = get_size(c, "batch", 256, 1);
  const int epochs = get_int(c, "epochs", 5, 0);

  auto& p = r.rep;
  p.tower.embedding_dim = get_int(c, "m", 16, 1);
  p.tower.attention_size = get_int(c, "k_a", 16, 1);
  if (c.contains("hidden")) p.tower.hidden = to_ints(parse_sizes("hidden", c.get_string("hidden", "")));
  p.tower.merge = rep::merge_mode_from_string(c.get_string("merge", "attention"));
  p.adam.learning_rate = get_positive(c, "rep_lr", lr);
  p.limits.batch_size = get_size(c, "rep_batch", batch, 1);
  p.limits.negatives_per_positive = get_size(c, "negatives", p.limits.negatives_per_positive, 1);
  p.limits.max_positives_per_user = get_size(c, "max_positives", p.limits.max_positives_per_user, 1);
  p.epochs = get_int(c, "rep_epochs", epochs, 0);
  p.test_fraction = c.get_double("test_fraction", p.test_fraction);
  if (!(p.test_fraction > 0 && p.test_fraction < 1)) throw ConfigError("test_fraction must lie in (0, 1)");
  p.seed = r.seed;

  auto& cp = r.campaign;
  cp.test_fraction = p.test_fraction;
  cp.seed_fraction = c.get_double("seed_fraction", cp.seed_fraction);
  if (!(cp.seed_fraction > 0 && cp.seed_fraction < 1)) throw ConfigError("seed_fraction must lie in (0, 1)");
  cp.min_seeds = get_size(c, "min_seeds", cp.min_seeds, 1);
  cp.negative_ratio = get_int(c, "negative_ratio", cp.negative_ratio, 1);
  cp.seed = r.seed;

  auto& l = r.lookalike;
  l.model.universal_dim = p.tower.embedding_dim;
  l.model.lookalike_dim = get_int(c, "h", 16, 1);
  l.model.global_attention_size = get_int(c, "s_a", 16, 1);
  l.model.merge_attention_size = p.tower.attention_size;
  l.model.cluster_k = get_int(c, "cluster_k", 20, 1);
  l.model.weights.alpha = c.get_double("alpha", 0.3);
  l.model.weights.beta = c.get_double("beta", 0.7);
  if (!(l.model.weights.alpha >= 0) || !(l.model.weights.beta >= 0)) {
    throw ConfigError("alpha and beta must be >= 0");
  }
  l.model.pooling = lookalike::pooling_mode_from_string(c.get_string("pooling", "attention"));
  l.adam.learning_rate = get_positive(c, "lookalike_lr", lr);
  l.batch_size = get_size(c, "lookalike_batch", batch, 1);
  l.epochs = get_int(c, "lookalike_epochs", epochs, 0);
  l.kmeans_max_iters = get_int(c, "kmeans_max_iters", l.kmeans_max_iters, 1);
  l.seed = r.seed;
  if (c.contains("prec_k")) r.prec_k = parse_sizes("prec_k", c.get_string("prec_k", ""));
  l.prec_k = r.prec_k;

  r.serving = serving::ServingConfig::from(c);
  r.serving.kmeans.max_iters = l.kmeans_max_iters;
  r.serving.kmeans.seed = r.seed;
  r.serving.embeddings_path = c.get_string("lookalike_embeddings", join(r.model_dir, "lookalike.emb"));
  r.serving.model_path = c.get_string("lookalike_model", join(r.model_dir, "lookalike.bin"));

  r.replay.score_every = get_size(c, "replay_score_every", r.replay.score_every, 0);
  r.replay.score_top_n = get_size(c, "replay_top_n", r.replay.score_top_n, 1);
  r.replay.speed_factor = c.get_double("replay_speed", r.replay.speed_factor);
  if (!(r.replay.speed_factor >= 0)) throw ConfigError("replay_speed must be >= 0");
  r.replay.tick_every_ms = c.get_int("replay_tick_ms", r.replay.tick_every_ms);
  if (r.replay.tick_every_ms < 0) throw ConfigError("replay_tick_ms must be >= 0");
  r.replay.seed = r.seed;

  r.host = c.get_string("host", r.host);
  r.port = get_int(c, "port", r.port, 0);
  if (r.port > 65535) throw ConfigError("port must be <= 65535");
  r.events_path = c.get_string("events", join(r.data_dir, "events.jsonl"));
  r.universal_path = c.get_string("universal_embeddings", join(r.model_dir, "universal.emb"));
  r.representation_path = c.get_string("representation_model", join(r.model_dir, "representation.bin"));
  r.report_path = c.get_string("replay_report", join(r.model_dir, "replay.json"));
  return r;
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "metric,value\n";
  os << "auc," << auc << '\n' << "test_loss," << test_loss << '\n';
  for (std::size_t i = 0; i < prec_k.size(); ++i) {
    os << "prec@" << prec_k[i] << ',' << prec_at_k[i] << '\n';
    os << "random_prec@" << prec_k[i] << ',' << random_prec_at_k[i] << '\n';
  }
  os << "categories_per_user_day," << diversity.categories_per_user_day << '\n';
  os << "tags_per_user_day," << diversity.tags_per_user_day << '\n';
  os << "gini," << gini << '\n';
  os << "log_categories_per_user_day," << log_diversity.categories_per_user_day << '\n';
  os << "log_tags_per_user_day," << log_diversity.tags_per_user_day << '\n';
  os << "log_gini," << log_gini << '\n';
  return os.str();
}

void cmd_gen(const RunConfig& cfg, std::ostream& out) {
  const eval::SyntheticWorld world = eval::generate_world(cfg.world);
  eval::write_world(world, cfg.data_dir);
  out << "wrote " << world.dataset.users.size() << " users, " << world.dataset.items.size() << " items, "
      << world.dataset.events.size() << " events to " << cfg.data_dir << '\n';
}

TrainRepSummary cmd_train_rep(const RunConfig& cfg, std::ostream& out) {
  const io::Dataset ds = load_data(cfg);
  out << "phase 1: " << ds.users.size() << " users, " << ds.events.size() << " events, merge "
      << rep::to_string(cfg.rep.tower.merge) << '\n';
  const rep::RepresentationResult res = rep::train_representation(ds, cfg.rep, [&](const rep::EpochMetrics& m) {
    out << "  epoch " << m.epoch << " train_loss " << m.train_loss << " test_loss " << m.test_loss
        << " test_auc " << m.test_auc << '\n';
  });
  fs::create_directories(cfg.model_dir);
  res.embeddings.write(cfg.universal_path);
  rep::save_representation(res, cfg.representation_path);
  io::atomic_write(join(cfg.model_dir, "rep_metrics.csv"), rep::metrics_csv(res.epochs));
  out << "wrote " << cfg.universal_path << '\n';
  return {res.initial_train_loss, res.epochs};
}

TrainLookalikeSummary cmd_train_lookalike(const RunConfig& cfg, std::ostream& out) {
  const io::EmbeddingStore universal = load_store(cfg.universal_path, io::EmbeddingSpace::kUniversal, "train-rep");
  const io::Dataset ds = load_data(cfg);
  const lookalike::Campaign campaign = lookalike::build_campaign(ds, universal, cfg.campaign);
  lookalike::LookalikeTrainConfig lc = cfg.lookalike;
  lc.model.universal_dim = static_cast<int>(universal.dim());
  lc.prec_every_epoch = false;
  out << "phase 2: " << campaign.candidate_ids.size() << " candidates, " << campaign.target_pool.size()
      << " target users, " << campaign.test_users.size() << " test users, pooling "
      << lookalike::to_string(lc.model.pooling) << ", k " << lc.model.cluster_k << '\n';
  const lookalike::LookalikeResult res =
      lookalike::train_lookalike(campaign, lc, [&](const lookalike::LookalikeEpochMetrics& m) {
        out << "  epoch " << m.epoch << " train_loss " << m.train_loss << " test_loss " << m.test_loss
            << " test_auc " << m.test_auc;
        for (std::size_t i = 0; i < m.prec_at_k.size(); ++i) {
          out << " prec@" << lc.prec_k[i] << ' ' << m.prec_at_k[i];
        }
        out << '\n';
      });
  fs::create_directories(cfg.model_dir);
  res.model.save(cfg.serving.model_path);
  res.embeddings.write(cfg.serving.embeddings_path);
  io::atomic_write(join(cfg.model_dir, "lookalike_metrics.csv"),
                   lookalike::lookalike_metrics_csv(res.epochs, lc.prec_k));
  out << "initial train loss " << res.initial_train_loss << ", final "
      << (res.epochs.empty() ? res.initial_train_loss : res.epochs.back().train_loss) << '\n';
  out << "wrote " << cfg.serving.model_path << " and " << cfg.serving.embeddings_path << '\n';
  return {res.initial_train_loss, res.epochs};
}

EvalReport cmd_eval(const RunConfig& cfg, std::ostream& out) {
  lookalike::LookalikeModel model = load_model(cfg);
  const io::EmbeddingStore universal = load_store(cfg.universal_path, io::EmbeddingSpace::kUniversal, "train-rep");
  const io::Dataset ds = load_data(cfg);
  const lookalike::Campaign c = lookalike::build_campaign(ds, universal, cfg.campaign);
  if (c.test_examples.empty() || c.test_users.empty()) {
    throw UndefinedMetricError("eval: the held-out test set is empty");
  }
  const DenseMatrix transformed = model.transform(c.universal);
  const auto clusters = lookalike::cluster_candidates(c, transformed, model.config().cluster_k,
                                                      cfg.lookalike.kmeans_max_iters, cfg.seed);
  const auto centroids = lookalike::centroids_of(clusters);
  const lookalike::HeldOutMetrics h = lookalike::evaluate_campaign(model, c, transformed, centroids, cfg.prec_k);

  EvalReport r;
  r.auc = h.auc;
  r.test_loss = h.loss;
  r.prec_k = cfg.prec_k;
  r.prec_at_k = h.prec_at_k;
  r.random_prec_at_k = h.random_prec_at_k;
  r.test_users = c.test_users.size();
  r.candidates = c.candidate_ids.size();

  // Simulated log: every held-out user reads its top-K recommendations on one day.
  const std::size_t top = cfg.prec_k.front();
  const auto ranks = lookalike::rank_candidates(model, c, transformed, centroids);
  std::vector<eval::ReadEvent> reads;
  std::vector<double> exposure(c.candidate_ids.size(), 0.0);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    for (std::size_t j = 0; j < std::min(top, ranks[i].size()); ++j) {
      const auto cand = static_cast<std::size_t>(ranks[i][j]);
      reads.push_back({c.user_ids[static_cast<std::size_t>(c.test_users[i])], c.candidate_ids[cand],
                       cfg.world.start_ts});
      exposure[cand] += 1.0;
    }
  }
  r.diversity = eval::diversity(reads, ds.items);
  r.gini = eval::gini(exposure);

  std::map<std::string, std::size_t> cand_index;
  for (std::size_t i = 0; i < c.candidate_ids.size(); ++i) cand_index[c.candidate_ids[i]] = i;
  std::set<std::string> test_ids;
  for (int u : c.test_users) test_ids.insert(c.user_ids[static_cast<std::size_t>(u)]);
  std::vector<eval::ReadEvent> logged;
  std::vector<double> clicks(c.candidate_ids.size(), 0.0);
  for (const auto& e : ds.events) {
    if (e.is_click != 1 || !test_ids.count(e.user_id)) continue;
    logged.push_back({e.user_id, e.item_id, e.ts});
    if (auto it = cand_index.find(e.item_id); it != cand_index.end()) clicks[it->second] += 1.0;
  }
  r.log_diversity = eval::diversity(logged, ds.items);
  try {
    r.log_gini = eval::gini(clicks);
  } catch (const UndefinedMetricError&) {
    r.log_gini = 0.0;
  }

  out << std::fixed << std::setprecision(4);
  out << "held-out users " << r.test_users << ", candidates " << r.candidates << '\n';
  out << "AUC        " << r.auc << '\n';
  for (std::size_t i = 0; i < r.prec_k.size(); ++i) {
    out << "prec@" << std::left << std::setw(6) << r.prec_k[i] << r.prec_at_k[i] << "  (random "
        << r.random_prec_at_k[i] << ")\n";
  }
  out << "diversity  " << r.diversity.categories_per_user_day << " categories, "
      << r.diversity.tags_per_user_day << " tags per user-day (logged: "
      << r.log_diversity.categories_per_user_day << ", " << r.log_diversity.tags_per_user_day << ")\n";
  out << "gini       " << r.gini << " (logged: " << r.log_gini << ")\n";
  out.unsetf(std::ios::fixed);
  fs::create_directories(cfg.model_dir);
  io::atomic_write(join(cfg.model_dir, "eval.csv"), r.to_csv());
  return r;
}

namespace {

std::unique_ptr<serving::SeedService> make_service(const RunConfig& cfg) {
  auto model = std::make_shared<const lookalike::LookalikeModel>(load_model(cfg));
  auto store = std::make_shared<const io::EmbeddingStore>(
      load_store(cfg.serving.embeddings_path, io::EmbeddingSpace::kLookalike, "train-lookalike"));
  return std::make_unique<serving::SeedService>(cfg.serving, std::move(model), std::move(store));
}

void print_stats(const serving::ServiceStats& s, std::ostream& out) {
  out << "events_accepted " << s.events_accepted << ", events_rejected " << s.events_rejected << ", ticks "
      << s.ticks << ", reclustered " << s.reclustered << ", score_requests " << s.score_requests
      << ", candidates " << s.candidates << ", total_seeds " << s.total_seeds << ", snapshot_version "
      << s.snapshot_version << '\n';
}

}  // namespace

serving::ServiceStats cmd_serve(const RunConfig& cfg, std::ostream& out, const ServeHooks& hooks) {
  auto service = make_service(cfg);
  if (fs::exists(cfg.events_path)) {
    serving::ReplayOptions boot = cfg.replay;
    boot.score_every = 0;
    boot.speed_factor = 0.0;
    const serving::ReplayReport r = serving::replay_file(*service, cfg.events_path, boot);
    out << "bootstrapped " << r.clicks << " clicks from " << cfg.events_path << ", snapshot version "
        << r.final_version << '\n';
  }
  serving::HttpServer server(*service);
  const int port = server.bind(cfg.host, cfg.port);
  out << "listening on http://" << cfg.host << ':' << port << std::endl;

  g_terminate = false;
  auto previous_term = std::signal(SIGTERM, on_terminate_signal);
  auto previous_int = std::signal(SIGINT, on_terminate_signal);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done) {
      if (g_terminate) {
        server.stop();
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  std::thread driver;
  if (hooks.on_ready) {
    driver = std::thread([&] {
      server.wait_until_ready();
      hooks.on_ready(port);
      server.stop();
    });
  }
  server.run();
  done = true;
  watcher.join();
  if (driver.joinable()) driver.join();
  std::signal(SIGTERM, previous_term);
  std::signal(SIGINT, previous_int);

  const serving::ServiceStats stats = service->stats();
  out << "shutdown: ";
  print_stats(stats, out);
  out.flush();
  return stats;
}

serving::ReplayReport cmd_replay(const RunConfig& cfg, std::ostream& out) {
  auto service = make_service(cfg);
  require_file(cfg.events_path, "gen");
  const serving::ReplayReport r = serving::replay_file(*service, cfg.events_path, cfg.replay);
  fs::path report(cfg.report_path);
  if (report.has_parent_path()) fs::create_directories(report.parent_path());
  io::atomic_write(cfg.report_path, r.to_json() + "\n");
  out << "replayed " << r.lines << " events (" << r.clicks << " clicks, " << r.malformed << " malformed), "
      << r.ticks << " ticks, snapshot version " << r.final_version << ", " << r.candidates << " candidates, "
      << r.total_seeds << " seeds\n";
  out << "score latency p50 " << r.latency_p50_ms << " ms, p99 " << r.latency_p99_ms << " ms over "
      << r.score_requests << " requests\n";
  out << "wrote " << cfg.report_path << '\n';
  return r;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Look-alike audience extension pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--set", sets, "Override one config key (key=value); repeatable");

  std::vector<std::pair<CLI::Option*, std::string>> bound;
  std::deque<std::string> storage;
  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    storage.emplace_back();
    bound.emplace_back(sub->add_option(name, storage.back(), help), key);
  };
  flag(&app, "--seed", "seed", "RNG seed (u64)");
  flag(&app, "--data-dir", "data_dir", "Dataset directory");
  flag(&app, "--model-dir", "model_dir", "Artifact directory");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  flag(gen, "--users", "users", "User count");
  flag(gen, "--items", "items", "Item count");
  flag(gen, "--topics", "topics", "Interest topics");
  flag(gen, "--strong-fields", "strong_fields", "Strongly relevant fields");
  flag(gen, "--weak-fields", "weak_fields", "Weakly relevant fields");
  flag(gen, "--out", "data_dir", "Output directory");

  auto* train_rep = app.add_subcommand("train-rep", "Train universal user representations");
  flag(train_rep, "--merge", "merge", "attention | concat");
  flag(train_rep, "--epochs", "rep_epochs", "Epochs");
  flag(train_rep, "--lr", "rep_lr", "Adam learning rate");
  flag(train_rep, "--batch", "rep_batch", "Mini-batch size");

  auto* train_la = app.add_subcommand("train-lookalike", "Train the look-alike model");
  flag(train_la, "--epochs", "lookalike_epochs", "Epochs");
  flag(train_la, "--lr", "lookalike_lr", "Adam learning rate");
  flag(train_la, "--batch", "lookalike_batch", "Mini-batch size");
  flag(train_la, "--k", "cluster_k", "Seed clusters per candidate");
  flag(train_la, "--pooling", "pooling", "attention | average");

  auto* ev = app.add_subcommand("eval", "Evaluate on held-out users");
  flag(ev, "--k-list", "prec_k", "Comma-separated K values for prec@K");

  auto* serve = app.add_subcommand("serve", "Run the scoring service");
  flag(serve, "--host", "host", "Bind address");
  flag(serve, "--port", "port", "Port (0 picks a free one)");
  flag(serve, "--events", "events", "Event log used to bootstrap seed sets");

  auto* rp = app.add_subcommand("replay", "Replay an event log through the serving pipeline");
  flag(rp, "--events", "events", "Event log");
  flag(rp, "--report", "replay_report", "Report path");
  flag(rp, "--speed", "replay_speed", "Simulated seconds per wall second (0: unthrottled)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    io::KeyValueConfig kv;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw ConfigError("config file not found: " + config_path);
      kv = io::KeyValueConfig::load(config_path);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [opt, key] : bound) {
      if (opt->count() > 0) kv.set(key, opt->as<std::string>());
    }
    const RunConfig cfg = RunConfig::from(kv);
    if (*gen) {
      cmd_gen(cfg, out);
    } else if (*train_rep) {
      cmd_train_rep(cfg, out);
    } else if (*train_la) {
      cmd_train_lookalike(cfg, out);
    } else if (*ev) {
      cmd_eval(cfg, out);
    } else if (*serve) {
      cmd_serve(cfg, out);
    } else if (*rp) {
      cmd_replay(cfg, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ralm::cli
