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


#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ralm/cli/commands.hpp"
#include "ralm/io/binary.hpp"
#include "test_util.hpp"

using namespace ralm;

namespace {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ralm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config defaults and validation") {
  auto cfg = cli::RunConfig::from({});
  CHECK(cfg.seed == 1);
  CHECK(cfg.rep.tower.embedding_dim == 16);
  CHECK(cfg.lookalike.model.cluster_k == 20);
  CHECK(cfg.lookalike.model.weights.alpha == 0.3);
  CHECK(cfg.serving.seed_cap == 10000);
  CHECK(cfg.serving.recluster_cadence_ms == 300000);
  CHECK(cfg.universal_path == "artifacts/universal.emb");
  CHECK(cfg.prec_k == std::vector<std::size_t>{10, 50});

  io::KeyValueConfig kv;
  kv.set("lr", "0.01");
  kv.set("lookalike_lr", "0.02");
  kv.set("prec_k", "5,20");
  cfg = cli::RunConfig::from(kv);
  CHECK(cfg.rep.adam.learning_rate == 0.01);
  CHECK(cfg.lookalike.adam.learning_rate == 0.02);
  CHECK(cfg.lookalike.prec_k == std::vector<std::size_t>{5, 20});

  for (auto [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"unknown_key", "1"}, {"lr", "0"}, {"users", "-1"}, {"merge", "max"}, {"prec_k", "5,0"},
           {"test_fraction", "1.5"}, {"alpha", "-0.1"}, {"port", "70000"}, {"seed", "abc"}}) {
    io::KeyValueConfig bad;
    bad.set(k, v);
    CHECK_THROWS_AS(cli::RunConfig::from(bad), ConfigError);
  }
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"gen", "--no-such-flag"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  auto r = run_cli({"--set", "bogus=1", "gen"});
  CHECK(r.code == 2);
  CHECK(r.err.find("bogus") != std::string::npos);
  CHECK(run_cli({"--set", "novalue", "gen"}).code == 2);
  CHECK(run_cli({"--config", "/nonexistent/ralm.cfg", "gen"}).code == 2);
}

TEST_CASE("zero feature fields is a configuration error") {
  testing::TempDir dir;
  auto r = run_cli({"gen", "--strong-fields", "0", "--weak-fields", "0", "--out", dir.file("d")});
  CHECK(r.code == 2);
  CHECK(r.err.find("field") != std::string::npos);
}

TEST_CASE("flags beat --set, which beats the config file") {
  testing::TempDir dir;
  {
    std::ofstream(dir.file("run.cfg")) << "users = 30\nitems = 12\ntopics = 3\nimpressions_per_user = 5\n"
                                       << "data_dir = " << dir.file("d") << "\n";
  }
  auto r = run_cli({"--config", dir.file("run.cfg"), "gen"});
  CHECK(r.code == 0);
  CHECK(r.out.find("wrote 30 users, 12 items") != std::string::npos);
  r = run_cli({"--config", dir.file("run.cfg"), "--set", "users=40", "gen"});
  CHECK(r.out.find("wrote 40 users") != std::string::npos);
  r = run_cli({"--config", dir.file("run.cfg"), "--set", "users=40", "gen", "--users", "50"});
  CHECK(r.out.find("wrote 50 users") != std::string::npos);
}

TEST_CASE("gen is deterministic in its seed") {
  testing::TempDir dir;
  const std::vector<std::string> common{"--users", "40", "--items", "10", "--topics", "3"};
  auto gen = [&](const std::string& seed, const std::string& out) {
    std::vector<std::string> args{"--seed", seed, "gen", "--out", dir.file(out)};
    args.insert(args.end(), common.begin(), common.end());
    return run_cli(args).code;
  };
  REQUIRE(gen("5", "a") == 0);
  REQUIRE(gen("5", "b") == 0);
  REQUIRE(gen("6", "c") == 0);
  for (const char* f : {"users.jsonl", "events.jsonl", "items.jsonl", "schema.json"}) {
    CHECK(io::read_file(dir.file(std::string("a/") + f)) == io::read_file(dir.file(std::string("b/") + f)));
  }
  CHECK(io::read_file(dir.file("a/events.jsonl")) != io::read_file(dir.file("c/events.jsonl")));
}

TEST_CASE("commands report missing prerequisites") {
  testing::TempDir dir;
  const std::vector<std::string> dirs{"--data-dir", dir.file("data"), "--model-dir", dir.file("models")};
  auto with_dirs = [&](std::vector<std::string> rest) {
    std::vector<std::string> args = dirs;
    args.insert(args.end(), rest.begin(), rest.end());
    return run_cli(args);
  };
  auto r = with_dirs({"train-rep"});
  CHECK(r.code == 1);
  CHECK(r.err.find("missing prerequisite") != std::string::npos);
  CHECK(r.err.find("gen") != std::string::npos);

  REQUIRE(with_dirs({"gen", "--users", "60", "--items", "10", "--topics", "3"}).code == 0);
  r = with_dirs({"train-lookalike"});
  CHECK(r.code == 1);
  CHECK(r.err.find("train-rep") != std::string::npos);
  r = with_dirs({"eval"});
  CHECK(r.code == 1);
  CHECK(r.err.find("missing prerequisite") != std::string::npos);
  r = with_dirs({"replay"});
  CHECK(r.code == 1);
  CHECK(r.err.find("train-lookalike") != std::string::npos);
}

}  // TEST_SUITE
