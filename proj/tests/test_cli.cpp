// Copyright 2026 The rankforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "rankforge/cli.hpp"
#include "rankforge/config.hpp"
#include "rankforge/errors.hpp"

using namespace rankforge;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"rankforge"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rankforge_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("key value config files") {
  std::istringstream in("# comment\nloss = expertrank\n  lr=0.001  \n\nexpertrank.pool_sizes = [2, 3, 10, 17]\n");
  const KeyValueConfig kv = KeyValueConfig::parse(in, "cfg");
  CHECK(kv.get("loss") == "expertrank");
  CHECK(kv.get("lr") == "0.001");
  const TrainConfig c = train_config_from(kv);
  CHECK(c.loss == LossKind::kExpertRank);
  CHECK(c.adam.lr == 0.001);
  CHECK(c.pool_sizes == std::array<std::size_t, 4>{2, 3, 10, 17});
  std::istringstream bad("loss expertrank\n");
  CHECK_THROWS_AS(KeyValueConfig::parse(bad, "cfg"), ParseError);
  KeyValueConfig unknown;
  unknown.set("learning_rate", "0.1");
  CHECK_THROWS_AS(train_config_from(unknown), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent.cfg"), ConfigError);
  CHECK(canonical_key("--neg-per-query") == "neg_per_query");
}

TEST_CASE("config value parsing") {
  CHECK(parse_size_list("[5,7,10,25]") == std::vector<std::size_t>{5, 7, 10, 25});
  CHECK(parse_size_list("5, 7") == std::vector<std::size_t>{5, 7});
  CHECK_THROWS_AS(parse_size_list("[5,x]"), ConfigError);
  CHECK(parse_seed_list("1,2,3") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(parse_combinations("all").size() == 15);
  const auto picked = parse_combinations("1,15");
  REQUIRE(picked.size() == 2);
  CHECK(picked[1] == std::array<std::size_t, 4>{5, 7, 17, 25});
  CHECK(parse_combinations("[2,3,4,6];[1,2,3,4]").size() == 2);
  CHECK_THROWS_AS(parse_combinations("16"), ConfigError);
  KeyValueConfig kv;
  kv.set("resample_negatives", "once");
  CHECK(train_config_from(kv).resample == NegativeResampling::kOnce);
  kv.set("resample_negatives", "never");
  CHECK_THROWS_AS(train_config_from(kv), ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  const fs::path dir = scratch("codes");
  CHECK(cli({"train", "--train", "/nonexistent", "--valid", "/nonexistent", "--qrels",
             "/nonexistent", "--out", dir.string()})
            .code == 2);
  CHECK(cli({"gen-data", "--out", dir.string(), "--dim", "1"}).code == 1);
  REQUIRE(cli({"gen-data", "--out", (dir / "d").string(), "--queries", "4", "--neg", "6"}).code == 0);
  const std::string d = (dir / "d").string();
  CHECK(cli({"train", "--train", d + "/train.txt", "--valid", d + "/valid.txt", "--qrels",
             d + "/qrels.txt", "--out", (dir / "m").string(), "--lr", "-1"})
            .code == 1);
  CHECK(cli({"train", "--train", d + "/train.txt", "--valid", d + "/valid.txt", "--qrels",
             d + "/qrels.txt", "--out", (dir / "m").string(), "--loss", "nope"})
            .code == 1);
  std::ofstream(dir / "broken.txt") << "1 qid:1 1:0.5\nbad line\n";
  const CliRun broken = cli({"train", "--train", (dir / "broken.txt").string(), "--valid",
                             d + "/valid.txt", "--qrels", d + "/qrels.txt", "--out",
                             (dir / "m").string()});
  CHECK(broken.code == 2);
  CHECK(broken.err.find(":2") != std::string::npos);
}

TEST_CASE("gen-data, train and eval pipeline") {
  const fs::path dir = scratch("pipeline");
  const std::string d = (dir / "data").string();
  REQUIRE(cli({"gen-data", "--out", d, "--queries", "12", "--neg", "30", "--dim", "5"}).code == 0);
  CHECK(fs::exists(dir / "data" / "qrels.txt"));
  std::ofstream(dir / "train.cfg") << "loss = expertrank\nscorer = mlp:4\nepochs = 6\nlr = 0.01\n";
  const CliRun t = cli({"train", "--config", (dir / "train.cfg").string(), "--train",
                        d + "/train.txt", "--valid", d + "/valid.txt", "--qrels",
                        d + "/qrels.txt", "--out", (dir / "model").string(),
                        "--expertrank.pool_sizes", "[2,3,5,10]", "--checkpoint-interval", "2"});
  REQUIRE(t.code == 0);
  CHECK(fs::exists(dir / "model" / "model.params"));
  CHECK(fs::exists(dir / "model" / "checkpoints" / "epoch_002.params"));
  CHECK(fs::exists(dir / "model" / "checkpoints" / "epoch_006.params"));
  CHECK_FALSE(fs::exists(dir / "model" / "checkpoints" / "epoch_003.params"));
  const std::string log = slurp(dir / "model" / "train.log");
  CHECK(log.find("expertrank.pool_sizes=[2,3,5,10]") != std::string::npos);
  CHECK(log.find("epochs=6") != std::string::npos);

  const CliRun e = cli({"eval", "--model", (dir / "model" / "model.params").string(), "--test",
                        d + "/test.txt", "--qrels", d + "/qrels.txt", "--run",
                        (dir / "run.txt").string(), "--report", (dir / "report.tsv").string()});
  REQUIRE(e.code == 0);
  const std::string run = slurp(dir / "run.txt");
  CHECK(run.find(" Q0 ") != std::string::npos);
  CHECK(run.find(" 1 ") != std::string::npos);
  CHECK(slurp(dir / "report.tsv").rfind("metric\tcutoff\tvalue\tqueries\nmrr\t3\t", 0) == 0);

  const CliRun s = cli({"eval", "--model", (dir / "model" / "model.params").string(), "--test",
                        d + "/test.txt", "--qrels", d + "/qrels.txt", "--run",
                        (dir / "run_stripped.txt").string(), "--strip-gates"});
  REQUIRE(s.code == 0);
  CHECK(slurp(dir / "run_stripped.txt") == run);
}

TEST_CASE("every train key is accepted as a flag") {
  const fs::path dir = scratch("flags");
  const std::string d = (dir / "data").string();
  REQUIRE(cli({"gen-data", "--out", d, "--queries", "4", "--neg", "30", "--dim", "3"}).code == 0);
  const CliRun t = cli({"train", "--train", d + "/train.txt", "--valid", d + "/valid.txt",
                        "--qrels", d + "/qrels.txt", "--out", (dir / "m").string(),
                        "--loss", "expertrank", "--scorer", "linear", "--lr", "0.001",
                        "--adam.beta1", "0.8", "--adam.beta2", "0.99", "--adam.eps", "1e-7",
                        "--epochs", "2", "--checkpoint_interval", "1", "--val-metric", "ndcg@3",
                        "--seed", "4", "--neg-per-query", "25", "--resample-negatives", "once",
                        "--margin", "0.5", "--temperature", "0.2",
                        "--expertrank.pool-sizes", "[2,3,4,6]", "--expertrank.gate_hidden", "2",
                        "--eval-depth", "20"});
  CHECK(t.code == 0);
  CHECK(t.err.empty());
}

TEST_CASE("sweep and compare commands") {
  const fs::path dir = scratch("sweep");
  const std::string d = (dir / "data").string();
  REQUIRE(cli({"gen-data", "--out", d, "--queries", "8", "--neg", "30", "--dim", "4"}).code == 0);
  const CliRun s = cli({"sweep", "--train", d + "/train.txt", "--valid", d + "/valid.txt",
                        "--test", d + "/test.txt", "--qrels", d + "/qrels.txt", "--scorer",
                        "linear", "--epochs", "1", "--checkpoint-interval", "1", "--combinations",
                        "[2,3,10,17];[2,3,4,6]", "--metrics", "mrr@10", "--out", (dir / "sweep.tsv").string()});
  CHECK(s.code == 0);
  const std::string sweep = slurp(dir / "sweep.tsv");
  CHECK(sweep.find("[2,3,10,17]") != std::string::npos);
  CHECK(sweep.find("[2,3,4,6]") != std::string::npos);
  const CliRun c = cli({"compare", "--train", d + "/train.txt", "--valid", d + "/valid.txt",
                        "--test", d + "/test.txt", "--qrels", d + "/qrels.txt", "--scorer",
                        "linear", "--epochs", "1", "--checkpoint-interval", "1", "--losses",
                        "listnet,listmle", "--seeds", "1,2", "--metrics", "mrr@10",
                        "--out", (dir / "compare.tsv").string()});
  CHECK(c.code == 0);
  CHECK(slurp(dir / "compare.tsv").find("listmle") != std::string::npos);
}
