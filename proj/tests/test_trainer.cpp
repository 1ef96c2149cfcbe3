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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rankforge/dataio.hpp"
#include "rankforge/errors.hpp"
#include "rankforge/expertrank.hpp"
#include "rankforge/trainer.hpp"

using namespace rankforge;

namespace {

SyntheticData small_data(double noise = 0.5, double distractors = 0.3) {
  SyntheticSpec spec;
  spec.dim = 6;
  spec.train_queries = 30;
  spec.valid_queries = 10;
  spec.test_queries = 10;
  spec.negatives = 12;
  spec.noise = noise;
  spec.distractor_frac = distractors;
  return generate_synthetic(spec);
}

TrainConfig small_config(LossKind loss) {
  TrainConfig c;
  c.loss = loss;
  c.scorer = "mlp:4";
  c.epochs = 3;
  c.checkpoint_interval = 1;
  c.adam.lr = 1e-2;
  c.neg_per_query = 12;
  c.pool_sizes = {2, 3, 4, 6};
  c.gate_hidden = 3;
  return c;
}

std::string log_of(const TrainConfig& c, const TrainResult& r) {
  std::ostringstream out;
  write_training_log(out, c, r);
  return out.str();
}

}  // namespace

TEST_CASE("checkpoint schedule") {
  CHECK(checkpoint_epochs(15, 3) == std::vector<std::size_t>{3, 6, 9, 12, 15});
  CHECK(checkpoint_epochs(1, 1) == std::vector<std::size_t>{1});
  CHECK(checkpoint_epochs(10, 4) == std::vector<std::size_t>{4, 8});
  TrainConfig c;
  CHECK(c.epochs == 15);
  CHECK(c.checkpoint_interval == 3);
  CHECK(c.adam.lr == 1e-4);
  CHECK(c.val_metric.name() == "mrr@10");
  c.checkpoint_interval = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.adam.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("default protocol produces five checkpoints") {
  const auto data = small_data();
  TrainConfig c = small_config(LossKind::kListNet);
  c.epochs = 15;
  c.checkpoint_interval = 3;
  c.scorer = "linear";
  const TrainResult r = train(c, data.train, data.valid, data.qrels);
  REQUIRE(r.checkpoints.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(r.checkpoints[i].epoch == 3 * (i + 1));
  CHECK(r.epochs.size() == 15);
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i) {
    CHECK(r.checkpoints[i].val_metric <= r.best_checkpoint().val_metric);
    if (i < r.best) CHECK(r.checkpoints[i].val_metric < r.best_checkpoint().val_metric);
  }
}

TEST_CASE("every loss trains deterministically and lowers its loss") {
  const auto data = small_data(0.0, 0.0);
  for (LossKind kind : {LossKind::kCrossEntropy, LossKind::kMargin, LossKind::kListNet,
                        LossKind::kListMle, LossKind::kApproxNdcg, LossKind::kExpertRank}) {
    CAPTURE(loss_name(kind));
    TrainConfig c = small_config(kind);
    c.epochs = 15;
    c.checkpoint_interval = 3;
    const TrainResult a = train(c, data.train, data.valid, data.qrels);
    const TrainResult b = train(c, data.train, data.valid, data.qrels);
    CHECK(log_of(c, a) == log_of(c, b));
    CHECK(a.epochs.back().mean_loss < a.epochs.front().mean_loss);
  }
}

TEST_CASE("linear listnet separates noiseless data") {
  SyntheticSpec spec;
  spec.noise = 0.0;
  spec.distractor_frac = 0.0;
  const auto data = generate_synthetic(spec);
  TrainConfig c;
  c.loss = LossKind::kListNet;
  c.scorer = "linear";
  c.adam.lr = 1e-2;
  const TrainResult r = train(c, data.train, data.valid, data.qrels);
  CHECK(r.best_checkpoint().val_metric == 1.0);
}

TEST_CASE("reloaded checkpoints reproduce their validation metric") {
  const auto data = small_data();
  const TrainConfig c = small_config(LossKind::kExpertRank);
  const TrainResult r = train(c, data.train, data.valid, data.qrels);
  const auto scorer = make_scorer(r.scorer_spec, r.input_dim);
  for (const auto& cp : r.checkpoints) {
    std::stringstream s;
    write_model(s, *scorer, cp, c.val_metric);
    const Model m = read_model(s, "mem");
    CHECK(m.epoch == cp.epoch);
    CHECK(m.scorer->spec() == r.scorer_spec);
    const MetricSpec metric[] = {c.val_metric};
    const RankingReport report =
        evaluate_model(*m.scorer, m.params, data.valid, data.qrels, metric);
    CHECK(report.means[0] == cp.val_metric);
  }
}

TEST_CASE("stripping gates leaves rankings unchanged") {
  const auto data = small_data();
  const TrainConfig c = small_config(LossKind::kExpertRank);
  const TrainResult r = train(c, data.train, data.valid, data.qrels);
  const auto scorer = make_scorer(r.scorer_spec, r.input_dim);
  const ParamStore& full = r.best_checkpoint().params;
  const ParamStore stripped = strip_gate_params(full);
  CHECK(full.parameter_count("gate.") > 0);
  CHECK(stripped.parameter_count("gate.") == 0);
  ParamStore randomized = full;
  Rng rng(3);
  for (auto& [name, e] : randomized) {
    if (name.starts_with("gate.")) {
      for (auto& v : e.value.values()) v = rng.normal();
    }
  }
  std::ostringstream a, b, d;
  write_run(a, rank_lists(*scorer, full, data.test));
  write_run(b, rank_lists(*scorer, stripped, data.test));
  write_run(d, rank_lists(*scorer, randomized, data.test));
  CHECK(a.str() == b.str());
  CHECK(a.str() == d.str());
}

TEST_CASE("negative resampling modes") {
  const auto data = small_data();
  TrainConfig c = small_config(LossKind::kListNet);
  c.neg_per_query = 5;
  const TrainResult epoch = train(c, data.train, data.valid, data.qrels);
  c.resample = NegativeResampling::kOnce;
  const TrainResult once = train(c, data.train, data.valid, data.qrels);
  CHECK(log_of(c, once) != log_of(c, epoch));
  CHECK(log_of(c, once) == log_of(c, train(c, data.train, data.valid, data.qrels)));
}

TEST_CASE("oversized pools warn instead of failing") {
  const auto data = small_data();
  TrainConfig c = small_config(LossKind::kExpertRank);
  c.pool_sizes = {2, 3, 10, 17};
  const TrainResult r = train(c, data.train, data.valid, data.qrels);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("17") != std::string::npos);
}

TEST_CASE("queries lacking a label class are skipped") {
  auto data = small_data();
  for (auto& e : data.train[0].entries) e.label = 0;
  const TrainResult r = train(small_config(LossKind::kListNet), data.train, data.valid, data.qrels);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("non-finite training aborts with a numeric error") {
  auto data = small_data();
  data.train[1].entries[0].features[0] = NAN;
  TrainConfig c = small_config(LossKind::kListNet);
  c.scorer = "linear";
  CHECK_THROWS_AS(train(c, data.train, data.valid, data.qrels), NumericError);
}

TEST_CASE("sweep skips invalid combinations and marks the best") {
  const auto data = small_data();
  const TrainConfig c = small_config(LossKind::kExpertRank);
  const std::vector<std::array<std::size_t, 4>> combos{{2, 3, 4, 6}, {2, 3, 10, 17}, {3, 3, 4, 6},
                                                       {1, 2, 5, 12}};
  const auto metrics = parse_metric_list("mrr@10,ndcg@3");
  const SweepResult a =
      sweep_pool_sizes(c, combos, data.train, data.valid, data.test, data.qrels, metrics, 2);
  REQUIRE(a.rows.size() == 4);
  CHECK_FALSE(a.rows[0].skipped);
  CHECK(a.rows[1].skipped);
  CHECK(a.rows[2].skipped);
  CHECK_FALSE(a.rows[3].skipped);
  REQUIRE(a.best.has_value());
  CHECK((*a.best == 0 || *a.best == 3));
  const SweepResult b =
      sweep_pool_sizes(c, combos, data.train, data.valid, data.test, data.qrels, metrics, 1);
  std::ostringstream ta, tb;
  write_sweep_tsv(ta, a, metrics);
  write_sweep_tsv(tb, b, metrics);
  CHECK(ta.str() == tb.str());
}

TEST_CASE("compare reports rows per seed and pairwise tests") {
  const auto data = small_data();
  std::vector<TrainConfig> configs{small_config(LossKind::kListNet),
                                   small_config(LossKind::kExpertRank)};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const auto metrics = parse_metric_list("mrr@10");
  const CompareResult r = compare_losses(configs, seeds, data.train, data.valid, data.test,
                                         data.qrels, metrics, metrics[0], 2);
  CHECK(r.rows.size() == 10);
  CHECK(r.rows[0].label == "listnet");
  CHECK(r.rows[9].seed == 5);
  REQUIRE(r.tests.size() == 1);
  CHECK(r.tests[0].a == "listnet");
  CHECK(r.tests[0].b == config_label(configs[1]));
  std::ostringstream out;
  write_compare_tsv(out, r, metrics);
  CHECK(out.str().find("p\t") != std::string::npos);
}

TEST_CASE("comparing a loss with itself is degenerate") {
  const auto data = small_data();
  std::vector<TrainConfig> configs{small_config(LossKind::kListNet),
                                   small_config(LossKind::kListNet)};
  const std::vector<std::uint64_t> seeds{1};
  const auto metrics = parse_metric_list("mrr@10");
  const CompareResult r = compare_losses(configs, seeds, data.train, data.valid, data.test,
                                         data.qrels, metrics, metrics[0]);
  REQUIRE(r.tests.size() == 1);
  CHECK_FALSE(r.tests[0].result.has_value());
  CHECK(r.tests[0].b == "listnet#2");
}
