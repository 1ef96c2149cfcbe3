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
#include <vector>

#include "oracles.hpp"
#include "rankforge/errors.hpp"
#include "rankforge/expertrank.hpp"
#include "rankforge/losses.hpp"

using namespace rankforge;

namespace {

Array vec(std::vector<double> v) { return Array::vector(std::move(v)); }

ScoredCandidates make_candidates(Tape& t, const std::vector<double>& pos,
                                 const std::vector<double>& neg,
                                 std::size_t d, Rng& rng) {
  ScoredCandidates sc;
  sc.pos_scores = t.variable(vec(pos));
  sc.neg_scores = t.variable(vec(neg));
  for (std::size_t i = 0; i < pos.size(); ++i) {
    sc.pos_features.push_back(t.variable(vec(testing::random_vector(rng, d))));
  }
  for (std::size_t i = 0; i < neg.size(); ++i) {
    sc.neg_features.push_back(t.variable(vec(testing::random_vector(rng, d))));
  }
  return sc;
}

ExpertRankConfig small_config(std::size_t d) {
  return ExpertRankConfig::from_pool_sizes(std::vector<std::size_t>{2, 3, 4, 6},
                                           4, d);
}

}  // namespace

TEST_CASE("partition windows") {
  const auto w = partition_windows(50, 7);
  REQUIRE(w.size() == 8);
  for (std::size_t i = 0; i < 7; ++i) CHECK(w[i].size() == 7);
  CHECK(w[7].size() == 1);
  CHECK(partition_windows(4, 2) == std::vector<Window>{{0, 2}, {2, 4}});
  CHECK(partition_windows(3, 10) == std::vector<Window>{{0, 3}});
  CHECK_THROWS_AS(partition_windows(5, 0), ConfigError);
}

TEST_CASE("coarse graining picks window extremes") {
  Tape t;
  Var neg = t.variable(vec({0.1, 0.9, 0.3, 0.2}));
  const LowPooling low = coarse_grain_low(neg, 2);
  CHECK(low.scores.value() == vec({0.9, 0.3}));
  CHECK(low.indices == std::vector<std::size_t>{1, 2});
  const HighPooling high = coarse_grain_high(neg, 4);
  CHECK(high.max_indices == std::vector<std::size_t>{1});
  CHECK(high.min_indices == std::vector<std::size_t>{0});
  CHECK(high.max_scores.value()[0] == 0.9);
  CHECK(high.min_scores.value()[0] == 0.1);
  const LowPooling all = coarse_grain_low(neg, 1);
  CHECK(all.indices == std::vector<std::size_t>{0, 1, 2, 3});
  const HighPooling single = coarse_grain_high(neg, 3);
  CHECK(single.max_indices.back() == 3);
  CHECK(single.min_indices.back() == 3);
}

TEST_CASE("coarse graining gradient reaches winners only") {
  Tape t;
  Var neg = t.variable(vec({0.1, 0.9, 0.3, 0.2, 0.7}));
  const HighPooling hp = coarse_grain_high(neg, 2);
  t.backward(add(sum(hp.max_scores), scale(sum(hp.min_scores), 10.0)));
  CHECK(neg.grad() == vec({10.0, 1.0, 1.0, 10.0, 11.0}));
}

TEST_CASE("coarse graining matches a linear scan") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + rng.index(40);
    const std::size_t p = 1 + rng.index(45);
    const auto s = testing::random_vector(rng, m);
    Tape t;
    const HighPooling hp = coarse_grain_high(t.constant(vec(s)), p);
    const auto ref = testing::brute_force_pool(s, p);
    CHECK(hp.max_indices == ref.max_idx);
    CHECK(hp.min_indices == ref.min_idx);
    CHECK(coarse_grain_low(t.constant(vec(s)), p).indices == ref.max_idx);
  }
}

TEST_CASE("raising a negative above its window maximum makes it the winner") {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.index(30), p = 2 + rng.index(8);
    auto s = testing::random_vector(rng, m);
    Tape t;
    const auto before = coarse_grain_low(t.constant(vec(s)), p).indices;
    const std::size_t j = rng.index(m);
    const std::size_t w = j / p;
    if (before[w] == j) continue;
    s[j] = s[before[w]] + 0.5;
    const auto after = coarse_grain_low(t.constant(vec(s)), p).indices;
    CHECK(after[w] == j);
    CHECK(after == testing::brute_force_pool(s, p).max_idx);
  }
}

TEST_CASE("experts compose listnet on pooled lists") {
  Tape t;
  Var pos = t.constant(vec({1.0}));
  Var neg = t.constant(vec({0.1, 0.9, 0.3, 0.2}));
  const double low = expert_low(pos, neg, 2).value().item();
  const double want_low =
      listnet({t.constant(vec({1.0, 0.9, 0.3})), {1, 0, 0}}).value().item();
  CHECK(low == doctest::Approx(want_low).epsilon(1e-14));
  const double high = expert_high(pos, neg, 4).value().item();
  const double want_high =
      listnet({t.constant(vec({1.0, 0.9, 0.1})), {1, 0, 0}}).value().item();
  CHECK(high == doctest::Approx(want_high).epsilon(1e-14));
  // p = 1 duplicates every negative.
  const double dup = expert_high(pos, neg, 1).value().item();
  const double want_dup =
      listnet({t.constant(vec({1.0, 0.1, 0.9, 0.3, 0.2, 0.1, 0.9, 0.3, 0.2})),
               {1, 0, 0, 0, 0, 0, 0, 0, 0}})
          .value()
          .item();
  CHECK(dup == doctest::Approx(want_dup).epsilon(1e-14));
}

TEST_CASE("expert_low with unit pools equals listnet on the full list") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pos = testing::random_vector(rng, 1 + rng.index(3), 2.0);
    const auto neg = testing::random_vector(rng, 1 + rng.index(20), 2.0);
    Tape t;
    std::vector<double> all = pos;
    all.insert(all.end(), neg.begin(), neg.end());
    std::vector<int> labels(all.size(), 0);
    std::fill(labels.begin(), labels.begin() + static_cast<long>(pos.size()), 1);
    const double full = listnet({t.constant(vec(all)), labels}).value().item();
    const double e = expert_low(t.constant(vec(pos)), t.constant(vec(neg)), 1).value().item();
    CHECK(std::fabs(e - full) <= 1e-12);
  }
}

TEST_CASE("window summary ranges") {
  const std::vector<double> pos{1.0}, window{0.1, 0.9};
  const WindowSummary w = summarize_window(pos, window);
  CHECK(w.ranges[0] == doctest::Approx(0.1));
  CHECK(w.ranges[1] == doctest::Approx(0.9));
  CHECK(w.ranges[2] == doctest::Approx(0.8));
  CHECK(std::fabs(w.ranges[1] - (w.ranges[0] + w.ranges[2])) <= 1e-12);
}

TEST_CASE("score gate averages window ranges") {
  // Windows [0.9, 0.1] and [0.2, 0.3] with S+ = 1.0 give range vectors
  // (0.1, 0.9, 0.8) and (0.7, 0.8, 0.1); their mean is (0.4, 0.85, 0.45).
  // A gate with identity-like first layer weights exposes that mean.
  ParamStore params;
  ExpertRankConfig cfg = small_config(2);
  cfg.gate_hidden = 3;
  Rng rng(1);
  init_gate_params(params, cfg, rng);
  params.value(gate_param_name(0, "score", "W1")) =
      Array::matrix(3, 3, {1e-3, 0, 0, 0, 1e-3, 0, 0, 0, 1e-3});
  params.value(gate_param_name(0, "score", "W2")) = Array::matrix(1, 3, {1, 2, 4});
  Tape t;
  const double logit =
      gate_score_signal(t, t.constant(vec({1.0})), t.constant(vec({0.9, 0.1, 0.2, 0.3})), 2,
                        params, 0)
          .value()
          .item();
  const double want = std::tanh(0.4e-3) + 2 * std::tanh(0.85e-3) + 4 * std::tanh(0.45e-3);
  CHECK(logit == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("zeroed gate weights give the bias") {
  ParamStore params;
  const auto cfg = small_config(3);
  Rng rng(2);
  init_gate_params(params, cfg, rng);
  for (auto& [name, entry] : params) entry.value.fill(0.0);
  params.value(gate_param_name(2, "score", "b2"))[0] = 0.7;
  params.value(gate_param_name(2, "feature", "b2"))[0] = -0.3;
  Tape t;
  Rng frng(3);
  auto sc = make_candidates(t, {0.4}, testing::random_vector(frng, 8), 3, frng);
  CHECK(gate_score_signal(t, sc.pos_scores, sc.neg_scores, 4, params, 2).value().item() ==
        doctest::Approx(0.7));
  const std::vector<Var> mx{sc.neg_features[0], sc.neg_features[5]};
  const std::vector<Var> mn{sc.neg_features[1], sc.neg_features[4]};
  CHECK(gate_feature_signal(t, sc.pos_features, mx, mn, params, 2).value().item() ==
        doctest::Approx(-0.3));
}

TEST_CASE("feature gate input dimensions") {
  ParamStore params;
  const auto cfg = small_config(3);
  Rng rng(4);
  init_gate_params(params, cfg, rng);
  CHECK(params.value(gate_param_name(0, "feature", "W1")).cols() == 6);
  CHECK(params.value(gate_param_name(1, "feature", "W1")).cols() == 6);
  CHECK(params.value(gate_param_name(2, "feature", "W1")).cols() == 9);
  CHECK(params.value(gate_param_name(3, "feature", "W1")).cols() == 9);
  CHECK(params.value(gate_param_name(0, "score", "W1")).cols() == 3);
  Tape t;
  const std::vector<Var> pos{t.constant(vec({1, 2}))}, neg{t.constant(vec({1, 2}))};
  CHECK_THROWS_AS(gate_feature_signal(t, pos, neg, {}, params, 0), ConfigError);
  const std::vector<Var> pos3{t.constant(vec({1, 2, 3}))}, neg3{t.constant(vec({1, 2, 3}))};
  CHECK_THROWS_AS(gate_feature_signal(t, pos3, neg3, {}, params, 2), ConfigError);
}

TEST_CASE("gate combine") {
  Tape t;
  auto g = [&](std::vector<double> s, std::vector<double> f) {
    return gate_combine(t.constant(vec(std::move(s))), t.constant(vec(std::move(f)))).value();
  };
  CHECK(g({0, 0, 0, 0}, {0, 0, 0, 0}) == vec({0.25, 0.25, 0.25, 0.25}));
  const Array a = g({10, 0, 0, 0}, {0, 0, 0, 0});
  CHECK(a[0] == doctest::Approx(0.9998638187585689).epsilon(1e-12));
  const Array b = g({0.3, -1, 2, 0.1}, {1, 0.5, -0.25, 0});
  const Array c = g({5.3, 4, 7, 5.1}, {8, 7.5, 6.75, 7});
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(b[i] - c[i]) <= 1e-12);
  CHECK_THROWS_AS(g({0, 0}, {0, 0}), ConfigError);
}

TEST_CASE("expertrank loss is a convex mixture of the experts") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3;
    ParamStore params;
    init_gate_params(params, small_config(d), rng);
    Tape t;
    auto sc = make_candidates(t, testing::random_vector(rng, 1 + rng.index(2)),
                              testing::random_vector(rng, 6 + rng.index(7)), d, rng);
    const ExpertOutputs out = expertrank_forward(t, sc, small_config(d), params);
    const Array& e = out.expert_losses.value();
    const Array& g = out.gate_weights.value();
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(g[i] > 0.0);
      CHECK(g[i] < 1.0);
      total += g[i];
    }
    CHECK(std::fabs(total - 1.0) <= 1e-9);
    const double loss = out.loss.value().item();
    CHECK(loss >= *std::min_element(e.values().begin(), e.values().end()) - 1e-12);
    CHECK(loss <= *std::max_element(e.values().begin(), e.values().end()) + 1e-12);
    CHECK(out.min_indices[0].empty());
    CHECK(out.min_indices[2].size() == out.max_indices[2].size());
    for (std::size_t i = 1; i < out.max_indices[1].size(); ++i) {
      CHECK(out.max_indices[1][i - 1] < out.max_indices[1][i]);
    }
  }
}

TEST_CASE("uniform gate averages the experts") {
  ParamStore params;
  Rng init(5);
  init_gate_params(params, small_config(3), init);
  for (auto& [name, entry] : params) entry.value.fill(0.0);
  Rng rng(6);
  Tape t;
  auto sc = make_candidates(t, {0.2, -0.1}, testing::random_vector(rng, 11), 3, rng);
  const ExpertOutputs out = expertrank_forward(t, sc, small_config(3), params);
  const Array& e = out.expert_losses.value();
  CHECK(std::fabs(out.loss.value().item() - (e[0] + e[1] + e[2] + e[3]) / 4) <= 1e-12);
}

TEST_CASE("expertrank gradient on a pinned instance") {
  Rng rng(7);
  const std::size_t d = 3;
  const auto pos = testing::random_vector(rng, 2);
  const auto neg = testing::random_vector(rng, 12);
  std::vector<Array> inputs{vec(pos), vec(neg)};
  for (std::size_t i = 0; i < 14; ++i) inputs.push_back(vec(testing::random_vector(rng, d)));
  ParamStore params;
  init_gate_params(params, small_config(d), rng);
  // Inputs: scores and features.
  const auto r = testing::check_var_gradients(
      inputs, [&](Tape& t, const std::vector<Var>& v) {
        ScoredCandidates sc{v[0], v[1], {v[2], v[3]}, {}};
        for (std::size_t i = 4; i < v.size(); ++i) sc.neg_features.push_back(v[i]);
        return expertrank_loss(t, sc, small_config(d), params);
      });
  CHECK(r.max_rel_error <= 1e-4);
  // Gate parameters.
  const auto g = testing::check_store_gradients(params, [&](ParamStore& p, bool grads) {
    Tape t;
    ScoredCandidates sc{t.constant(inputs[0]), t.constant(inputs[1]),
                        {t.constant(inputs[2]), t.constant(inputs[3])}, {}};
    for (std::size_t i = 4; i < inputs.size(); ++i) sc.neg_features.push_back(t.constant(inputs[i]));
    Var loss = expertrank_loss(t, sc, small_config(d), p);
    if (grads) t.backward(loss, p);
    return loss.value().item();
  });
  CHECK(g.max_rel_error <= 1e-4);
}

TEST_CASE("expertrank rejects lists without both labels") {
  ParamStore params;
  Rng rng(8);
  init_gate_params(params, small_config(2), rng);
  Tape t;
  ScoredCandidates sc;
  sc.pos_scores = t.constant(Array::zeros({0}));
  sc.neg_scores = t.constant(vec({1, 2, 3, 4, 5, 6}));
  CHECK_THROWS_AS(expertrank_loss(t, sc, small_config(2), params), DataError);
}

TEST_CASE("pool size config validation") {
  CHECK_NOTHROW(small_config(2).validate());
  CHECK_THROWS_AS(ExpertRankConfig::from_pool_sizes(std::vector<std::size_t>{3, 3, 10, 17}, 8, 2).validate(),
                  ConfigError);
  CHECK_THROWS_AS(ExpertRankConfig::from_pool_sizes(std::vector<std::size_t>{2, 3, 10}, 8, 2),
                  ConfigError);
  CHECK_THROWS_AS(ExpertRankConfig::from_pool_sizes(std::vector<std::size_t>{0, 3, 10, 17}, 8, 2).validate(),
                  ConfigError);
  CHECK(small_config(2).fits(6));
  CHECK_FALSE(small_config(2).fits(5));
}

TEST_CASE("default sweep") {
  const auto& sweep = default_pool_size_sweep();
  REQUIRE(sweep.size() == 15);
  CHECK(sweep.front() == std::array<std::size_t, 4>{2, 3, 10, 17});
  CHECK(sweep.back() == std::array<std::size_t, 4>{5, 7, 17, 25});
  for (const auto& c : sweep) {
    CHECK_NOTHROW(ExpertRankConfig::from_pool_sizes(c, 8, 4).validate());
  }
}

TEST_CASE("stripping drops gate entries only") {
  ParamStore params;
  params.add("scorer.w", Array::matrix(1, 2, {1, 2}));
  params.add("scorer.b", vec({0.5}));
  Rng rng(9);
  init_gate_params(params, small_config(2), rng);
  const ParamStore stripped = strip_gate_params(params);
  CHECK(stripped.size() == 2);
  CHECK(stripped.parameter_count() == params.parameter_count() - params.parameter_count("gate."));
  CHECK(stripped.value("scorer.w") == params.value("scorer.w"));
}
