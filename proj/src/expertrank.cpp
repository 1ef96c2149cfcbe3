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

#include "rankforge/expertrank.hpp"

#include <algorithm>
#include <cmath>

#include "rankforge/errors.hpp"
#include "rankforge/losses.hpp"

namespace rankforge {

ExpertRankConfig ExpertRankConfig::from_pool_sizes(
    std::span<const std::size_t> sizes, std::size_t gate_hidden,
    std::size_t feature_dim) {
  if (sizes.size() != 4) {
    throw ConfigError("expertrank.pool_sizes needs exactly 4 values, got " +
                      std::to_string(sizes.size()));
  }
  ExpertRankConfig c;
  c.p_low = {sizes[0], sizes[1]};
  c.p_high = {sizes[2], sizes[3]};
  c.gate_hidden = gate_hidden;
  c.feature_dim = feature_dim;
  return c;
}

void ExpertRankConfig::validate() const {
  const auto p = pool_sizes();
  if (!(p[0] >= 1 && p[0] < p[1] && p[1] < p[2] && p[2] < p[3])) {
    throw ConfigError("pool sizes must satisfy 1 <= pL1 < pL2 < pH1 < pH2, got [" +
                      std::to_string(p[0]) + "," + std::to_string(p[1]) + "," +
                      std::to_string(p[2]) + "," + std::to_string(p[3]) + "]");
  }
  if (gate_hidden < 1) throw ConfigError("expertrank.gate_hidden must be >= 1");
  if (feature_dim < 1) throw ConfigError("expertrank feature_dim must be >= 1");
}

const std::vector<std::array<std::size_t, 4>>& default_pool_size_sweep() {
  static const std::vector<std::array<std::size_t, 4>> combos = {
      {2, 3, 10, 17}, {2, 3, 10, 25}, {2, 7, 10, 17}, {3, 4, 10, 17},
      {3, 4, 17, 25}, {3, 5, 10, 17}, {3, 5, 17, 25}, {3, 7, 10, 17},
      {4, 5, 10, 17}, {4, 7, 10, 17}, {4, 7, 10, 25}, {4, 7, 17, 25},
      {5, 7, 10, 17}, {5, 7, 10, 25}, {5, 7, 17, 25},
  };
  return combos;
}

std::vector<Window> partition_windows(std::size_t count, std::size_t p) {
  if (p == 0) throw ConfigError("pooling size must be >= 1");
  if (count == 0) throw DataError("cannot pool an empty candidate list");
  std::vector<Window> windows;
  windows.reserve((count + p - 1) / p);
  for (std::size_t b = 0; b < count; b += p) {
    windows.push_back({b, std::min(b + p, count)});
  }
  return windows;
}

LowPooling coarse_grain_low(Var neg_scores, std::size_t p) {
  LowPooling out;
  std::vector<Var> picked;
  for (const Window& w : partition_windows(neg_scores.value().size(), p)) {
    const Selection s = select_max(slice(neg_scores, w.begin, w.end));
    picked.push_back(s.value);
    out.indices.push_back(w.begin + s.index);
  }
  out.scores = concat(picked);
  return out;
}

HighPooling coarse_grain_high(Var neg_scores, std::size_t p) {
  HighPooling out;
  std::vector<Var> maxes, mins;
  for (const Window& w : partition_windows(neg_scores.value().size(), p)) {
    Var window = slice(neg_scores, w.begin, w.end);
    const Selection hi = select_max(window);
    const Selection lo = select_min(window);
    maxes.push_back(hi.value);
    mins.push_back(lo.value);
    out.max_indices.push_back(w.begin + hi.index);
    out.min_indices.push_back(w.begin + lo.index);
  }
  out.max_scores = concat(maxes);
  out.min_scores = concat(mins);
  return out;
}

namespace {

Var listnet_over(Var pos_scores, std::initializer_list<Var> negatives) {
  std::vector<Var> parts{pos_scores};
  std::vector<int> labels(pos_scores.value().size(), 1);
  for (const Var& n : negatives) {
    parts.push_back(n);
    labels.insert(labels.end(), n.value().size(), 0);
  }
  return listnet({concat(parts), std::move(labels)});
}

void check_candidates(Var pos_scores, Var neg_scores) {
  if (!pos_scores.valid() || pos_scores.value().size() == 0) {
    throw DataError("expertrank needs at least one relevant document");
  }
  if (!neg_scores.valid() || neg_scores.value().size() == 0) {
    throw DataError("expertrank needs at least one non-relevant document");
  }
}

// tanh(W1 x + b1) -> W2 h + b2, returned as a scalar.
Var gate_mlp(Tape& tape, const ParamStore& params, std::size_t expert,
             std::string_view signal, Var input) {
  Var h = tanh_map(affine(input,
                          tape.param(params, gate_param_name(expert, signal, "W1")),
                          tape.param(params, gate_param_name(expert, signal, "b1"))));
  Var out = affine(h, tape.param(params, gate_param_name(expert, signal, "W2")),
                   tape.param(params, gate_param_name(expert, signal, "b2")));
  return element(out, 0);
}

}  // namespace

Var expert_low(Var pos_scores, Var neg_scores, std::size_t p) {
  check_candidates(pos_scores, neg_scores);
  return listnet_over(pos_scores, {coarse_grain_low(neg_scores, p).scores});
}

Var expert_high(Var pos_scores, Var neg_scores, std::size_t p) {
  check_candidates(pos_scores, neg_scores);
  const HighPooling hp = coarse_grain_high(neg_scores, p);
  return listnet_over(pos_scores, {hp.max_scores, hp.min_scores});
}

WindowSummary summarize_window(std::span<const double> pos_scores,
                               std::span<const double> window_neg_scores) {
  if (pos_scores.empty() || window_neg_scores.empty()) {
    throw DataError("window summary needs relevant and non-relevant scores");
  }
  WindowSummary w;
  double total = 0.0;
  for (double s : pos_scores) total += s;
  w.s_pos_mean = total / static_cast<double>(pos_scores.size());
  w.s_neg_max = *std::max_element(window_neg_scores.begin(),
                                  window_neg_scores.end());
  w.s_neg_min = *std::min_element(window_neg_scores.begin(),
                                  window_neg_scores.end());
  w.ranges = {w.s_pos_mean - w.s_neg_max, w.s_pos_mean - w.s_neg_min,
              w.s_neg_max - w.s_neg_min};
  return w;
}

std::string gate_param_name(std::size_t expert, std::string_view signal,
                            std::string_view tensor) {
  std::string name(kGatePrefix);
  name += "e" + std::to_string(expert) + ".";
  name += signal;
  name += ".";
  name += tensor;
  return name;
}

void init_gate_params(ParamStore& params, const ExpertRankConfig& config,
                      Rng& rng) {
  config.validate();
  const std::size_t h = config.gate_hidden;
  for (std::size_t e = 0; e < 4; ++e) {
    const std::size_t feature_in =
        (ExpertRankConfig::is_high(e) ? 3 : 2) * config.feature_dim;
    for (auto [signal, in] : {std::pair<std::string_view, std::size_t>{"score", 3},
                              {"feature", feature_in}}) {
      params.add(gate_param_name(e, signal, "W1"), glorot_matrix(h, in, rng));
      params.add(gate_param_name(e, signal, "b1"), Array::zeros({h}));
      params.add(gate_param_name(e, signal, "W2"), glorot_matrix(1, h, rng));
      params.add(gate_param_name(e, signal, "b2"), Array::zeros({1}));
    }
  }
}

Var gate_score_signal(Tape& tape, Var pos_scores, Var neg_scores,
                      std::size_t p, const ParamStore& params,
                      std::size_t expert) {
  check_candidates(pos_scores, neg_scores);
  const HighPooling hp = coarse_grain_high(neg_scores, p);
  // The window mean of (a - max_w, a - min_w, max_w - min_w) equals the same
  // expression over the window means of max and min.
  Var pos_mean = mean(pos_scores);
  Var max_mean = mean(hp.max_scores);
  Var min_mean = mean(hp.min_scores);
  const Var ranges[] = {sub(pos_mean, max_mean), sub(pos_mean, min_mean),
                        sub(max_mean, min_mean)};
  return gate_mlp(tape, params, expert, "score", concat(ranges));
}

Var gate_feature_signal(Tape& tape, std::span<const Var> pos_features,
                        std::span<const Var> max_features,
                        std::span<const Var> min_features,
                        const ParamStore& params, std::size_t expert) {
  if (pos_features.empty() || max_features.empty()) {
    throw DataError("feature gate needs relevant and pooled features");
  }
  const bool high = ExpertRankConfig::is_high(expert);
  if (high == min_features.empty()) {
    throw ConfigError("feature gate: min-pooled features are required for "
                      "high-range experts only");
  }
  std::vector<Var> parts{mean_of(pos_features), mean_of(max_features)};
  if (high) parts.push_back(mean_of(min_features));
  Var input = concat(parts);
  const Array& w1 = params.value(gate_param_name(expert, "feature", "W1"));
  if (w1.cols() != input.value().size()) {
    throw ConfigError("feature gate expects input dimension " +
                      std::to_string(w1.cols()) + ", got " +
                      std::to_string(input.value().size()));
  }
  return gate_mlp(tape, params, expert, "feature", input);
}

Var gate_combine(Var logits_s, Var logits_f) {
  if (logits_s.value().size() != 4 || logits_f.value().size() != 4) {
    throw ConfigError("gate_combine expects two 4-vectors of logits");
  }
  return softmax_stable(add(logits_s, logits_f));
}

ExpertOutputs expertrank_forward(Tape& tape, const ScoredCandidates& sc,
                                 const ExpertRankConfig& config,
                                 const ParamStore& params) {
  config.validate();
  check_candidates(sc.pos_scores, sc.neg_scores);
  if (sc.pos_features.size() != sc.pos_scores.value().size() ||
      sc.neg_features.size() != sc.neg_scores.value().size()) {
    throw ConfigError("expertrank: feature rows must align with scores");
  }
  const auto sizes = config.pool_sizes();
  ExpertOutputs out;
  std::vector<Var> experts, logits_s, logits_f;
  for (std::size_t e = 0; e < 4; ++e) {
    const std::size_t p = sizes[e];
    const HighPooling hp = coarse_grain_high(sc.neg_scores, p);
    std::vector<Var> max_feats, min_feats;
    for (std::size_t i : hp.max_indices) max_feats.push_back(sc.neg_features[i]);
    out.max_indices[e] = hp.max_indices;
    if (ExpertRankConfig::is_high(e)) {
      for (std::size_t i : hp.min_indices) {
        min_feats.push_back(sc.neg_features[i]);
      }
      out.min_indices[e] = hp.min_indices;
      experts.push_back(listnet_over(sc.pos_scores,
                                     {hp.max_scores, hp.min_scores}));
    } else {
      experts.push_back(listnet_over(sc.pos_scores, {hp.max_scores}));
    }
    logits_s.push_back(
        gate_score_signal(tape, sc.pos_scores, sc.neg_scores, p, params, e));
    logits_f.push_back(gate_feature_signal(tape, sc.pos_features, max_feats,
                                           min_feats, params, e));
  }
  out.expert_losses = concat(experts);
  out.gate_weights = gate_combine(concat(logits_s), concat(logits_f));
  out.loss = dot(out.gate_weights, out.expert_losses);
  return out;
}

Var expertrank_loss(Tape& tape, const ScoredCandidates& sc,
                    const ExpertRankConfig& config, const ParamStore& params) {
  return expertrank_forward(tape, sc, config, params).loss;
}

ParamStore strip_gate_params(const ParamStore& params) {
  return params.without_prefix(kGatePrefix);
}

}  // namespace rankforge
