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

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankforge/param_store.hpp"
#include "rankforge/rng.hpp"
#include "rankforge/scorers.hpp"
#include "rankforge/tape.hpp"

namespace rankforge {

// Two low-range and two high-range pooling sizes plus gate dimensions.
// Experts are numbered 0..3 in the order p_low[0], p_low[1], p_high[0],
// p_high[1].
struct ExpertRankConfig {
  std::array<std::size_t, 2> p_low{5, 7};
  std::array<std::size_t, 2> p_high{10, 25};
  std::size_t gate_hidden = 8;
  std::size_t feature_dim = 0;

  std::array<std::size_t, 4> pool_sizes() const {
    return {p_low[0], p_low[1], p_high[0], p_high[1]};
  }
  static ExpertRankConfig from_pool_sizes(std::span<const std::size_t> sizes,
                                          std::size_t gate_hidden,
                                          std::size_t feature_dim);
  // Throws ConfigError unless 1 <= pL1 < pL2 < pH1 < pH2, gate_hidden >= 1
  // and feature_dim >= 1.
  void validate() const;
  // Whether the largest pooling size fits a list with `num_negatives`.
  bool fits(std::size_t num_negatives) const {
    return p_high[1] <= num_negatives;
  }
  static bool is_high(std::size_t expert) { return expert >= 2; }
};

// The 15 pooling size combinations evaluated for M = 50.
const std::vector<std::array<std::size_t, 4>>& default_pool_size_sweep();

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Window&, const Window&) = default;
};

// Consecutive windows [0,p), [p,2p), ...; the last one may be shorter.
std::vector<Window> partition_windows(std::size_t count, std::size_t p);

struct LowPooling {
  Var scores;  // vector[ceil(M / p)]
  std::vector<std::size_t> indices;
};

struct HighPooling {
  Var max_scores;
  std::vector<std::size_t> max_indices;
  Var min_scores;
  std::vector<std::size_t> min_indices;
};

// Per-window max pooling over non-relevant scores.
LowPooling coarse_grain_low(Var neg_scores, std::size_t p);
// Per-window max and min pooling over non-relevant scores.
HighPooling coarse_grain_high(Var neg_scores, std::size_t p);

// ListNet over all relevant scores plus the max-pooled negatives.
Var expert_low(Var pos_scores, Var neg_scores, std::size_t p);
// ListNet over all relevant scores plus max- and min-pooled negatives.
Var expert_high(Var pos_scores, Var neg_scores, std::size_t p);

struct WindowSummary {
  double s_pos_mean = 0.0;
  double s_neg_max = 0.0;
  double s_neg_min = 0.0;
  // (mean+ - max-, mean+ - min-, max- - min-)
  std::array<double, 3> ranges{};
};

WindowSummary summarize_window(std::span<const double> pos_scores,
                               std::span<const double> window_neg_scores);

inline constexpr std::string_view kGatePrefix = "gate.";

std::string gate_param_name(std::size_t expert, std::string_view signal,
                            std::string_view tensor);
void init_gate_params(ParamStore& params, const ExpertRankConfig& config,
                      Rng& rng);

// Score-range gating logit: window ranges averaged over all windows of size
// p, then a tanh hidden layer and a linear scalar head.
Var gate_score_signal(Tape& tape, Var pos_scores, Var neg_scores,
                      std::size_t p, const ParamStore& params,
                      std::size_t expert);

// Feature gating logit from the mean relevant features and the mean features
// of the pooled negatives; `min_features` is empty for low-range experts.
Var gate_feature_signal(Tape& tape, std::span<const Var> pos_features,
                        std::span<const Var> max_features,
                        std::span<const Var> min_features,
                        const ParamStore& params, std::size_t expert);

// softmax(logits_s + logits_f) over the four experts.
Var gate_combine(Var logits_s, Var logits_f);

struct ExpertOutputs {
  Var expert_losses;  // vector[4]
  Var gate_weights;   // vector[4], on the simplex
  std::array<std::vector<std::size_t>, 4> max_indices;
  std::array<std::vector<std::size_t>, 4> min_indices;  // empty for low
  Var loss;           // sum_i G_i E_i
};

ExpertOutputs expertrank_forward(Tape& tape, const ScoredCandidates& sc,
                                 const ExpertRankConfig& config,
                                 const ParamStore& params);

Var expertrank_loss(Tape& tape, const ScoredCandidates& sc,
                    const ExpertRankConfig& config, const ParamStore& params);

// Drops every gate entry; the scorer never reads them.
ParamStore strip_gate_params(const ParamStore& params);

}  // namespace rankforge
