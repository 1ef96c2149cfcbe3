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

#include <string>
#include <string_view>
#include <vector>

#include "rankforge/tape.hpp"

namespace rankforge {

// Predicted scores for one candidate list with binary relevance labels.
struct LabeledScores {
  Var scores;               // vector[L]
  std::vector<int> labels;  // L entries in {0, 1}
};

enum class LossKind {
  kCrossEntropy,
  kMargin,
  kListNet,
  kListMle,
  kApproxNdcg,
  kExpertRank,
};

LossKind parse_loss_kind(std::string_view name);
std::string_view loss_name(LossKind kind);

inline constexpr double kDefaultMargin = 1.0;
inline constexpr double kDefaultApproxNdcgTemperature = 0.1;

// -[y log sigmoid(s) + (1 - y) log(1 - sigmoid(s))] = softplus(s) - y s.
Var pointwise_bce(Var score, int label);
// max(0, margin - (s_pos - s_neg)).
Var pairwise_margin(Var s_pos, Var s_neg, double margin);

// Cross entropy between the uniform distribution over relevant documents
// and softmax(scores).
Var listnet(const LabeledScores& ls);
// Plackett-Luce negative log-likelihood of the label-sorted permutation;
// equal labels are ordered by current score, then by index.
Var listmle(const LabeledScores& ls);
// Negated NDCG with sigmoid-smoothed ranks.
Var approx_ndcg(const LabeledScores& ls, double temperature);

// List-level forms of the pointwise and pairwise losses used for training:
// mean BCE over every document, and mean hinge over every (pos, neg) pair.
Var pointwise_bce_list(const LabeledScores& ls);
Var pairwise_margin_list(const LabeledScores& ls, double margin);

// Ground-truth order used by listmle, exposed for tests.
std::vector<std::size_t> listmle_permutation(const std::vector<double>& scores,
                                             const std::vector<int>& labels);

// Label-count checks shared by the list losses. Throw DataError.
void check_labels(const LabeledScores& ls, bool need_positive,
                  bool need_negative, const char* loss);

}  // namespace rankforge
