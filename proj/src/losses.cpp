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

#include "rankforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "rankforge/errors.hpp"

namespace rankforge {

LossKind parse_loss_kind(std::string_view name) {
  if (name == "cross_entropy") return LossKind::kCrossEntropy;
  if (name == "margin") return LossKind::kMargin;
  if (name == "listnet") return LossKind::kListNet;
  if (name == "listmle") return LossKind::kListMle;
  if (name == "approxndcg") return LossKind::kApproxNdcg;
  if (name == "expertrank") return LossKind::kExpertRank;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected cross_entropy, margin, listnet, listmle, "
                    "approxndcg or expertrank)");
}

std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy: return "cross_entropy";
    case LossKind::kMargin: return "margin";
    case LossKind::kListNet: return "listnet";
    case LossKind::kListMle: return "listmle";
    case LossKind::kApproxNdcg: return "approxndcg";
    case LossKind::kExpertRank: return "expertrank";
  }
  return "unknown";
}

void check_labels(const LabeledScores& ls, bool need_positive,
                  bool need_negative, const char* loss) {
  if (!ls.scores.valid() || !ls.scores.value().is_vector() ||
      ls.scores.value().size() != ls.labels.size()) {
    throw ConfigError(std::string(loss) +
                      ": scores and labels must be vectors of equal length");
  }
  if (ls.labels.empty()) throw DataError(std::string(loss) + ": empty list");
  std::size_t pos = 0;
  for (int y : ls.labels) {
    if (y != 0 && y != 1) {
      throw DataError(std::string(loss) + ": labels must be 0 or 1");
    }
    pos += static_cast<std::size_t>(y);
  }
  if (need_positive && pos == 0) {
    throw DataError(std::string(loss) + ": list has no relevant document");
  }
  if (need_negative && pos == ls.labels.size()) {
    throw DataError(std::string(loss) + ": list has no non-relevant document");
  }
}

Var pointwise_bce(Var score, int label) {
  if (label != 0 && label != 1) throw DataError("pointwise_bce: bad label");
  Var loss = softplus(score);
  if (label == 1) loss = sub(loss, score);
  return loss;
}

Var pairwise_margin(Var s_pos, Var s_neg, double margin) {
  if (margin < 0.0) throw ConfigError("pairwise_margin: margin must be >= 0");
  return relu(shift(sub(s_neg, s_pos), margin));
}

Var listnet(const LabeledScores& ls) {
  check_labels(ls, true, false, "listnet");
  Tape& t = *ls.scores.tape();
  const double n_pos = std::accumulate(ls.labels.begin(), ls.labels.end(), 0.0);
  std::vector<double> target(ls.labels.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    target[k] = ls.labels[k] / n_pos;
  }
  Var p = t.constant(Array::vector(std::move(target)));
  return scale(dot(p, log_softmax(ls.scores)), -1.0);
}

std::vector<std::size_t> listmle_permutation(const std::vector<double>& scores,
                                             const std::vector<int>& labels) {
  std::vector<std::size_t> perm(labels.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (labels[a] != labels[b]) return labels[a] > labels[b];
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return perm;
}

Var listmle(const LabeledScores& ls) {
  check_labels(ls, true, false, "listmle");
  const auto perm = listmle_permutation(ls.scores.value().data(), ls.labels);
  Var ordered = gather(ls.scores, perm);
  const std::size_t n = perm.size();
  std::vector<Var> terms;
  terms.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    terms.push_back(sub(logsumexp(slice(ordered, t, n)), element(ordered, t)));
  }
  return sum(concat(terms));
}

Var approx_ndcg(const LabeledScores& ls, double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError("approx_ndcg: temperature must be > 0");
  }
  check_labels(ls, true, false, "approx_ndcg");
  Tape& t = *ls.scores.tape();
  const std::size_t n = ls.labels.size();
  std::size_t n_pos = 0;
  for (int y : ls.labels) n_pos += static_cast<std::size_t>(y);
  double idcg = 0.0;
  for (std::size_t r = 1; r <= n_pos; ++r) {
    idcg += 1.0 / std::log2(1.0 + static_cast<double>(r));
  }
  Var ln2 = t.constant(Array::scalar(std::numbers::ln2));
  std::vector<Var> gains;
  for (std::size_t i = 0; i < n; ++i) {
    if (ls.labels[i] == 0) continue;
    // The j == i term contributes sigmoid(0) = 0.5, hence 1 - 0.5.
    Var diff = scale(sub(ls.scores, broadcast(element(ls.scores, i), n)),
                     1.0 / temperature);
    Var rank = shift(sum(sigmoid(diff)), 0.5);
    gains.push_back(div(ln2, log_map(shift(rank, 1.0))));
  }
  return scale(sum(concat(gains)), -1.0 / idcg);
}

Var pointwise_bce_list(const LabeledScores& ls) {
  check_labels(ls, false, false, "cross_entropy");
  std::vector<Var> terms;
  for (std::size_t i = 0; i < ls.labels.size(); ++i) {
    terms.push_back(pointwise_bce(element(ls.scores, i), ls.labels[i]));
  }
  return mean(concat(terms));
}

Var pairwise_margin_list(const LabeledScores& ls, double margin) {
  check_labels(ls, true, true, "margin");
  std::vector<Var> pos, neg, terms;
  for (std::size_t i = 0; i < ls.labels.size(); ++i) {
    (ls.labels[i] ? pos : neg).push_back(element(ls.scores, i));
  }
  for (const Var& p : pos) {
    for (const Var& q : neg) terms.push_back(pairwise_margin(p, q, margin));
  }
  return mean(concat(terms));
}

}  // namespace rankforge
