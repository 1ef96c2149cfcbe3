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

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rankforge/array.hpp"
#include "rankforge/param_store.hpp"
#include "rankforge/rng.hpp"
#include "rankforge/tape.hpp"

namespace rankforge {

using FeatureVector = std::vector<double>;

// Score S and matching features F for one query-document pair.
struct ScoreOutput {
  Var score;     // rank-0
  Var features;  // vector[feature_dim()]
};

// Scores and matching features of one candidate list, split by relevance.
// Feature rows align 1:1 with the score entries.
struct ScoredCandidates {
  Var pos_scores;  // vector[N]
  Var neg_scores;  // vector[M]
  std::vector<Var> pos_features;
  std::vector<Var> neg_features;
};

// Groups per-document outputs by label, preserving document order within
// each group.
ScoredCandidates split_by_label(const std::vector<ScoreOutput>& outputs,
                                const std::vector<int>& labels);

// Maps a feature vector to a ranking score. All trainable state lives in the
// ParamStore under the "scorer." prefix; the scorer object only describes
// the architecture.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::size_t input_dim() const = 0;
  // Dimension of the matching features handed to the gating network.
  virtual std::size_t feature_dim() const = 0;
  // Round-trips through make_scorer(), e.g. "linear" or "mlp:32,16".
  virtual std::string spec() const = 0;
  virtual void init_params(ParamStore& params, Rng& rng) const = 0;
  virtual ScoreOutput score(Tape& tape, const ParamStore& params,
                            Var x) const = 0;

  ScoreOutput score(Tape& tape, const ParamStore& params,
                    std::span<const double> x) const;
  // Inference with frozen parameters.
  double score_value(const ParamStore& params, std::span<const double> x) const;
};

// S = w.x + b, F = x. Parameters: scorer.w [1 x d], scorer.b [1].
class LinearScorer : public Scorer {
 public:
  explicit LinearScorer(std::size_t input_dim);

  std::size_t input_dim() const override { return dim_; }
  std::size_t feature_dim() const override { return dim_; }
  std::string spec() const override { return "linear"; }
  void init_params(ParamStore& params, Rng& rng) const override;
  using Scorer::score;
  ScoreOutput score(Tape& tape, const ParamStore& params,
                    Var x) const override;

 private:
  std::size_t dim_;
};

// tanh hidden layers followed by a linear scalar head. F is the activation
// of the last hidden layer.
class MlpScorer : public Scorer {
 public:
  MlpScorer(std::size_t input_dim, std::vector<std::size_t> hidden);

  std::size_t input_dim() const override { return dim_; }
  std::size_t feature_dim() const override { return hidden_.back(); }
  std::string spec() const override;
  void init_params(ParamStore& params, Rng& rng) const override;
  using Scorer::score;
  ScoreOutput score(Tape& tape, const ParamStore& params,
                    Var x) const override;

  const std::vector<std::size_t>& hidden() const { return hidden_; }
  static std::string weight_name(std::size_t layer);
  static std::string bias_name(std::size_t layer);

 private:
  std::size_t dim_;
  std::vector<std::size_t> hidden_;
};

// "linear" | "mlp" | "mlp:<h1>,<h2>,...". Plain "mlp" means one hidden layer
// of width 32.
std::unique_ptr<Scorer> make_scorer(const std::string& spec,
                                    std::size_t input_dim);

// Glorot-uniform weights, zero biases.
Array glorot_matrix(std::size_t rows, std::size_t cols, Rng& rng);

// Gaussian kernel pooling over a query-by-document cosine similarity matrix.
struct KernelBank {
  std::vector<double> mus;
  std::vector<double> sigmas;

  void validate() const;
  std::size_t size() const { return mus.size(); }
};

// One exact-match kernel (mu 1.0, sigma 1e-3) plus ten soft-match kernels
// with means -0.9, -0.7, ..., 0.9 and sigma 0.1.
KernelBank default_kernel_bank();

inline constexpr double kKernelLogFloor = 1e-10;

// phi_k = sum_i log(max(eps, sum_j exp(-(sim_ij - mu_k)^2 / (2 sigma_k^2)))).
// Fixed feature extraction; no gradient flows into `sim`.
FeatureVector knrm_features(const Array& sim, const KernelBank& bank);

}  // namespace rankforge
