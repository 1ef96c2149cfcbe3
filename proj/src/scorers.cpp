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

#include "rankforge/scorers.hpp"

#include <algorithm>
#include <cmath>

#include "rankforge/errors.hpp"
#include "rankforge/text.hpp"

namespace rankforge {

ScoreOutput Scorer::score(Tape& tape, const ParamStore& params,
                          std::span<const double> x) const {
  return score(tape, params,
               tape.constant(Array::vector({x.begin(), x.end()})));
}

double Scorer::score_value(const ParamStore& params,
                           std::span<const double> x) const {
  Tape tape;
  return score(tape, params, x).score.value().item();
}

ScoredCandidates split_by_label(const std::vector<ScoreOutput>& outputs,
                                const std::vector<int>& labels) {
  if (outputs.size() != labels.size()) {
    throw ConfigError("split_by_label: outputs and labels differ in length");
  }
  ScoredCandidates sc;
  std::vector<Var> pos, neg;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (labels[i] == 1) {
      pos.push_back(outputs[i].score);
      sc.pos_features.push_back(outputs[i].features);
    } else {
      neg.push_back(outputs[i].score);
      sc.neg_features.push_back(outputs[i].features);
    }
  }
  if (pos.empty() || neg.empty()) {
    throw DataError("candidate list needs at least one relevant and one "
                    "non-relevant document");
  }
  sc.pos_scores = concat(pos);
  sc.neg_scores = concat(neg);
  return sc;
}

Array glorot_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(-a, a);
  return Array::matrix(rows, cols, std::move(v));
}

LinearScorer::LinearScorer(std::size_t input_dim) : dim_(input_dim) {
  if (dim_ == 0) throw ConfigError("linear scorer needs input_dim >= 1");
}

void LinearScorer::init_params(ParamStore& params, Rng& rng) const {
  params.add("scorer.w", glorot_matrix(1, dim_, rng));
  params.add("scorer.b", Array::zeros({1}));
}

ScoreOutput LinearScorer::score(Tape& tape, const ParamStore& params,
                                Var x) const {
  if (x.value().size() != dim_ || !x.value().is_vector()) {
    throw ConfigError("linear scorer expects " + std::to_string(dim_) +
                      " features, got " + shape_string(x.value().shape()));
  }
  Var s = affine(x, tape.param(params, "scorer.w"),
                 tape.param(params, "scorer.b"));
  return {element(s, 0), x};
}

MlpScorer::MlpScorer(std::size_t input_dim, std::vector<std::size_t> hidden)
    : dim_(input_dim), hidden_(std::move(hidden)) {
  if (dim_ == 0) throw ConfigError("mlp scorer needs input_dim >= 1");
  if (hidden_.empty()) throw ConfigError("mlp scorer needs a hidden layer");
  if (std::find(hidden_.begin(), hidden_.end(), 0u) != hidden_.end()) {
    throw ConfigError("mlp hidden widths must be >= 1");
  }
}

std::string MlpScorer::spec() const {
  std::string out = "mlp:";
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(hidden_[i]);
  }
  return out;
}

std::string MlpScorer::weight_name(std::size_t layer) {
  return "scorer.layer" + std::to_string(layer) + ".W";
}

std::string MlpScorer::bias_name(std::size_t layer) {
  return "scorer.layer" + std::to_string(layer) + ".b";
}

void MlpScorer::init_params(ParamStore& params, Rng& rng) const {
  std::size_t fan_in = dim_;
  for (std::size_t l = 0; l <= hidden_.size(); ++l) {
    const std::size_t out = l < hidden_.size() ? hidden_[l] : 1;
    params.add(weight_name(l), glorot_matrix(out, fan_in, rng));
    params.add(bias_name(l), Array::zeros({out}));
    fan_in = out;
  }
}

ScoreOutput MlpScorer::score(Tape& tape, const ParamStore& params,
                             Var x) const {
  if (x.value().size() != dim_ || !x.value().is_vector()) {
    throw ConfigError("mlp scorer expects " + std::to_string(dim_) +
                      " features, got " + shape_string(x.value().shape()));
  }
  Var h = x;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    h = tanh_map(affine(h, tape.param(params, weight_name(l)),
                        tape.param(params, bias_name(l))));
  }
  const std::size_t last = hidden_.size();
  Var s = affine(h, tape.param(params, weight_name(last)),
                 tape.param(params, bias_name(last)));
  return {element(s, 0), h};
}

std::unique_ptr<Scorer> make_scorer(const std::string& spec,
                                    std::size_t input_dim) {
  const std::string_view s = trim(spec);
  if (s == "linear") return std::make_unique<LinearScorer>(input_dim);
  if (s == "mlp") {
    return std::make_unique<MlpScorer>(input_dim, std::vector<std::size_t>{32});
  }
  if (s.starts_with("mlp:")) {
    std::vector<std::size_t> hidden;
    for (auto tok : split_on(s.substr(4), ',')) {
      const auto v = parse_int(trim(tok));
      if (!v || *v <= 0) {
        throw ConfigError("bad mlp width '" + std::string(tok) + "' in '" +
                          spec + "'");
      }
      hidden.push_back(static_cast<std::size_t>(*v));
    }
    return std::make_unique<MlpScorer>(input_dim, std::move(hidden));
  }
  throw ConfigError("unknown scorer '" + spec +
                    "' (expected linear, mlp or mlp:<widths>)");
}

void KernelBank::validate() const {
  if (mus.empty() || mus.size() != sigmas.size()) {
    throw ConfigError("kernel bank needs equal, non-zero numbers of means "
                      "and widths");
  }
  for (double s : sigmas) {
    if (!(s > 0.0)) throw ConfigError("kernel widths must be > 0");
  }
}

KernelBank default_kernel_bank() {
  KernelBank bank;
  bank.mus.push_back(1.0);
  bank.sigmas.push_back(1e-3);
  for (int k = 0; k < 10; ++k) {
    bank.mus.push_back(-0.9 + 0.2 * k);
    bank.sigmas.push_back(0.1);
  }
  return bank;
}

FeatureVector knrm_features(const Array& sim, const KernelBank& bank) {
  bank.validate();
  if (!sim.is_matrix() || sim.rows() == 0 || sim.cols() == 0) {
    throw ConfigError("knrm_features needs a non-empty similarity matrix");
  }
  FeatureVector phi(bank.size(), 0.0);
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const double mu = bank.mus[k];
    const double two_var = 2.0 * bank.sigmas[k] * bank.sigmas[k];
    for (std::size_t i = 0; i < sim.rows(); ++i) {
      double soft_tf = 0.0;
      for (std::size_t j = 0; j < sim.cols(); ++j) {
        const double d = sim.at(i, j) - mu;
        soft_tf += std::exp(-d * d / two_var);
      }
      phi[k] += std::log(std::max(kKernelLogFloor, soft_tf));
    }
  }
  return phi;
}

}  // namespace rankforge
