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

#include "rankforge/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include "rankforge/errors.hpp"
#include "rankforge/text.hpp"

namespace rankforge {

std::string canonical_key(std::string_view key) {
  std::string out(trim(key));
  while (out.starts_with("-")) out.erase(0, 1);
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in,
                                     const std::string& source) {
  KeyValueConfig kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source, lineno, "expected 'key = value'");
    }
    const auto key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    kv.set(key, std::string(trim(body.substr(eq + 1))));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in, path);
}

void KeyValueConfig::set(std::string_view key, std::string value) {
  entries_[canonical_key(key)] = std::move(value);
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = entries_.find(canonical_key(key));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void KeyValueConfig::merge(const KeyValueConfig& overrides) {
  for (const auto& [k, v] : overrides.entries_) entries_[k] = v;
}

namespace {

constexpr ConfigKey kTrainKeys[] = {
    {"loss", "cross_entropy | margin | listnet | listmle | approxndcg | expertrank"},
    {"scorer", "linear | mlp | mlp:<w1>,<w2>,..."},
    {"lr", "Adam learning rate"},
    {"adam.beta1", "Adam first-moment decay"},
    {"adam.beta2", "Adam second-moment decay"},
    {"adam.eps", "Adam denominator epsilon"},
    {"epochs", "number of training epochs"},
    {"checkpoint_interval", "snapshot and validate every N epochs"},
    {"val_metric", "checkpoint selection metric, e.g. mrr@10"},
    {"seed", "random seed"},
    {"neg_per_query", "non-relevant documents sampled per training query"},
    {"resample_negatives", "once | epoch"},
    {"margin", "pairwise hinge margin"},
    {"temperature", "ApproxNDCG sigmoid temperature"},
    {"expertrank.pool_sizes", "[pL1,pL2,pH1,pH2]"},
    {"expertrank.gate_hidden", "gating hidden layer width"},
    {"eval_depth", "ranked list depth used for evaluation, or 'all'"},
};

double as_double(const std::string& key, const std::string& v) {
  const auto d = parse_double(trim(v));
  if (!d || !std::isfinite(*d)) {
    throw ConfigError("bad number for '" + key + "': '" + v + "'");
  }
  return *d;
}

std::size_t as_size(const std::string& key, const std::string& v) {
  const auto i = parse_int(trim(v));
  if (!i || *i < 0) {
    throw ConfigError("bad non-negative integer for '" + key + "': '" + v + "'");
  }
  return static_cast<std::size_t>(*i);
}

}  // namespace

std::span<const ConfigKey> train_config_keys() { return kTrainKeys; }

std::vector<std::size_t> parse_size_list(std::string_view text) {
  text = trim(text);
  if (text.starts_with("[")) text.remove_prefix(1);
  if (text.ends_with("]")) text.remove_suffix(1);
  std::vector<std::size_t> out;
  for (auto tok : split_on(text, ',')) {
    const auto v = parse_int(trim(tok));
    if (!v || *v < 0) {
      throw ConfigError("bad integer list '" + std::string(text) + "'");
    }
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (std::size_t v : parse_size_list(text)) out.push_back(v);
  return out;
}

std::vector<std::array<std::size_t, 4>> parse_combinations(
    std::string_view text) {
  text = trim(text);
  const auto& defaults = default_pool_size_sweep();
  if (text.empty() || text == "all") return defaults;
  std::vector<std::array<std::size_t, 4>> out;
  if (text.find('[') != std::string_view::npos) {
    for (auto part : split_on(text, ';')) {
      if (trim(part).empty()) continue;
      const auto sizes = parse_size_list(part);
      if (sizes.size() != 4) {
        throw ConfigError("pool size combination needs 4 values: '" +
                          std::string(part) + "'");
      }
      out.push_back({sizes[0], sizes[1], sizes[2], sizes[3]});
    }
  } else {
    for (std::size_t idx : parse_size_list(text)) {
      if (idx < 1 || idx > defaults.size()) {
        throw ConfigError("combination index " + std::to_string(idx) +
                          " outside 1.." + std::to_string(defaults.size()));
      }
      out.push_back(defaults[idx - 1]);
    }
  }
  if (out.empty()) throw ConfigError("no pool size combination given");
  return out;
}

TrainConfig train_config_from(const KeyValueConfig& kv,
                              std::span<const std::string_view> extra_keys) {
  for (const auto& [key, value] : kv.entries()) {
    const bool known =
        std::any_of(std::begin(kTrainKeys), std::end(kTrainKeys),
                    [&](const ConfigKey& k) { return k.name == key; }) ||
        std::any_of(extra_keys.begin(), extra_keys.end(),
                    [&](std::string_view k) { return canonical_key(k) == key; });
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
  TrainConfig c;
  if (auto v = kv.get("loss")) c.loss = parse_loss_kind(trim(*v));
  if (auto v = kv.get("scorer")) c.scorer = std::string(trim(*v));
  if (auto v = kv.get("lr")) c.adam.lr = as_double("lr", *v);
  if (auto v = kv.get("adam.beta1")) c.adam.beta1 = as_double("adam.beta1", *v);
  if (auto v = kv.get("adam.beta2")) c.adam.beta2 = as_double("adam.beta2", *v);
  if (auto v = kv.get("adam.eps")) c.adam.eps = as_double("adam.eps", *v);
  if (auto v = kv.get("epochs")) c.epochs = as_size("epochs", *v);
  if (auto v = kv.get("checkpoint_interval")) {
    c.checkpoint_interval = as_size("checkpoint_interval", *v);
  }
  if (auto v = kv.get("val_metric")) c.val_metric = MetricSpec::parse(*v);
  if (auto v = kv.get("seed")) c.seed = as_size("seed", *v);
  if (auto v = kv.get("neg_per_query")) {
    c.neg_per_query = as_size("neg_per_query", *v);
  }
  if (auto v = kv.get("resample_negatives")) {
    const auto mode = trim(*v);
    if (mode == "once") c.resample = NegativeResampling::kOnce;
    else if (mode == "epoch") c.resample = NegativeResampling::kEpoch;
    else throw ConfigError("resample_negatives must be 'once' or 'epoch'");
  }
  if (auto v = kv.get("margin")) c.margin = as_double("margin", *v);
  if (auto v = kv.get("temperature")) c.temperature = as_double("temperature", *v);
  if (auto v = kv.get("expertrank.pool_sizes")) {
    const auto sizes = parse_size_list(*v);
    if (sizes.size() != 4) {
      throw ConfigError("expertrank.pool_sizes needs 4 values");
    }
    c.pool_sizes = {sizes[0], sizes[1], sizes[2], sizes[3]};
  }
  if (auto v = kv.get("expertrank.gate_hidden")) {
    c.gate_hidden = as_size("expertrank.gate_hidden", *v);
  }
  if (auto v = kv.get("eval_depth")) {
    c.eval_depth = trim(*v) == "all" ? kNoCutoff : as_size("eval_depth", *v);
  }
  c.validate();
  return c;
}

}  // namespace rankforge
