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

#include "rankforge/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "rankforge/errors.hpp"
#include "rankforge/text.hpp"

namespace rankforge {

std::size_t CandidateList::num_positive() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.label == 1 ? 1 : 0;
  return n;
}

std::vector<int> CandidateList::labels() const {
  std::vector<int> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.label);
  return out;
}

void CandidateList::check_trainable() const {
  if (num_positive() == 0) {
    throw DataError("query '" + query_id + "' has no relevant document");
  }
  if (num_negative() == 0) {
    throw DataError("query '" + query_id + "' has no non-relevant document");
  }
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

struct RawEntry {
  std::size_t line = 0;
  CandidateEntry entry;
  std::vector<std::pair<std::size_t, double>> sparse;
};

}  // namespace

std::vector<CandidateList> parse_feature_file(const std::string& path,
                                              std::size_t dim) {
  auto in = open_input(path);
  return parse_feature_stream(in, path, dim);
}

std::vector<CandidateList> parse_feature_stream(std::istream& in,
                                                const std::string& source,
                                                std::size_t dim) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<RawEntry>> groups;
  std::size_t max_fid = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    std::string_view comment;
    if (auto hash = body.find('#'); hash != std::string_view::npos) {
      comment = trim(body.substr(hash + 1));
      body = body.substr(0, hash);
    }
    const auto tokens = split_ws(body);
    if (tokens.empty()) continue;
    RawEntry raw;
    raw.line = lineno;
    if (tokens[0] == "0") {
      raw.entry.label = 0;
    } else if (tokens[0] == "1") {
      raw.entry.label = 1;
    } else {
      throw ParseError(source, lineno,
                       "bad label '" + std::string(tokens[0]) +
                           "' (expected 0 or 1)");
    }
    if (tokens.size() < 2 || !tokens[1].starts_with("qid:") ||
        tokens[1].size() == 4) {
      throw ParseError(source, lineno, "expected qid:<id> after the label");
    }
    const std::string qid(tokens[1].substr(4));
    std::size_t last_fid = 0;
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(source, lineno,
                         "bad feature token '" + std::string(tokens[t]) + "'");
      }
      const auto fid = parse_int(tokens[t].substr(0, colon));
      const auto val = parse_double(tokens[t].substr(colon + 1));
      if (!fid || *fid < 1 || !val || !std::isfinite(*val)) {
        throw ParseError(source, lineno,
                         "bad feature token '" + std::string(tokens[t]) + "'");
      }
      const auto f = static_cast<std::size_t>(*fid);
      if (f <= last_fid) {
        throw ParseError(source, lineno, "feature ids must be increasing");
      }
      if (dim != 0 && f > dim) {
        throw ParseError(source, lineno,
                         "feature id " + std::to_string(f) +
                             " exceeds dimension " + std::to_string(dim));
      }
      last_fid = f;
      max_fid = std::max(max_fid, f);
      raw.sparse.emplace_back(f, *val);
    }
    if (!comment.empty()) {
      raw.entry.doc_id = std::string(split_ws(comment).front());
    } else {
      raw.entry.doc_id = qid + "-" + std::to_string(lineno);
    }
    auto [it, inserted] = groups.try_emplace(qid);
    if (inserted) order.push_back(qid);
    it->second.push_back(std::move(raw));
  }
  const std::size_t d = dim != 0 ? dim : max_fid;
  std::vector<CandidateList> lists;
  lists.reserve(order.size());
  for (const auto& qid : order) {
    CandidateList cl;
    cl.query_id = qid;
    std::set<std::string> seen;
    for (auto& raw : groups[qid]) {
      if (!seen.insert(raw.entry.doc_id).second) {
        throw ParseError(source, raw.line,
                         "duplicate document '" + raw.entry.doc_id +
                             "' in query '" + qid + "'");
      }
      raw.entry.features.assign(d, 0.0);
      for (auto [f, v] : raw.sparse) raw.entry.features[f - 1] = v;
      cl.entries.push_back(std::move(raw.entry));
    }
    lists.push_back(std::move(cl));
  }
  return lists;
}

void write_feature_file(std::ostream& out,
                        std::span<const CandidateList> lists) {
  for (const auto& cl : lists) {
    for (const auto& e : cl.entries) {
      out << e.label << " qid:" << cl.query_id;
      for (std::size_t f = 0; f < e.features.size(); ++f) {
        out << ' ' << (f + 1) << ':' << format_double(e.features[f]);
      }
      out << " # " << e.doc_id << '\n';
    }
  }
}

Qrels parse_qrels(const std::string& path) {
  auto in = open_input(path);
  return parse_qrels_stream(in, path);
}

Qrels parse_qrels_stream(std::istream& in, const std::string& source) {
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 4) {
      throw ParseError(source, lineno, "expected 'qid 0 docid rel'");
    }
    const auto rel = parse_int(tokens[3]);
    if (!rel) {
      throw ParseError(source, lineno,
                       "bad relevance '" + std::string(tokens[3]) + "'");
    }
    qrels.set(std::string(tokens[0]), std::string(tokens[2]), *rel > 0 ? 1 : 0);
  }
  return qrels;
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& [qid, docs] : qrels.judgments()) {
    for (const auto& [doc, grade] : docs) {
      out << qid << " 0 " << doc << ' ' << grade << '\n';
    }
  }
}

void write_run(std::ostream& out, std::span<const RankedList> rankings,
               std::string_view tag) {
  for (const auto& rl : rankings) {
    for (std::size_t r = 0; r < rl.size(); ++r) {
      out << rl.query_id << " Q0 " << rl.doc_ids[r] << ' ' << (r + 1) << ' '
          << format_fixed(rl.scores[r], 6) << ' ' << tag << '\n';
    }
  }
}

std::vector<RankedList> parse_run(const std::string& path) {
  auto in = open_input(path);
  return parse_run_stream(in, path);
}

std::vector<RankedList> parse_run_stream(std::istream& in,
                                         const std::string& source) {
  std::vector<RankedList> out;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 6) {
      throw ParseError(source, lineno,
                       "expected 'qid Q0 docid rank score tag'");
    }
    const auto rank = parse_int(tokens[3]);
    const auto score = parse_double(tokens[4]);
    if (!rank || *rank < 1) throw ParseError(source, lineno, "bad rank");
    if (!score) throw ParseError(source, lineno, "bad score");
    const std::string qid(tokens[0]);
    auto [it, inserted] = index.try_emplace(qid, out.size());
    if (inserted) out.push_back(RankedList{qid, {}, {}});
    RankedList& rl = out[it->second];
    rl.doc_ids.emplace_back(tokens[2]);
    rl.scores.push_back(*score);
  }
  return out;
}

CandidateList sample_training_list(const CandidateList& list,
                                   std::size_t m_target, Rng& rng) {
  CandidateList out;
  out.query_id = list.query_id;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    if (list.entries[i].label == 1) {
      out.entries.push_back(list.entries[i]);
    } else {
      negatives.push_back(i);
    }
  }
  if (out.entries.empty()) {
    throw DataError("query '" + list.query_id + "' has no relevant document");
  }
  if (negatives.empty() || m_target == 0) {
    throw DataError("query '" + list.query_id +
                    "' has no non-relevant document to sample");
  }
  rng.shuffle(negatives);
  negatives.resize(std::min(m_target, negatives.size()));
  for (std::size_t i : negatives) out.entries.push_back(list.entries[i]);
  return out;
}

void SyntheticSpec::validate() const {
  if (dim < 2) throw ConfigError("synthetic data needs --dim >= 2");
  if (train_queries < 1 || valid_queries < 1 || test_queries < 1) {
    throw ConfigError("synthetic data needs >= 1 query per split");
  }
  if (positives < 1 || negatives < 1) {
    throw ConfigError("synthetic data needs --pos >= 1 and --neg >= 1");
  }
  if (!(distractor_frac >= 0.0 && distractor_frac < 1.0)) {
    throw ConfigError("--distractor-frac must lie in [0, 1)");
  }
  if (!(noise >= 0.0)) throw ConfigError("--noise must be >= 0");
  if (!std::isfinite(distractor_scale)) {
    throw ConfigError("distractor scale must be finite");
  }
}

namespace {

enum Stream : std::uint64_t { kDirection = 1, kQueryBase = 1000 };

FeatureVector gaussian(std::size_t dim, Rng& rng) {
  FeatureVector v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

std::string query_name(std::size_t q) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "q%05zu", q);
  return buf;
}

CandidateList synthetic_query(const SyntheticSpec& spec,
                              const FeatureVector& direction, std::size_t q) {
  Rng rng = Rng::derived(spec.seed, kQueryBase + q);
  const std::size_t d = spec.dim;
  const FeatureVector offset = gaussian(d, rng);
  const auto distractors = static_cast<std::size_t>(
      std::llround(spec.distractor_frac * static_cast<double>(spec.negatives)));

  struct Doc {
    int label;
    double alignment;
  };
  std::vector<Doc> docs;
  for (std::size_t i = 0; i < spec.positives; ++i) docs.push_back({1, 1.0});
  for (std::size_t i = 0; i < spec.negatives; ++i) {
    docs.push_back({0, i < distractors ? spec.distractor_scale : 0.0});
  }
  rng.shuffle(docs);

  CandidateList cl;
  cl.query_id = query_name(q);
  for (std::size_t j = 0; j < docs.size(); ++j) {
    FeatureVector content = gaussian(d, rng);
    double along = 0.0;
    for (std::size_t k = 0; k < d; ++k) along += content[k] * direction[k];
    CandidateEntry e;
    e.label = docs[j].label;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-d%03zu", j);
    e.doc_id = cl.query_id + buf;
    e.features.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double orthogonal = content[k] - along * direction[k];
      e.features[k] = 0.5 * offset[k] + orthogonal +
                      docs[j].alignment * direction[k] +
                      spec.noise * rng.normal();
    }
    cl.entries.push_back(std::move(e));
  }
  return cl;
}

}  // namespace

FeatureVector synthetic_direction(std::size_t dim, std::uint64_t seed) {
  Rng rng = Rng::derived(seed, kDirection);
  FeatureVector w = gaussian(dim, rng);
  double norm = 0.0;
  for (double x : w) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : w) x /= norm;
  return w;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const FeatureVector direction = synthetic_direction(spec.dim, spec.seed);
  SyntheticData data;
  std::size_t q = 0;
  for (auto [split, n] : {std::pair{&data.train, spec.train_queries},
                          {&data.valid, spec.valid_queries},
                          {&data.test, spec.test_queries}}) {
    for (std::size_t i = 0; i < n; ++i, ++q) {
      split->push_back(synthetic_query(spec, direction, q));
      for (const auto& e : split->back().entries) {
        if (e.label == 1) data.qrels.set(split->back().query_id, e.doc_id, 1);
      }
    }
  }
  return data;
}

}  // namespace rankforge
