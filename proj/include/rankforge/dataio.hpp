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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankforge/metrics.hpp"
#include "rankforge/rng.hpp"
#include "rankforge/scorers.hpp"

namespace rankforge {

struct CandidateEntry {
  std::string doc_id;
  int label = 0;
  FeatureVector features;
};

// One query's candidates, the unit of listwise training.
struct CandidateList {
  std::string query_id;
  std::vector<CandidateEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t num_positive() const;
  std::size_t num_negative() const { return size() - num_positive(); }
  std::vector<int> labels() const;
  // Throws DataError unless N >= 1 and M >= 1.
  void check_trainable() const;
};

// `<label> qid:<qid> <fid>:<val> ... # <docid>`, feature ids 1-based. With
// dim == 0 the dimension is the largest feature id in the file.
std::vector<CandidateList> parse_feature_file(const std::string& path,
                                              std::size_t dim = 0);
std::vector<CandidateList> parse_feature_stream(std::istream& in,
                                                const std::string& source,
                                                std::size_t dim = 0);
void write_feature_file(std::ostream& out, std::span<const CandidateList> lists);

// `qid 0 docid rel`; rel > 0 counts as relevant.
Qrels parse_qrels(const std::string& path);
Qrels parse_qrels_stream(std::istream& in, const std::string& source);
void write_qrels(std::ostream& out, const Qrels& qrels);

inline constexpr std::string_view kDefaultRunTag = "rankforge";

// `qid Q0 docid rank score tag`, ranks from 1, scores with 6 decimals.
void write_run(std::ostream& out, std::span<const RankedList> rankings,
               std::string_view tag = kDefaultRunTag);
std::vector<RankedList> parse_run(const std::string& path);
std::vector<RankedList> parse_run_stream(std::istream& in,
                                         const std::string& source);

inline constexpr std::size_t kDefaultNegativesPerQuery = 50;

// All positives in their original order followed by min(m_target, M)
// negatives sampled without replacement, in shuffled order.
CandidateList sample_training_list(const CandidateList& list,
                                   std::size_t m_target, Rng& rng);

struct SyntheticSpec {
  std::size_t dim = 16;
  std::size_t train_queries = 200;
  std::size_t valid_queries = 50;
  std::size_t test_queries = 50;
  std::size_t positives = 1;
  std::size_t negatives = 50;
  double distractor_frac = 0.3;
  double distractor_scale = 0.5;
  double noise = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticData {
  std::vector<CandidateList> train;
  std::vector<CandidateList> valid;
  std::vector<CandidateList> test;
  Qrels qrels;
};

// Features are x = c_q + u + a * w + noise * e, where w is a hidden unit
// relevance direction, c_q a per-query offset, u a content vector
// orthogonal to w and e ~ N(0, I). Relevant documents have a = 1,
// distractors a = distractor_scale and the remaining negatives a = 0.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// The hidden relevance direction used by generate_synthetic for a seed.
FeatureVector synthetic_direction(std::size_t dim, std::uint64_t seed);

}  // namespace rankforge
